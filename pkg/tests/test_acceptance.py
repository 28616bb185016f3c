"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import json
import math
from pathlib import Path

import numpy as np
import pytest

from orbitmetric import oracle
from orbitmetric.assembly import assemble, build_exceptional_tube, design_tube_report
from orbitmetric.curvature import (
    FIBER_POSITIVITY,
    NU0,
    Hopf,
    TubeParams,
    nu_bound,
    perelman_check,
    ricci_g1,
    round_sphere_value,
    tube_grid_table,
)
from orbitmetric.errors import InfeasibleParams
from orbitmetric.profiles import GridSpec, constant_profile, jet_match, mirror, sine_profile

EXAMPLES = Path(__file__).resolve().parents[1] / "docs" / "examples"
SEED = 20240601
N_TUBES = 20
KNOT_GAP = 1e-3


def report(capsys, number, title, ok, detail):
    with capsys.disabled():
        print(f"\n[criterion {number:2d}] {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, detail


@pytest.fixture(scope="module")
def random_tubes():
    rng = np.random.default_rng(SEED)
    tubes = []
    for _ in range(N_TUBES):
        lam, Lam, eps = rng.uniform(0.5, 3), rng.uniform(0.1, 0.9), rng.uniform(0.2, 1)
        p = TubeParams(1, 1, eps, 0.5 * nu_bound(lam, eps), lam, Lam, 0.01)
        tubes.append(design_tube_report(p))
    return tubes


def radii_off_knots(f, h, rng, count, lo):
    knots = np.array(sorted(set(f.knots) | set(h.knots)))
    hi = h.domain[1] - 0.01
    out = []
    while len(out) < count:
        r = rng.uniform(lo, hi)
        if np.min(np.abs(knots - r)) >= KNOT_GAP:
            out.append(r)
    return out


def test_criterion_01_round_sphere_identity(capsys):
    sp = sine_profile()
    r = np.linspace(0.05, math.pi / 2, 200)
    j = sp.eval_grid(r)
    worst = 0.0
    for q, m in ((1, 1), (1, 2), (3, 1)):
        ric = ricci_g1(j, j, Hopf(q, m))
        n = round_sphere_value(q, m)
        worst = max(worst, *(float(np.max(np.abs(c - n))) for c in ric.components()))
    rows = oracle.compare_doubly_warped(sp, sp, np.random.default_rng(SEED).uniform(0.1, 1.5, 20),
                                        np.random.default_rng(SEED + 1))
    rel = max(row["rel_err"] for row in rows)
    ok = worst <= 1e-10 and rel <= 1e-4
    report(capsys, 1, "round-sphere identity", ok, f"closed-form |err| {worst:.2e}, oracle rel_err {rel:.2e}")


def test_criterion_02_berger_cross_check(capsys):
    worst, at_one = 0.0, None
    for c in (0.5, 1.0, 1.5):
        f, h = constant_profile(c, 0.0, 1.0), constant_profile(1.0, 0.0, 1.0)
        closed = ricci_g1(f.eval(0.5), h.eval(0.5), Hopf(1, 1))
        assert closed.components() == pytest.approx((0.0, 4 - 2 * c * c, 2 * c * c), abs=1e-14)
        s = oracle.ricci(oracle.berger_chart(c), [1.0, 2.0, 3.0])
        want = np.sort([2 * c * c, 4 - 2 * c * c, 4 - 2 * c * c])
        worst = max(worst, float(np.max(np.abs(s.ricci_eigen - want))))
        if c == 1.0:
            at_one = (closed.horizontal, closed.fiber, float(np.max(np.abs(s.ricci_eigen - 2))))
    ok = worst <= 1e-4 and at_one[0] == 2.0 and at_one[1] == 2.0 and at_one[2] <= 1e-4
    report(capsys, 2, "Berger cross-check", ok, f"max eigenvalue err {worst:.2e}, c=1 closed form {at_one[:2]}")


def test_criterion_03_formula_cross_validation(capsys, random_tubes):
    rng = np.random.default_rng(SEED + 3)
    rel = 0.0
    for d in random_tubes:
        rs = radii_off_knots(d.f, d.h, rng, 5, 0.06)
        rows = oracle.compare_doubly_warped(d.f, d.h, rs, rng)
        rel = max(rel, max(row["rel_err"] for row in rows))
    report(capsys, 3, "formula cross-validation", rel <= 1e-4, f"{len(random_tubes)} tubes x 5 radii, max rel_err {rel:.2e}")


def test_criterion_04_positivity_suite(capsys, random_tubes):
    keys = ("ric_radial", "ric_horizontal", "ric_fiber", "rQ_radial", "ineq521_margin")
    worst = {k: math.inf for k in keys}
    for d in random_tubes:
        lo, hi = d.h.domain
        t = tube_grid_table(d.f, d.h, d.params, GridSpec(2048, max(lo, 1e-3), hi))
        for k in keys:
            worst[k] = min(worst[k], float(np.min(t[k])))
    ok = all(v > 0 for v in worst.values())
    report(capsys, 4, "positivity suite", ok, ", ".join(f"{k} {v:.3g}" for k, v in worst.items()))


def test_criterion_05_strict_bound(capsys):
    lam, eps, Lam = 1.3, 0.6, 0.4
    bound = nu_bound(lam, eps)
    try:
        design_tube_report(TubeParams(1, 1, eps, bound, lam, Lam, 0.01))
        named = None
    except InfeasibleParams as exc:
        named = exc.constraint
    near = design_tube_report(TubeParams(1, 1, eps, 0.999 * bound, lam, Lam, 0.01))
    ok = named == "nu < lambda*eps/(1+eps)" and near.report.passed
    report(capsys, 5, "strict nu bound", ok, f"at bound: {named!r}; at 0.999 bound: pass={near.report.passed}")


def test_criterion_06_perelman_window(capsys):
    rng = np.random.default_rng(SEED + 6)
    bad = 0
    for _ in range(100):
        lam = rng.uniform(0.2, 3)
        p = rng.uniform(-1 / lam + 0.05, 1)
        mid = 0.5 * (-1 + lam * p)
        if not perelman_check(lam, p, mid)["pass"] or perelman_check(lam, p, lam * p)["pass"]:
            bad += 1
    report(capsys, 6, "Perelman window", bad == 0, f"{100 - bad}/100 samples behave")


def test_criterion_07_double(capsys):
    s = sine_profile()
    res = jet_match(s, mirror(s), order=3).residuals
    smin = oracle.sectional_min(oracle.chart_doubly_warped(s, s), 12, 12, 0)
    ok = res == (0.0, 0.0, 0.0, 0.0) and smin >= 1 - 1e-3
    report(capsys, 7, "double of the sine tube", ok, f"jet residuals {res}, sampled sectional min {smin:.6f}")


def test_criterion_08_exceptional_tubes(capsys):
    rng = np.random.default_rng(SEED + 8)
    worst, failed = math.inf, 0
    for _ in range(20):
        n = int(rng.integers(2, 7))
        lam, Lam = rng.uniform(0.5, 3), rng.uniform(0.1, 0.9)
        _, rep = build_exceptional_tube(n, lam, Lam, 0.1)
        failed += not rep.passed
        worst = min(worst, rep["ricci_radial"].worst_margin, rep["ricci_fiber"].worst_margin)
    ok = failed == 0 and worst > 0
    report(capsys, 8, "exceptional tubes", ok, f"{20 - failed}/20 pass, min Ricci margin {worst:.3g}")


def test_criterion_09_golden_assemblies(capsys):
    lines, ok = [], True
    for name in ("suspension_two_tubes.json", "disc_single_orbit.json", "double.json"):
        rep = assemble(json.loads((EXAMPLES / name).read_text()))
        strict = [e.worst_margin for _, e in rep.margins() if e.strict]
        good = rep.overall and min(strict) > 0 and set(rep.assumptions) <= {FIBER_POSITIVITY, NU0}
        ok &= good
        lines.append(f"{name} overall={rep.overall} min strict margin {min(strict):.3g}")
    report(capsys, 9, "golden assemblies", ok, "; ".join(lines))


def test_criterion_10_oracle_convergence(capsys):
    sp = sine_profile()
    ch = oracle.chart_doubly_warped(sp, sp)
    x = [0.9, 1.3, 2.0, 1.0]
    e1 = float(np.max(np.abs(oracle.ricci(ch, x, 1e-4).ricci_eigen - 3)))
    e2 = float(np.max(np.abs(oracle.ricci(ch, x, 5e-5).ricci_eigen - 3)))
    report(capsys, 10, "oracle convergence", e1 / e2 >= 3, f"error {e1:.2e} -> {e2:.2e}, ratio {e1 / e2:.2f}")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
