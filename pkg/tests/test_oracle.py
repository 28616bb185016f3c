import math

import numpy as np
import pytest

from orbitmetric import oracle
from orbitmetric.errors import InvalidParam, OutOfDomain, Singular
from orbitmetric.profiles import build_f, build_h, constant_profile, sine_profile


def test_flat_christoffel_vanish():
    ch = oracle.flat_chart(3)
    assert np.max(np.abs(oracle.christoffel(ch, [0.1, -0.2, 0.3]))) == 0.0


def test_scaled_identity_christoffel_vanish():
    ch = oracle.ChartMetric(2, lambda x: 4.0 * np.eye(2, dtype=x.dtype), np.array([[-1, 1], [-1, 1.0]]), "c2")
    assert np.max(np.abs(oracle.christoffel(ch, [0.3, 0.4]))) == 0.0


def test_round_s2_christoffel():
    g = oracle.christoffel(oracle.round_sphere_chart(2), [math.pi / 4, 1.0])
    assert g[0, 1, 1] == pytest.approx(-0.5, abs=1e-9)
    assert g[1, 0, 1] == pytest.approx(1.0, abs=1e-9)
    assert g[1, 1, 0] == g[1, 0, 1]


@pytest.mark.parametrize("d", [2, 3, 4])
def test_round_sphere_ricci(d):
    ch = oracle.round_sphere_chart(d)
    x = oracle.random_point(ch, np.random.default_rng(d), 0.01)
    s = oracle.ricci(ch, x)
    assert np.max(np.abs(s.ricci_eigen - (d - 1))) <= 1e-4
    assert s.symmetry_residual <= 1e-6
    assert np.max(np.abs(s.riemann + np.einsum("ijkl->ijlk", s.riemann))) <= 1e-6 * np.max(np.abs(s.riemann))
    assert np.max(np.abs(s.ricci - s.ricci.T)) <= 1e-6


def test_round_s4_as_doubly_warped():
    sp = sine_profile()
    ch = oracle.chart_doubly_warped(sp, sp)
    s = oracle.ricci(ch, [0.7, 1.1, 2.0, 3.0])
    assert np.max(np.abs(s.ricci_eigen - 3)) <= 1e-4


@pytest.mark.parametrize("c", [0.5, 1.0, 1.5])
def test_berger_eigenvalues(c):
    s = oracle.ricci(oracle.berger_chart(c), [1.0, 2.0, 3.0])
    want = np.sort([2 * c * c, 4 - 2 * c * c, 4 - 2 * c * c])
    assert np.max(np.abs(s.ricci_eigen - want)) <= 1e-4


def test_berger_frame_directions():
    ch = oracle.berger_chart(0.5)
    s = oracle.ricci(ch, [1.0, 2.0, 3.0])
    by_label, off = oracle.frame_ricci(ch, s)
    assert by_label["fiber"] == pytest.approx(0.5, abs=1e-6)
    assert by_label["horizontal"] == pytest.approx(3.5, abs=1e-6)
    assert off <= 1e-6


def test_unit_sphere_cross_section():
    one = constant_profile(1.0, 0.0, 1.0)
    ch = oracle.chart_doubly_warped(one, one)
    s = oracle.ricci(ch, [0.5, 1.0, 2.0, 3.0])
    by_label, off = oracle.frame_ricci(ch, s)
    assert by_label["radial"] == pytest.approx(0.0, abs=1e-6)
    assert by_label["horizontal"] == pytest.approx(2.0, abs=1e-6)
    assert by_label["fiber"] == pytest.approx(2.0, abs=1e-6)


def test_calibration_unit_round_s3():
    # f = h = 1 slice of the doubly warped chart is the unit round S^3
    assert oracle.sectional_min(oracle.berger_chart(1.0), 3, 10, 0) == pytest.approx(1.0, abs=1e-3)


def test_sectional_min_examples():
    assert oracle.sectional_min(oracle.round_sphere_chart(3), 3, 10, 1) == pytest.approx(1.0, abs=1e-3)
    assert abs(oracle.sectional_min(oracle.flat_chart(3), 3, 10, 1)) <= 1e-6
    sp = sine_profile()
    assert oracle.sectional_min(oracle.chart_doubly_warped(sp, sp), 3, 10, 2) >= 1 - 1e-3


def test_sectional_min_is_deterministic():
    ch = oracle.berger_chart(0.7)
    assert oracle.sectional_min(ch, 2, 5, 3) == oracle.sectional_min(ch, 2, 5, 3)


def test_berger_sectional_range():
    # Berger spheres with fibre c have sectional curvature in [c^2, 4 - 3c^2] for c <= 1
    c = 0.5
    smin = oracle.sectional_min(oracle.berger_chart(c), 4, 40, 0)
    assert smin >= c * c - 1e-4


def test_doubly_warped_matches_closed_form_on_design():
    h, R = build_h(1.0, 0.3, 0.1)
    f = build_f(h, 0.4, 0.01, 0.01 * R)
    rows = oracle.compare_doubly_warped(f, h, [0.2, 0.5, 0.9, 1.2], np.random.default_rng(0))
    assert max(r["rel_err"] for r in rows) <= 1e-4
    assert {r["component"] for r in rows} == {"radial", "horizontal", "fiber", "mixed"}


def test_warped_interval_matches_closed_form():
    h, R = build_h(1.5, 0.4, 0.1)
    rows = oracle.compare_warped_interval(h, 2, [0.3, 0.8, 1.4])
    assert max(r["rel_err"] for r in rows) <= 1e-4


def test_convergence_is_second_order():
    sp = sine_profile()
    ch = oracle.chart_doubly_warped(sp, sp)
    x = [0.9, 1.3, 2.0, 1.0]
    e1 = np.max(np.abs(oracle.ricci(ch, x, 1e-4).ricci_eigen - 3))
    e2 = np.max(np.abs(oracle.ricci(ch, x, 5e-5).ricci_eigen - 3))
    assert e1 / e2 >= 3


def test_unsupported_hopf_chart():
    sp = sine_profile()
    with pytest.raises(InvalidParam):
        oracle.chart_doubly_warped(sp, sp, q=3)
    with pytest.raises(InvalidParam):
        oracle.chart_doubly_warped(sp, sp, m=2)


def test_point_outside_region():
    with pytest.raises(OutOfDomain):
        oracle.ricci(oracle.round_sphere_chart(2), [0.0, 1.0])


def test_degenerate_metric():
    ch = oracle.ChartMetric(2, lambda x: np.diag(np.array([1.0, 1e-14], dtype=x.dtype)),
                            np.array([[-1, 1], [-1, 1.0]]), "thin")
    with pytest.raises(Singular):
        oracle.christoffel(ch, [0.0, 0.0])


def test_rel_err_floor():
    assert oracle.rel_err(0.0, 1e-6) == pytest.approx(1e-4)
    assert oracle.rel_err(2.0, 2.0002) == pytest.approx(1e-4)
