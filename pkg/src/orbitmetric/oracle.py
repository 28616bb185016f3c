"""Finite-difference curvature of metrics given in coordinates.

This is the independent check on :mod:`orbitmetric.curvature`: nothing here
knows a curvature formula. Metric components are differenced once to get the
Christoffel symbols, and the Christoffel symbols are differenced again to get
the Riemann tensor (second-order central stencils throughout).

Metric callbacks are evaluated at ``np.longdouble`` points. Charts built in
this module keep that precision through ``np.sin``/``np.cos`` and profile
evaluation, which pushes the roundoff floor of the first difference below the
truncation error; all subsequent linear algebra is float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import linalg

from .curvature import Hopf, ricci_g1, ricci_warped_interval
from .errors import InvalidParam, OutOfDomain, Singular
from .profiles import Profile

DEFAULT_STEP = 1e-5
COND_MAX = 1e12
EIG_MIN = 1e-10
REL_FLOOR = 1e-2


@dataclass(frozen=True)
class ChartMetric:
    dim: int
    components: Callable[[np.ndarray], np.ndarray]
    valid_region: np.ndarray
    name: str
    # optional g-orthonormal frame (columns) and a label per column
    frame: Callable[[np.ndarray], np.ndarray] | None = None
    frame_labels: tuple | None = None
    scale: float = 1.0

    def g(self, x) -> np.ndarray:
        return np.asarray(self.components(np.asarray(x, dtype=np.longdouble)))

    def contains(self, x, margin=0.0) -> bool:
        x = np.asarray(x, dtype=float)
        lo, hi = self.valid_region[:, 0], self.valid_region[:, 1]
        return bool(np.all(x >= lo + margin) and np.all(x <= hi - margin))


@dataclass
class CurvatureSample:
    point: np.ndarray
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    ricci_eigen: np.ndarray
    sec_min_sampled: float
    symmetry_residual: float


def _check_metric(g):
    if not np.allclose(g, g.T, rtol=0, atol=1e-12 * max(1.0, np.abs(g).max())):
        raise Singular("metric components are not symmetric")
    w = np.linalg.eigvalsh(g)
    if w[0] <= EIG_MIN or w[-1] / w[0] > COND_MAX:
        raise Singular(f"metric is degenerate here (eigenvalues {w[0]:.3e} .. {w[-1]:.3e})")


def _step(metric, step):
    return DEFAULT_STEP * metric.scale if step is None else step


def christoffel(metric: ChartMetric, x, step: float | None = None) -> np.ndarray:
    """Gamma[k, i, j] = 1/2 g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    step = _step(metric, step)
    x = np.asarray(x, dtype=np.longdouble)
    n = metric.dim
    hstep = np.longdouble(step)
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n, dtype=np.longdouble)
        e[k] = hstep
        dg[k] = ((metric.g(x + e) - metric.g(x - e)) / (2 * hstep)).astype(float)
    g = metric.g(x).astype(float)
    _check_metric(g)
    ginv = np.linalg.inv(g)
    # lower[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    lower = np.einsum("ijl->lij", dg) + np.einsum("jil->lij", dg) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, lower)


def ricci(metric: ChartMetric, x, step: float | None = None) -> CurvatureSample:
    step = _step(metric, step)
    x = np.asarray(x, dtype=np.longdouble)
    if not metric.contains(x.astype(float), 2 * step):
        raise OutOfDomain(f"{metric.name}: point {x.astype(float)} is not inside the valid region")
    n = metric.dim
    gam = christoffel(metric, x, step)
    dgam = np.empty((n, n, n, n))  # dgam[m] = d_m Gamma
    for m_ in range(n):
        e = np.zeros(n, dtype=np.longdouble)
        e[m_] = step
        dgam[m_] = (christoffel(metric, x + e, step) - christoffel(metric, x - e, step)) / (2 * step)
    # R^i_{jkl} = d_k G^i_{lj} - d_l G^i_{kj} + G^i_{km} G^m_{lj} - G^i_{lm} G^m_{kj}
    riem = (
        np.einsum("kilj->ijkl", dgam)
        - np.einsum("likj->ijkl", dgam)
        + np.einsum("ikm,mlj->ijkl", gam, gam)
        - np.einsum("ilm,mkj->ijkl", gam, gam)
    )
    ric = np.einsum("ijil->jl", riem)
    g = metric.g(x).astype(float)
    ric_sym = 0.5 * (ric + ric.T)
    eig = np.sort(linalg.eigh(ric_sym, g, eigvals_only=True))
    low = np.einsum("im,mjkl->ijkl", g, riem)
    scale = max(1.0, np.abs(low).max())
    sym = float(np.abs(low + np.einsum("ijkl->jikl", low)).max() / scale)
    secs = [
        _sectional(low, g, np.eye(n)[a], np.eye(n)[b]) for a in range(n) for b in range(a + 1, n)
    ]
    return CurvatureSample(x.astype(float), g, gam, riem, ric, eig, float(min(secs)), sym)


def _sectional(low, g, u, v):
    num = np.einsum("ijkl,i,j,k,l->", low, u, v, u, v)
    den = (u @ g @ u) * (v @ g @ v) - (u @ g @ v) ** 2
    return num / den


def sectional(sample: CurvatureSample, u, v) -> float:
    low = np.einsum("im,mjkl->ijkl", sample.metric, sample.riemann)
    return float(_sectional(low, sample.metric, np.asarray(u, float), np.asarray(v, float)))


def random_point(metric: ChartMetric, rng, margin: float) -> np.ndarray:
    lo, hi = metric.valid_region[:, 0] + margin, metric.valid_region[:, 1] - margin
    return lo + (hi - lo) * rng.random(metric.dim)


def sectional_min(metric: ChartMetric, points: int, planes: int, seed: int = 0, step: float | None = None) -> float:
    """Smallest sectional curvature over random 2-planes at random points."""
    rng = np.random.default_rng(seed)
    step = _step(metric, step)
    best = math.inf
    for _ in range(points):
        x = random_point(metric, rng, 4 * step)
        s = ricci(metric, x, step)
        low = np.einsum("im,mjkl->ijkl", s.metric, s.riemann)
        for _ in range(planes):
            u, v = rng.standard_normal(metric.dim), rng.standard_normal(metric.dim)
            best = min(best, float(_sectional(low, s.metric, u, v)))
    return best


def frame_ricci(metric: ChartMetric, sample: CurvatureSample) -> tuple[dict, float]:
    """Ricci in the chart's orthonormal frame.

    Returns ``(by_label, offdiag)``: the mean diagonal entry for each frame
    label and the largest off-diagonal entry, which measures how well the
    frame directions align with Ricci eigenvectors.
    """
    if metric.frame is None:
        raise InvalidParam(f"chart {metric.name} has no frame")
    E = metric.frame(sample.point)
    F = E.T @ (0.5 * (sample.ricci + sample.ricci.T)) @ E
    out = {}
    for lab in dict.fromkeys(metric.frame_labels):
        idx = [i for i, lb in enumerate(metric.frame_labels) if lb == lab]
        out[lab] = float(np.mean(np.diag(F)[idx]))
    off = F - np.diag(np.diag(F))
    return out, float(np.abs(off).max()) if metric.dim > 1 else 0.0


# --------------------------------------------------------------------------
# charts


def flat_chart(dim: int, name: str = "flat") -> ChartMetric:
    region = np.array([[-1.0, 1.0]] * dim)
    return ChartMetric(dim, lambda x: np.eye(dim, dtype=x.dtype), region, name,
                       frame=lambda x: np.eye(dim), frame_labels=("flat",) * dim)


def round_sphere_chart(d: int, radius: float = 1.0) -> ChartMetric:
    """Polar coordinates (t_1 .. t_d) on the round d-sphere."""
    if d < 1:
        raise InvalidParam("sphere dimension must be >= 1")

    def comps(x):
        diag = [radius**2 * x[0] ** 0]
        w = radius**2 * x[0] ** 0
        for i in range(d - 1):
            w = w * np.sin(x[i]) ** 2
            diag.append(w)
        return np.diag(np.array(diag, dtype=x.dtype))

    def frame(x):
        diag = [radius]
        w = radius
        for i in range(d - 1):
            w = w * math.sin(x[i])
            diag.append(w)
        return np.diag(1.0 / np.array(diag))

    region = np.array([[0.2, math.pi - 0.2]] * (d - 1) + [[0.0, 2 * math.pi]])
    return ChartMetric(d, comps, region, f"round-s{d}", frame, ("sphere",) * d, radius)


def _euler_block(x, hv, fv, dtype):
    # (h^2/4)(dth^2 + sin^2 th dph^2) + (f^2/4)(dps + cos th dph)^2 in (th, ph, ps)
    th = x
    s, c = np.sin(th), np.cos(th)
    a, b = hv * hv / 4, fv * fv / 4
    return np.array(
        [[a, 0 * a, 0 * a], [0 * a, a * s * s + b * c * c, b * c], [0 * a, b * c, b]], dtype=dtype
    )


def _euler_frame(th, hv, fv):
    cof = np.array([[hv / 2, 0, 0], [0, hv / 2 * math.sin(th), 0], [0, fv / 2 * math.cos(th), fv / 2]])
    return np.linalg.inv(cof)


EULER_REGION = [[0.2, math.pi - 0.2], [0.0, 2 * math.pi], [0.0, 4 * math.pi]]


def berger_chart(c: float, hscale: float = 1.0) -> ChartMetric:
    """S^3 with the Hopf base scaled by hscale and the fibre by c; (1, 1) is the unit sphere."""

    def comps(x):
        return _euler_block(x[0], hscale, c, x.dtype)

    def frame(x):
        return _euler_frame(float(x[0]), hscale, c)

    return ChartMetric(3, comps, np.array(EULER_REGION), f"berger-c{c:g}", frame,
                       ("horizontal", "horizontal", "fiber"))


def chart_doubly_warped(f: Profile, h: Profile, q: int = 1, m: int = 1, r_range=None) -> ChartMetric:
    """dr^2 + h(r)^2 (sigma1^2 + sigma2^2)/4 + f(r)^2 sigma3^2/4 on (0, R) x S^3.

    The 1/4 makes f = h = 1 the unit round S^3, whose Hopf base is CP^1 with
    its Fubini-Study metric.
    """
    if (q, m) != (1, 1):
        raise InvalidParam(f"the doubly warped chart is only available for q=1, m=1, got q={q}, m={m}")
    if f.domain != h.domain:
        raise InvalidParam("f and h must share a domain")
    lo, hi = r_range if r_range is not None else (max(f.domain[0], 0.05), f.domain[1])

    def comps(x):
        r = x[0]
        fv, hv = f.eval(r).value, h.eval(r).value
        g = np.zeros((4, 4), dtype=x.dtype)
        g[0, 0] = 1
        g[1:, 1:] = _euler_block(x[1], hv, fv, x.dtype)
        return g

    def frame(x):
        r = float(x[0])
        E = np.zeros((4, 4))
        E[0, 0] = 1.0
        E[1:, 1:] = _euler_frame(float(x[1]), h.eval(r).value, f.eval(r).value)
        return E

    region = np.array([[lo, hi]] + EULER_REGION)
    return ChartMetric(4, comps, region, "doubly-warped", frame, ("radial", "horizontal", "horizontal", "fiber"))


def chart_warped_interval(psi: Profile, d: int, r_range=None) -> ChartMetric:
    """dr^2 + psi(r)^2 ds_d^2 with the unit round d-sphere in polar coordinates."""
    sph = round_sphere_chart(d)
    lo, hi = r_range if r_range is not None else (max(psi.domain[0], 0.05), psi.domain[1])

    def comps(x):
        p = psi.eval(x[0]).value
        g = np.zeros((d + 1, d + 1), dtype=x.dtype)
        g[0, 0] = 1
        g[1:, 1:] = p * p * sph.components(x[1:])
        return g

    def frame(x):
        E = np.zeros((d + 1, d + 1))
        E[0, 0] = 1.0
        E[1:, 1:] = sph.frame(x[1:]) / psi.eval(float(x[0])).value
        return E

    region = np.vstack([[lo, hi], sph.valid_region])
    return ChartMetric(d + 1, comps, region, f"warped-interval-d{d}", frame, ("radial",) + ("fiber",) * d)


# --------------------------------------------------------------------------
# comparisons against closed forms


def rel_err(closed, oracle) -> float:
    return abs(closed - oracle) / max(abs(closed), REL_FLOOR)


def compare_doubly_warped(f: Profile, h: Profile, rs, rng=None, chart=None, step=None, name=None) -> list:
    """Rows {chart, point, component, closed_form, oracle, rel_err} for g1(f, h) at radii ``rs``.

    The angular coordinates of each sample are drawn from ``rng``; the metric
    is cohomogeneity one so they only move the stencil.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    chart = chart or chart_doubly_warped(f, h)
    step = _step(chart, step)
    rows = []
    for r in rs:
        ang = random_point(chart, rng, 4 * step)[1:]
        x = np.concatenate([[r], ang])
        s = ricci(chart, x, step)
        by_label, off = frame_ricci(chart, s)
        closed = ricci_g1(f.eval(float(r)), h.eval(float(r)), Hopf(1, 1))
        for comp, cf in zip(("radial", "horizontal", "fiber"), closed.components()):
            rows.append(_row(name or chart.name, x, comp, cf, by_label[comp]))
        rows.append(_row(name or chart.name, x, "mixed", 0.0, off))
    return rows


def compare_warped_interval(psi: Profile, d: int, rs=(), rng=None, step=None) -> list:
    """Rows comparing the warped-interval closed form (unit sphere fibre) with the oracle."""
    rng = rng if rng is not None else np.random.default_rng(0)
    chart = chart_warped_interval(psi, d)
    step = _step(chart, step)
    rows = []
    for r in rs:
        x = np.concatenate([[r], random_point(chart, rng, 4 * step)[1:]])
        s = ricci(chart, x, step)
        by_label, off = frame_ricci(chart, s)
        closed = ricci_warped_interval(psi.eval(float(r)), d, d - 1)
        for comp in ("radial", "fiber"):
            rows.append(_row(chart.name, x, comp, closed[comp], by_label[comp]))
        rows.append(_row(chart.name, x, "mixed", 0.0, off))
    return rows


def compare_berger(c: float, points: int = 5, rng=None, step=None) -> list:
    rng = rng if rng is not None else np.random.default_rng(0)
    chart = berger_chart(c)
    step = _step(chart, step)
    from .profiles import Jet2

    closed = ricci_g1(Jet2(c, 0.0, 0.0), Jet2(1.0, 0.0, 0.0), Hopf(1, 1))
    rows = []
    for _ in range(points):
        x = random_point(chart, rng, 4 * step)
        s = ricci(chart, x, step)
        by_label, off = frame_ricci(chart, s)
        rows.append(_row(chart.name, x, "horizontal", closed.horizontal, by_label["horizontal"]))
        rows.append(_row(chart.name, x, "fiber", closed.fiber, by_label["fiber"]))
        rows.append(_row(chart.name, x, "mixed", 0.0, off))
        expect = np.sort([closed.fiber, closed.horizontal, closed.horizontal])
        for k, (a, b) in enumerate(zip(expect, s.ricci_eigen)):
            rows.append(_row(chart.name, x, f"eigen{k}", float(a), float(b)))
    return rows


def _row(chart, x, comp, closed, oracle):
    return {
        "chart": chart, "point": [float(v) for v in np.asarray(x, dtype=float)], "component": comp,
        "closed_form": float(closed), "oracle": float(oracle), "rel_err": rel_err(float(closed), float(oracle)),
    }
