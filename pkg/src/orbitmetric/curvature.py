"""Closed-form Ricci curvatures and the inequality checks built on them.

The metric ``g1(f, h) = dr^2 + h(r)^2 g_P + f(r)^2 ds_q^2`` lives on the disc
bundle over a Hopf base ``P`` (``CP^m`` for ``q = 1``, ``HP^m`` for ``q = 3``).
Its quotient by the diagonal ``S^q`` action with the homogeneous fibre
``(G/K, nu g0)`` scaled by ``1 + eps`` along the ``H``-orbits is the tube metric
``g_Q``. Everything here is vectorised: jets may hold scalars or arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import InvalidParam, Singular
from .profiles import GridSpec, Jet2, Profile, SineArc, default_grid

NONSTRICT_TOL = 1e-12
PLATEAU_TOL = 1e-10
BOUNDARY_TOL = 1e-10

FIBER_POSITIVITY = "fiber_positivity"
NU0 = "nu0"
ASSUMPTION_TEXT = {
    FIBER_POSITIVITY: (
        "the normal homogeneous metric on G/K stretched by 1+eps along the H-orbits has Ric > 0 "
        "for eps < eps0; eps0 is supplied, not computed. Positivity of the quotient in the "
        "w, X, Delta directions and their mixtures with d/dr rests on this."
    ),
    NU0: "the submersion metric on the principal part has Ric > 0 for every nu < nu0; nu0 is supplied, not computed.",
}


class Hopf(NamedTuple):
    q: int
    m: int


def _check_hopf(q, m):
    if q not in (1, 3):
        raise InvalidParam(f"fibre sphere dimension q must be 1 or 3, got {q}")
    if int(m) != m or m < 1:
        raise InvalidParam(f"projective index m must be a positive integer, got {m}")


def base_dimension(q: int, m: int) -> int:
    _check_hopf(q, m)
    return 2 * m if q == 1 else 4 * m


def einstein_constant(q: int, m: int) -> int:
    """Einstein constant of the Fubini-Study base: 2m+2 on CP^m, 4m+8 on HP^m."""
    _check_hopf(q, m)
    return 2 * m + 2 if q == 1 else 4 * m + 8


def hopf_atensor_constants(q: int, m: int) -> dict:
    """A-tensor norms of the unit Hopf fibration S^q -> S^n -> P."""
    dim_p = base_dimension(q, m)
    return {"Av_norm": dim_p, "AY_norm": q, "deltaA": 0}


@dataclass(frozen=True)
class TubeParams:
    q: int
    m: int
    eps: float
    nu: float
    lam: float
    Lam: float
    iota: float
    eps0: float | None = None

    def __post_init__(self):
        _check_hopf(self.q, self.m)
        for name in ("eps", "nu", "lam", "iota"):
            if not getattr(self, name) > 0:
                raise InvalidParam(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.Lam < 1:
            raise InvalidParam(f"Lambda must lie in (0, 1), got {self.Lam}")
        if self.eps0 is not None and not self.eps0 > 0:
            raise InvalidParam(f"eps0 must be positive, got {self.eps0}")

    @property
    def dimP(self) -> int:
        return base_dimension(self.q, self.m)

    @property
    def n(self) -> int:
        return self.dimP + self.q

    @property
    def plateau_value(self) -> float:
        """Boundary value of f that makes the G/K fibres normal homogeneous."""
        return (1 + self.eps) * self.nu / self.eps

    def to_dict(self) -> dict:
        return {
            "q": self.q, "m": self.m, "dimP": self.dimP, "n": self.n, "eps": self.eps, "eps0": self.eps0,
            "nu": self.nu, "lambda": self.lam, "Lambda": self.Lam, "iota": self.iota,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TubeParams":
        try:
            p = cls(
                q=int(d["q"]), m=int(d["m"]), eps=float(d["eps"]), nu=float(d["nu"]), lam=float(d["lambda"]),
                Lam=float(d["Lambda"]), iota=float(d.get("iota", 0.01)),
                eps0=None if d.get("eps0") is None else float(d["eps0"]),
            )
        except KeyError as exc:
            raise InvalidParam(f"tube parameters missing key {exc}") from None
        for key, want in (("dimP", p.dimP), ("n", p.n)):
            if key in d and int(d[key]) != want:
                raise InvalidParam(f"{key}={d[key]} inconsistent with q={p.q}, m={p.m} (expected {want})")
        return p


def _positive(name, x):
    if np.any(np.asarray(x) <= 0):
        raise Singular(f"{name} must be positive at every evaluation point")


# --------------------------------------------------------------------------
# Ricci curvature of g1


@dataclass
class RicciG1:
    radial: float
    horizontal: float
    fiber: float
    mixed: float = 0.0
    # horizontal formula with the (h'/h)^2 and A-tensor signs flipped; fails on the round sphere
    horizontal_flipped: float = field(default=0.0, repr=False)

    def components(self):
        return self.radial, self.horizontal, self.fiber


def ricci_g1(fj: Jet2, hj: Jet2, params) -> RicciG1:
    """Ricci curvatures of g1(f, h) along d/dr, a unit horizontal X and a unit fibre vector.

    ``params`` needs ``q`` and ``m`` (a :class:`TubeParams` or :class:`Hopf`).
    """
    q, m = params.q, params.m
    dim_p = base_dimension(q, m)
    f, f1, f2 = fj
    h, h1, h2 = hj
    _positive("f", f)
    _positive("h", h)
    fh = f1 * h1 / (f * h)
    radial = -dim_p * h2 / h - q * f2 / f
    horizontal = (
        dim_p * (1 - h1 * h1) / (h * h) + 2**q / (h * h) - h2 / h + (h1 / h) ** 2 - q * fh - 2 * q * f * f / h**4
    )
    fiber = (q - 1) * (1 - f1 * f1) / (f * f) - f2 / f + dim_p * (f * f / h**4 - fh)
    flipped = (
        dim_p * (1 - h1 * h1) / (h * h) + 2**q / (h * h) - h2 / h - (h1 / h) ** 2 - q * (fh - 2 * f * f / h**4)
    )
    return RicciG1(radial, horizontal, fiber, 0.0 * radial, flipped)


def ricci_warped_interval(psij: Jet2, d: int, rhoF: float) -> dict:
    """Ricci of dr^2 + psi(r)^2 g_F with g_F Einstein of dimension d and constant rhoF."""
    if d < 1:
        raise InvalidParam(f"fibre dimension must be >= 1, got {d}")
    p, p1, p2 = psij
    _positive("psi", p)
    radial = -d * p2 / p
    fiber = rhoF / (p * p) - p2 / p - (d - 1) * (p1 / p) ** 2
    return {"radial": radial, "fiber": fiber}


# --------------------------------------------------------------------------
# quotient metric quantities


def _den(f, params):
    return f * f + (1 + params.eps) * params.nu


def phi(fj: Jet2, params) -> float:
    """Coefficient of the mean-curvature field N = phi * d/dr of the S^q-orbits."""
    f, f1, _ = fj
    return -params.q * f * f1 / _den(f, params)


def phi_prime(fj: Jet2, params) -> float:
    f, f1, f2 = fj
    den = _den(f, params)
    return -params.q * (f1 * f1 + f * f2) / den + 2 * params.q * (f * f1) ** 2 / den**2


@dataclass
class QuotientReport:
    phi: float
    A_norm: float
    T_norm: float
    nablaN: dict
    rQ_radial: float
    cross_term_margin: float
    delta_norm_sq: float
    conditional_flags: list

    def to_dict(self) -> dict:
        return {
            "phi": self.phi, "A_norm": self.A_norm, "T_norm": self.T_norm, "nablaN": dict(self.nablaN),
            "rQ_radial": self.rQ_radial, "ineq521_margin": self.cross_term_margin,
            "delta_norm_sq": self.delta_norm_sq, "conditional_flags": list(self.conditional_flags),
        }


def quotient_quantities(fj: Jet2, hj: Jet2, params) -> QuotientReport:
    f, f1, f2 = fj
    h, h1, h2 = hj
    _positive("f", f)
    _positive("h", h)
    q = params.q
    c = (1 + params.eps) * params.nu
    den = f * f + c
    ph = phi(fj, params)
    dph = phi_prime(fj, params)
    T = q * (f * f1) ** 2 / den**2
    A = q * c * f1 * f1 / den**2
    dim_p = base_dimension(q, params.m)
    rq = -dim_p * h2 / h + q * c / den * (3 * f1 * f1 / den - f2 / f)
    nabla = {
        "X": ph * h1 / h,
        "w": 0.0 * ph,
        "radial": dph,
        "fiber": ph * f1 / f,
        "Delta": ph * (f1 / f) * c / (c + f * f),
    }
    return QuotientReport(
        phi=ph, A_norm=A, T_norm=T, nablaN=nabla, rQ_radial=rq, cross_term_margin=rq - 2 * A,
        delta_norm_sq=c * den / (f * f), conditional_flags=[FIBER_POSITIVITY],
    )


# --------------------------------------------------------------------------
# scalar helpers


def fiber_match(mu: float, nu: float) -> float:
    """Fibre length scale at which the quotient orbits are normal homogeneous: mu*nu/(mu-1)."""
    if not mu > 1:
        raise InvalidParam(f"mu must exceed 1, got {mu}")
    return mu * nu / (mu - 1)


def nu_bound(lam: float, eps: float) -> float:
    """Strict upper bound lam*eps/(1+eps) on nu for a tube of boundary size lam."""
    return lam * eps / (1 + eps)


def collar_principal_curvature(thetaj: Jet2) -> float:
    """Principal curvature -theta'/theta of the s=0 end of a collar (outward normal)."""
    t, t1 = thetaj[0], thetaj[1]
    if not t > 0:
        raise Singular(f"collar function must be positive, got {t}")
    return -t1 / t


def perelman_check(lam: float, p_inf: float, theta0_slope: float, strict_tol: float = 0.0) -> dict:
    """Gluing test theta'(0) < lam * p_inf for a collar against a boundary with curvature >= p_inf."""
    if not lam > 0:
        raise InvalidParam(f"lambda must be positive, got {lam}")
    c = p_inf + 1 / lam
    if not c > 0:
        raise InvalidParam(f"p_inf={p_inf} is not above -1/lambda={-1 / lam}: no admissible collar slope")
    margin = lam * p_inf - theta0_slope
    return {"pass": bool(margin > strict_tol), "margin": margin, "window": [-1.0, -1.0 + lam * c]}


# --------------------------------------------------------------------------
# condition reports


@dataclass
class Condition:
    name: str
    passed: bool
    worst_margin: float
    witness_r: float | None
    strict: bool = True

    def to_dict(self):
        return {
            "name": self.name, "pass": self.passed, "worst_margin": self.worst_margin,
            "witness_r": self.witness_r, "strict": self.strict,
        }


@dataclass
class ConditionReport:
    entries: list = field(default_factory=list)
    assumptions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def __getitem__(self, name) -> Condition:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def failed(self):
        return [e.name for e in self.entries if not e.passed]

    def add(self, name, margins, r=None, strict=True, tol=0.0):
        margins = np.atleast_1d(np.asarray(margins, dtype=float))
        i = int(np.argmin(margins))
        worst = float(margins[i])
        witness = None if r is None else float(np.atleast_1d(r)[i])
        ok = worst > tol if strict else worst >= -NONSTRICT_TOL
        self.entries.append(Condition(name, bool(ok), worst, witness, strict))
        return self.entries[-1]

    def extend(self, other: "ConditionReport", prefix=""):
        for e in other.entries:
            self.entries.append(Condition(prefix + e.name, e.passed, e.worst_margin, e.witness_r, e.strict))
        for a in other.assumptions:
            if a not in self.assumptions:
                self.assumptions.append(a)

    def to_dict(self):
        return {
            "pass": self.passed,
            "entries": [e.to_dict() for e in self.entries],
            "assumptions": list(self.assumptions),
        }


def _is_unit_sine_start(p: Profile) -> float:
    s = p.segments[0]
    if isinstance(s, SineArc) and s.a == 1.0 and s.b == 0.0 and s.lo == 0.0:
        return s.hi - s.lo
    return 0.0


def check_profile_conditions(f: Profile, h: Profile, grid: GridSpec | None = None) -> ConditionReport:
    """Sufficient conditions on (f, h) for Ric(g1) > 0, checked on a grid.

    (i) f = h = sin near 0; (ii) f'', h'' <= 0 with f'' + h'' < 0 and f', h' >= 0;
    (iii) f <= h and f'/f <= h'/h; (iv) (f/h)^3 >= f' h'.
    """
    if f.domain != h.domain:
        raise InvalidParam(f"f and h must share a domain, got {f.domain} and {h.domain}")
    grid = grid or default_grid(h)
    r = grid.with_knots(f, h)
    fv, f1, f2 = f.eval_grid(r)
    hv, h1, h2 = h.eval_grid(r)
    rep = ConditionReport()
    rep.add("sine_start", min(_is_unit_sine_start(f), _is_unit_sine_start(h)), 0.0)
    rep.add("f_concave", -f2, r, strict=False)
    rep.add("h_concave", -h2, r, strict=False)
    rep.add("sum_strictly_concave", -(f2 + h2), r)
    rep.add("f_nondecreasing", f1, r, strict=False)
    rep.add("h_nondecreasing", h1, r, strict=False)
    rep.add("f_below_h", hv - fv, r, strict=False)
    rep.add("log_slope_order", h1 / hv - f1 / fv, r, strict=False)
    rep.add("cubic_ratio", (fv / hv) ** 3 - f1 * h1, r, strict=False)
    return rep


def tube_grid_table(f: Profile, h: Profile, params, grid: GridSpec | None = None) -> dict:
    """Per-point curvature data; keys follow the CSV grid-dump header."""
    grid = grid or default_grid(h)
    r = grid.with_knots(f, h)
    fj = f.eval_grid(r)
    hj = h.eval_grid(r)
    ric = ricci_g1(fj, hj, params)
    qr = quotient_quantities(fj, hj, params)
    return {
        "r": r, "f": fj[0], "f1": fj[1], "f2": fj[2], "h": hj[0], "h1": hj[1], "h2": hj[2],
        "ric_radial": ric.radial, "ric_horizontal": ric.horizontal, "ric_fiber": ric.fiber,
        "phi": qr.phi, "A_norm": qr.A_norm, "T_norm": qr.T_norm, "rQ_radial": qr.rQ_radial,
        "ineq521_margin": qr.cross_term_margin,
    }


GRID_CSV_HEADER = (
    "r", "f", "f1", "f2", "h", "h1", "h2", "ric_radial", "ric_horizontal", "ric_fiber",
    "phi", "A_norm", "T_norm", "rQ_radial", "ineq521_margin",
)


def verify_tube(
    f: Profile, h: Profile, params: TubeParams, grid: GridSpec | None = None, strict_tol: float = 0.0
) -> ConditionReport:
    """All numeric checks for a singular tube built from (f, h)."""
    lo, R = h.domain
    grid = grid or default_grid(h)
    rep = ConditionReport(assumptions=[FIBER_POSITIVITY])
    rep.extend(check_profile_conditions(f, h, grid))

    t = tube_grid_table(f, h, params, grid)
    r = t["r"]
    rep.add("ricci_radial", t["ric_radial"], r, tol=strict_tol)
    rep.add("ricci_horizontal", t["ric_horizontal"], r, tol=strict_tol)
    rep.add("ricci_fiber", t["ric_fiber"], r, tol=strict_tol)
    rep.add("quotient_radial_ricci", t["rQ_radial"], r, tol=strict_tol)
    rep.add("radial_cross_term", t["ineq521_margin"], r, tol=strict_tol)

    fj = (t["f"], t["f1"], t["f2"])
    hj = (t["h"], t["h1"], t["h2"])
    qr = quotient_quantities(fj, hj, params)
    worst_sign = np.max(np.vstack([qr.phi, qr.nablaN["X"], qr.nablaN["fiber"], qr.nablaN["Delta"]]), axis=0)
    rep.add("mean_curvature_signs", -worst_sign, r, strict=False)

    target = params.plateau_value
    rp = np.unique(np.concatenate([np.linspace(R - params.iota, R, 65), r[r >= R - params.iota]]))
    rp = rp[rp >= lo]
    pv, p1, p2 = f.eval_grid(rp)
    dev = np.max(np.vstack([np.abs(pv - target), np.abs(p1), np.abs(p2)]), axis=0)
    rep.add("fiber_plateau", PLATEAU_TOL - dev, rp, strict=False)

    hR = h.eval(R)
    rep.add("h_boundary_value", BOUNDARY_TOL - abs(hR.value - params.lam), R, strict=False)
    rep.add("h_boundary_slope", BOUNDARY_TOL - abs(hR.d1 - params.Lam), R, strict=False)
    rep.add("nu_below_bound", nu_bound(params.lam, params.eps) - params.nu, None, tol=strict_tol)
    if params.eps0 is not None:
        rep.add("eps_below_eps0", params.eps0 - params.eps, None)
    return rep


def round_sphere_value(q: int, m: int) -> int:
    """Ricci constant of the unit round sphere of dimension dimP + q + 1."""
    return base_dimension(q, m) + q


def flipped_sign_gap(q: int, m: int, r: float = 0.7) -> float:
    """Gap between the sign-flipped and the correct horizontal formula on the round sphere."""
    s = math.sin(r)
    j = Jet2(s, math.cos(r), -s)
    ric = ricci_g1(j, j, Hopf(q, m))
    return ric.horizontal_flipped - ric.horizontal
