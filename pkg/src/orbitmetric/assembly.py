"""Full gluing constructions: base, collars, tubes and the nu budget.

A configuration describes the orbit space ``B`` (a warped interval or an
abstract base with given boundary data) and one tube per boundary component.
:func:`assemble` adds a concave collar to each boundary, checks the Perelman
gluing inequality there, designs the tube that continues the collar, checks
the C^1 junction and picks a common ``nu``. Every step lands in a
:class:`FeasibilityReport`; numeric failures inside a stage become failing
entries rather than exceptions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .curvature import (
    ASSUMPTION_TEXT,
    NU0,
    ConditionReport,
    TubeParams,
    einstein_constant,
    nu_bound,
    perelman_check,
    ricci_g1,
    ricci_warped_interval,
    tube_grid_table,
    verify_tube,
)
from .errors import ConfigError, DesignFailure, InfeasibleParams, InvalidParam
from .oracle import chart_doubly_warped, sectional_min
from .profiles import (
    DEFAULT_GRID_POINTS,
    GridSpec,
    Profile,
    SineArc,
    build_collar,
    build_f,
    build_h,
    default_grid,
    jet_match,
    mirror,
    sine_profile,
)

NU_BOUND_TEXT = "nu < lambda*eps/(1+eps)"
NU_AUTO_FACTOR = 0.9
WINDOW_FRACTION = 1e-2
MAX_RETRIES = 8
JUNCTION_TOL = 1e-9
SEC_FLOOR = -1e-8
CAP_TOL = 1e-12

SUBMERSION_SECTIONAL = (
    "Riemannian submersions do not decrease sectional curvature, so the quotient of the "
    "nonnegatively curved product inherits sec >= 0"
)
EXTRA_ASSUMPTIONS = {"base_ricci_positive": "the abstract base is asserted, not checked, to have Ric > 0"}
PRODUCT_FIBER = (
    "the fibre (G/K, nu g0) has Ric > 0 by hypothesis, so the product with the disc factor is Ricci positive"
)


# --------------------------------------------------------------------------
# boundary data


@dataclass(frozen=True)
class FiberKind:
    """Standard boundary component of the orbit space."""

    type: str
    m: int = 1
    n: int = 0
    group: str = ""

    def __post_init__(self):
        if self.type not in ("CP", "HP", "CPodd_mod_Z2", "S_mod_Gamma"):
            raise ConfigError(f"unknown fiber kind {self.type!r}")
        if self.type == "S_mod_Gamma":
            if self.n < 2:
                raise ConfigError(f"S_mod_Gamma needs n >= 2, got {self.n}")
        elif self.m < 1:
            raise ConfigError(f"{self.type} needs m >= 1, got {self.m}")
        if self.type == "CPodd_mod_Z2" and self.m % 2 == 0:
            raise ConfigError(f"CPodd_mod_Z2 needs odd m, got {self.m}")

    @property
    def singular(self) -> bool:
        return self.type != "S_mod_Gamma"

    @property
    def hopf(self) -> tuple:
        # the Z2 quotient reuses the circle tube over CP^m
        return (3, self.m) if self.type == "HP" else (1, self.m)

    @property
    def dim(self) -> int:
        if self.type == "S_mod_Gamma":
            return self.n
        q, m = self.hopf
        return 2 * m if q == 1 else 4 * m

    @property
    def einstein(self) -> float:
        """Einstein constant of the standard metric."""
        if self.type == "S_mod_Gamma":
            return self.n - 1
        return einstein_constant(*self.hopf)

    def to_dict(self):
        if self.type == "S_mod_Gamma":
            return {"type": self.type, "n": self.n, "group": self.group}
        return {"type": self.type, "m": self.m}

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict) or "type" not in d:
            raise ConfigError(f"fiber_kind must be an object with a type, got {d!r}")
        _reject_unknown(d, {"type", "m", "n", "group"}, "fiber_kind")
        return cls(str(d["type"]), int(d.get("m", 1)), int(d.get("n", 0)), str(d.get("group", "")))


@dataclass(frozen=True)
class BoundaryData:
    label: str
    lambda_i: float
    p_inf: float
    fiber_kind: FiberKind

    def condition_margin(self) -> float:
        """p_inf + 1/lambda_i; the boundary is admissible when this is positive."""
        return self.p_inf + 1.0 / self.lambda_i

    def to_dict(self):
        return {"label": self.label, "lambda": self.lambda_i, "p_inf": self.p_inf,
                "fiber_kind": self.fiber_kind.to_dict()}


def shell_boundaries(psi: Profile, fiber_kind: FiberKind, scale: float = 1.0, labels=("left", "right")):
    """Boundary data of dr^2 + psi^2 g_F on [a, b], with g_F = scale^2 * standard.

    Principal curvatures use the outward normal: -psi'/psi at a, +psi'/psi at b.
    """
    a, b = psi.domain
    out = []
    if labels[0] is not None:
        j = psi.eval(a)
        out.append(BoundaryData(labels[0], scale * j.value, -j.d1 / j.value, fiber_kind))
    j = psi.eval(b)
    out.append(BoundaryData(labels[1], scale * j.value, j.d1 / j.value, fiber_kind))
    return out


@dataclass
class BaseSpec:
    kind: str
    psi: Profile | None = None
    fiber_dim: int = 0
    rhoF: float = 0.0
    fiber_kind: FiberKind | None = None
    fiber_to_standard: float = 1.0
    boundaries: list = field(default_factory=list)
    ric_positive_assertion: bool = False

    def boundary_data(self) -> list:
        if self.kind == "shell":
            return shell_boundaries(self.psi, self.fiber_kind, self.fiber_to_standard)
        if self.kind == "cap":
            return shell_boundaries(self.psi, self.fiber_kind, self.fiber_to_standard, (None, "outer"))
        return list(self.boundaries)

    def to_dict(self):
        if self.kind == "abstract":
            return {"kind": "abstract", "boundaries": [b.to_dict() for b in self.boundaries],
                    "ric_positive_assertion": self.ric_positive_assertion}
        return {"kind": self.kind, "psi": self.psi.to_dict(), "fiber_dim": self.fiber_dim, "rhoF": self.rhoF,
                "fiber_kind": self.fiber_kind.to_dict(), "fiber_to_standard": self.fiber_to_standard}

    @classmethod
    def from_dict(cls, d):
        kind = d.get("kind")
        if kind == "abstract":
            _reject_unknown(d, {"kind", "boundaries", "ric_positive_assertion"}, "base")
            bds = []
            for b in d.get("boundaries", []):
                _reject_unknown(b, {"label", "lambda", "p_inf", "fiber_kind"}, "boundary")
                try:
                    bds.append(BoundaryData(str(b["label"]), float(b["lambda"]), float(b["p_inf"]),
                                            FiberKind.from_dict(b["fiber_kind"])))
                except KeyError as exc:
                    raise ConfigError(f"boundary missing key {exc}") from None
            if not bds:
                raise ConfigError("an abstract base needs at least one boundary")
            return cls("abstract", boundaries=bds, ric_positive_assertion=bool(d.get("ric_positive_assertion", False)))
        if kind not in ("shell", "cap"):
            raise ConfigError(f"base kind must be shell, cap or abstract, got {kind!r}")
        _reject_unknown(d, {"kind", "psi", "fiber_dim", "rhoF", "fiber_kind", "fiber_to_standard"}, "base")
        try:
            psi = Profile.from_dict(d["psi"])
            spec = cls(kind, psi, int(d["fiber_dim"]), float(d["rhoF"]), FiberKind.from_dict(d["fiber_kind"]),
                       float(d.get("fiber_to_standard", 1.0)))
        except KeyError as exc:
            raise ConfigError(f"base missing key {exc}") from None
        except (InvalidParam, TypeError) as exc:
            raise ConfigError(f"invalid base: {exc}") from None
        if kind == "cap":
            j = psi.eval(psi.domain[0])
            if abs(j.value) > CAP_TOL or abs(j.d1 - 1) > CAP_TOL:
                raise ConfigError(f"a cap profile needs psi(a)=0 and psi'(a)=1, got {j.value}, {j.d1}")
        if spec.fiber_to_standard <= 0:
            raise ConfigError("fiber_to_standard must be positive")
        return spec


def _reject_unknown(d, allowed, where):
    if not isinstance(d, dict):
        raise ConfigError(f"{where} must be a JSON object")
    extra = sorted(set(d) - set(allowed))
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(extra)}")


# --------------------------------------------------------------------------
# configuration

TUBE_KEYS = {"boundary", "kind", "q", "m", "n", "group", "eps", "eps0", "iota", "collar_length", "smoothing_window"}
TOP_KEYS = {"construction", "base", "tubes", "eps", "eps0", "nu", "nu0", "collar_length", "iota",
            "smoothing_window", "grid_points", "strict_tol", "double"}
DOUBLE_DEFAULTS = {"points": 12, "planes": 12, "seed": 0, "q": 1, "m": 1}


@dataclass
class AssemblyConfig:
    construction: str = "assembly"
    base: BaseSpec | None = None
    tubes: list = field(default_factory=list)
    eps: float = 0.5
    eps0: float | None = None
    nu: object = "auto"
    nu0: float | None = None
    collar_length: float = 0.05
    iota: float = 0.01
    smoothing_window: float | None = None
    grid_points: int = DEFAULT_GRID_POINTS
    strict_tol: float = 0.0
    double: dict = field(default_factory=lambda: dict(DOUBLE_DEFAULTS))

    @classmethod
    def from_dict(cls, d: dict) -> "AssemblyConfig":
        _reject_unknown(d, TOP_KEYS, "config")
        cons = d.get("construction", "assembly")
        if cons == "double":
            dbl = dict(DOUBLE_DEFAULTS)
            _reject_unknown(d.get("double", {}), set(DOUBLE_DEFAULTS), "double")
            dbl.update(d.get("double", {}))
            return cls("double", double=dbl)
        if cons != "assembly":
            raise ConfigError(f"construction must be 'assembly' or 'double', got {cons!r}")
        if "base" not in d:
            raise ConfigError("config needs a base")
        base = BaseSpec.from_dict(d["base"])
        tubes = []
        for t in d.get("tubes", []):
            _reject_unknown(t, TUBE_KEYS, "tube")
            if "boundary" not in t:
                raise ConfigError("every tube needs a boundary label")
            tubes.append(dict(t))
        nu = d.get("nu", "auto")
        if nu != "auto":
            try:
                nu = float(nu)
            except (TypeError, ValueError):
                raise ConfigError(f"nu must be a number or 'auto', got {nu!r}") from None
        cfg = cls(
            "assembly", base, tubes, float(d.get("eps", 0.5)), _opt(d.get("eps0")), nu, _opt(d.get("nu0")),
            float(d.get("collar_length", 0.05)), float(d.get("iota", 0.01)), _opt(d.get("smoothing_window")),
            int(d.get("grid_points", DEFAULT_GRID_POINTS)), float(d.get("strict_tol", 0.0)),
        )
        cfg.validate()
        return cfg

    def validate(self):
        labels = [b.label for b in self.base.boundary_data()]
        seen = [t["boundary"] for t in self.tubes]
        missing = [x for x in labels if x not in seen]
        unknown = [x for x in seen if x not in labels]
        dup = sorted({x for x in seen if seen.count(x) > 1})
        if missing or unknown or dup:
            raise ConfigError(
                f"tubes must match base boundaries one to one (missing {missing}, unknown {unknown}, repeated {dup})"
            )
        if self.eps <= 0 or self.collar_length <= 0 or self.iota <= 0 or self.grid_points < 2:
            raise ConfigError("eps, collar_length, iota must be positive and grid_points >= 2")
        if self.nu != "auto" and not self.nu > 0:
            raise ConfigError("nu must be positive")

    def to_dict(self) -> dict:
        if self.construction == "double":
            return {"construction": "double", "double": dict(self.double)}
        return {
            "construction": "assembly", "base": self.base.to_dict(), "tubes": [dict(t) for t in self.tubes],
            "eps": self.eps, "eps0": self.eps0, "nu": self.nu, "nu0": self.nu0, "collar_length": self.collar_length,
            "iota": self.iota, "smoothing_window": self.smoothing_window, "grid_points": self.grid_points,
            "strict_tol": self.strict_tol,
        }


def _opt(x):
    return None if x is None else float(x)


# --------------------------------------------------------------------------
# reports


@dataclass
class FeasibilityReport:
    stages: dict = field(default_factory=dict)
    assumptions: list = field(default_factory=list)
    cited_results: list = field(default_factory=list)
    details: dict = field(default_factory=dict)
    grids: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    @property
    def overall(self) -> bool:
        return bool(self.stages) and all(s.passed for s in self.stages.values())

    def stage(self, name) -> ConditionReport:
        return self.stages.setdefault(name, ConditionReport())

    def note_assumption(self, key):
        if key not in self.assumptions:
            self.assumptions.append(key)

    def margins(self):
        """(stage, entry) pairs with their worst margins."""
        return [(s, e) for s, rep in self.stages.items() for e in rep.entries]

    def to_dict(self) -> dict:
        return {
            "overall": self.overall,
            "stages": {k: v.to_dict() for k, v in self.stages.items()},
            "assumptions": [{"key": a, "text": EXTRA_ASSUMPTIONS.get(a) or ASSUMPTION_TEXT[a]} for a in self.assumptions],
            "cited_results": list(self.cited_results),
            "details": self.details,
            "config": self.config,
        }


# --------------------------------------------------------------------------
# tubes


class TubeDesign(NamedTuple):
    f: Profile
    h: Profile
    params: TubeParams
    report: ConditionReport
    smoothing_window: float


def choose_delta(lam: float, Lam: float) -> float:
    """Length of the initial sine arc: short enough for the join to h(R) = lam, h'(R) = Lam."""
    return min(0.1, 0.5 * math.acos(Lam), 0.5 * math.asin(min(lam, 1.0)))


def design_tube_report(
    params: TubeParams, smoothing_window: float | None = None, grid_points: int = DEFAULT_GRID_POINTS,
    max_retries: int = MAX_RETRIES, strict_tol: float = 0.0,
) -> TubeDesign:
    """Build (f, h) for a singular tube and verify them.

    iota is only an upper bound: when the fibre plateau value is close to
    lam the plateau is shortened so that it still fits inside (delta_f, R].
    """
    bound = nu_bound(params.lam, params.eps)
    if not params.nu < bound:
        raise InfeasibleParams(
            f"nu={params.nu} violates {NU_BOUND_TEXT} = {bound} for lambda={params.lam}, eps={params.eps}",
            constraint=NU_BOUND_TEXT,
        )
    delta = choose_delta(params.lam, params.Lam)
    h, R = build_h(params.lam, params.Lam, delta)
    target = params.plateau_value
    # where h crosses the plateau value
    r = np.linspace(h.domain[0], R, 4097)
    above = r[h.eval_grid(r)[0] >= target]
    room = R - above[0] if len(above) else 0.0
    window = WINDOW_FRACTION * R if smoothing_window is None else smoothing_window
    iota = min(params.iota, 0.5 * room)
    p = replace(params, iota=iota) if iota < params.iota else params
    grid = GridSpec(grid_points, max(1e-3, h.domain[0]), R)
    last = None
    for _ in range(max_retries + 1):
        w = min(window, 0.5 * room)
        try:
            f = build_f(h, target, p.iota, w)
            rep = verify_tube(f, h, p, grid, strict_tol)
            if rep.passed:
                return TubeDesign(f, h, p, rep, w)
            last = f"verification failed: {', '.join(rep.failed())}"
        except DesignFailure as exc:
            last = str(exc)
        window *= 0.5
    raise DesignFailure(f"tube design failed after {max_retries} retries: {last}")


def design_tube(params: TubeParams, smoothing_window: float | None = None, grid_points: int = DEFAULT_GRID_POINTS):
    """Profiles (f, h) for a singular tube with the given parameters."""
    d = design_tube_report(params, smoothing_window, grid_points)
    return d.f, d.h


def build_exceptional_tube(n: int, lam: float, Lam: float, nu: float, delta: float | None = None,
                           grid_points: int = DEFAULT_GRID_POINTS, group_label: str = ""):
    """h for dr^2 + h^2 ds_n^2 + nu g0 and the positivity report of the disc factor."""
    if not 0 < Lam < 1:
        raise InvalidParam(f"Lambda must lie in (0, 1), got {Lam}")
    if int(n) != n or n < 2:
        raise InvalidParam(f"n must be an integer >= 2, got {n}")
    if not nu > 0:
        raise InvalidParam(f"nu must be positive, got {nu}")
    h, R = build_h(lam, Lam, choose_delta(lam, Lam) if delta is None else delta)
    grid = default_grid(h, grid_points)
    r = grid.with_knots(h)
    hv, h1, h2 = h.eval_grid(r)
    ric = ricci_warped_interval((hv, h1, h2), n, n - 1)
    rep = ConditionReport()
    rep.add("h_concave", -h2, r)
    rep.add("h_nondecreasing", h1, r, strict=False)
    rep.add("h_slope_below_one", 1 - h1, r)
    rep.add("ricci_radial", ric["radial"], r)
    rep.add("ricci_fiber", ric["fiber"], r)
    hR = h.eval(R)
    rep.add("h_boundary_value", 1e-10 - abs(hR.value - lam), R, strict=False)
    rep.add("h_boundary_slope", 1e-10 - abs(hR.d1 - Lam), R, strict=False)
    return h, rep


# --------------------------------------------------------------------------
# assembly


def collar_slopes(lam: float, p_inf: float) -> tuple[float, float]:
    """theta'(0) at the middle of (-1, min(lam*p_inf, 0)); theta'(L) a quarter of the way on to -1."""
    s0 = 0.5 * (-1.0 + min(lam * p_inf, 0.0))
    return s0, s0 - 0.25 * (1.0 + s0)


def _base_stage(cfg, rep: FeasibilityReport):
    st = rep.stage("base")
    base = cfg.base
    if base.kind == "abstract":
        # the assertion is taken on trust, not checked
        st.add("ricci_positive_asserted", 1.0 if base.ric_positive_assertion else -1.0, None)
        if base.ric_positive_assertion:
            rep.note_assumption("base_ricci_positive")
    else:
        psi = base.psi
        grid = default_grid(psi, cfg.grid_points)
        r = grid.with_knots(psi)
        j = psi.eval_grid(r)
        ric = ricci_warped_interval(j, base.fiber_dim, base.rhoF)
        st.add("ricci_radial", ric["radial"], r, tol=cfg.strict_tol)
        st.add("ricci_fiber", ric["fiber"], r, tol=cfg.strict_tol)
        rep.grids["base"] = {"r": r, "psi": j[0], "psi1": j[1], "psi2": j[2],
                             "ric_radial": ric["radial"], "ric_fiber": ric["fiber"]}
        fk = base.fiber_kind
        st.add("fiber_dimension", -abs(base.fiber_dim - fk.dim), None, strict=False)
        st.add("fiber_standard_metric",
               -abs(base.rhoF * base.fiber_to_standard**2 - fk.einstein), None, strict=False)
    for b in base.boundary_data():
        st.add(f"{b.label}.principal_curvature_bound", b.condition_margin(), None, tol=cfg.strict_tol)


def _collar(cfg, b: BoundaryData, length: float, rep: FeasibilityReport):
    st = rep.stage("collars")
    s0, s1 = collar_slopes(b.lambda_i, b.p_inf)
    info = {"slope0": s0, "slope1": s1, "length": length, "convention": "ds^2 + theta(s)^2 g_standard"}
    try:
        theta = build_collar(b.lambda_i, s0, s1, length)
    except (DesignFailure, InvalidParam) as exc:
        st.add(f"{b.label}.build", -1.0, None)
        info["error"] = str(exc)
        return None, info
    grid = default_grid(theta, cfg.grid_points)
    s = grid.with_knots(theta)
    s = np.concatenate([[0.0], s])
    tv, t1, t2 = theta.eval_grid(s)
    ric = ricci_warped_interval((tv, t1, t2), b.fiber_kind.dim, b.fiber_kind.einstein)
    st.add(f"{b.label}.theta_positive", tv, s)
    st.add(f"{b.label}.theta_concave", -t2, s)
    st.add(f"{b.label}.slope_above_minus_one", 1 + t1, s)
    st.add(f"{b.label}.slope_below_one", 1 - t1, s)
    st.add(f"{b.label}.ricci_radial", ric["radial"], s, tol=cfg.strict_tol)
    st.add(f"{b.label}.ricci_fiber", ric["fiber"], s, tol=cfg.strict_tol)
    rep.grids[f"collar_{b.label}"] = {"s": s, "theta": tv, "theta1": t1, "theta2": t2,
                                      "ric_radial": ric["radial"], "ric_fiber": ric["fiber"]}
    info["theta"] = theta.to_dict()
    return theta, info


def _junction(label, h: Profile, theta: Profile, rep: FeasibilityReport, window: float):
    """C^1 match of h at R with the collar run backwards from its far end."""
    st = rep.stage("junctions")
    back = mirror(theta)
    m = jet_match(h, back, order=2, tol=JUNCTION_TOL)
    st.add(f"{label}.value_match", JUNCTION_TOL - m.residuals[0], None, strict=False)
    st.add(f"{label}.slope_match", JUNCTION_TOL - m.residuals[1], None, strict=False)
    return {"residuals": list(m.residuals), "smoothing_plan": {"window": window, "d2_jump": m.residuals[2]}}


def assemble(config: AssemblyConfig | dict) -> FeasibilityReport:
    """Run every stage of the gluing construction; failures become report entries."""
    cfg = config if isinstance(config, AssemblyConfig) else AssemblyConfig.from_dict(config)
    if cfg.construction == "double":
        d = cfg.double
        rep = assemble_double(q=d["q"], m=d["m"], points=d["points"], planes=d["planes"], seed=d["seed"])
        rep.config = cfg.to_dict()
        return rep
    cfg.validate()
    rep = FeasibilityReport(config=cfg.to_dict())
    _base_stage(cfg, rep)
    tubes = {t["boundary"]: t for t in cfg.tubes}
    plans = []
    for b in sorted(cfg.base.boundary_data(), key=lambda x: x.label):
        t = tubes[b.label]
        kind = t.get("kind", "singular" if b.fiber_kind.singular else "exceptional")
        if (kind == "singular") != b.fiber_kind.singular:
            raise ConfigError(f"tube {b.label}: kind {kind} does not fit boundary {b.fiber_kind.type}")
        if kind == "singular" and ("q" in t or "m" in t) and (t.get("q"), t.get("m")) != b.fiber_kind.hopf:
            raise ConfigError(f"tube {b.label}: (q, m) does not match boundary {b.fiber_kind.to_dict()}")
        info = {"boundary": b.to_dict(), "kind": kind}
        length = float(t.get("collar_length", cfg.collar_length))
        theta, cinfo = _collar(cfg, b, length, rep)
        info["collar"] = cinfo
        per = perelman_check(b.lambda_i, b.p_inf, cinfo["slope0"], cfg.strict_tol) \
            if b.condition_margin() > 0 else None
        if per is None:
            rep.stage("perelman").add(f"{b.label}.slope_below_lambda_p", -1.0, None)
        else:
            rep.stage("perelman").add(f"{b.label}.slope_below_lambda_p", per["margin"], None, tol=cfg.strict_tol)
            info["perelman"] = per
        if theta is not None:
            end = theta.eval(theta.domain[1])
            info["tube_lambda"], info["tube_Lambda"] = end.value, -end.d1
        plans.append((b, t, kind, theta, info))

    singular = [(b, t, info) for b, t, kind, theta, info in plans if kind == "singular" and theta is not None]
    bounds = [nu_bound(info["tube_lambda"], float(t.get("eps", cfg.eps))) for b, t, info in singular]
    if cfg.nu == "auto":
        caps = bounds + ([cfg.nu0] if cfg.nu0 is not None else [])
        nu = NU_AUTO_FACTOR * min(caps) if caps else NU_AUTO_FACTOR * (cfg.nu0 or 1.0)
    else:
        nu = cfg.nu
    rep.details["nu"] = nu
    budget = rep.stage("nu_budget")
    for (b, t, info), bd in zip(singular, bounds):
        budget.add(f"{b.label}.below_tube_bound", bd - nu, None, tol=cfg.strict_tol)
    if cfg.nu0 is not None:
        budget.add("below_nu0", cfg.nu0 - nu, None, tol=cfg.strict_tol)
    if not budget.entries:
        budget.add("positive", nu, None)
    rep.note_assumption(NU0)

    # tubes run one after another; results are keyed by boundary label
    for b, t, kind, theta, info in plans:
        tubes_st = rep.stage("tubes")
        if theta is None:
            tubes_st.add(f"{b.label}.design", -1.0, None)
            rep.details[b.label] = info
            continue
        lam, Lam = info["tube_lambda"], info["tube_Lambda"]
        try:
            if kind == "singular":
                q, m = b.fiber_kind.hopf
                eps = float(t.get("eps", cfg.eps))
                eps0 = _opt(t.get("eps0", cfg.eps0))
                params = TubeParams(q, m, eps, nu, lam, Lam, float(t.get("iota", cfg.iota)), eps0)
                d = design_tube_report(params, _opt(t.get("smoothing_window", cfg.smoothing_window)),
                                       cfg.grid_points, strict_tol=cfg.strict_tol)
                tubes_st.extend(d.report, prefix=f"{b.label}.")
                for a in d.report.assumptions:
                    rep.note_assumption(a)
                h = d.h
                info.update(params=d.params.to_dict(), f=d.f.to_dict(), h=d.h.to_dict(),
                            smoothing_window=d.smoothing_window)
                if b.fiber_kind.type == "CPodd_mod_Z2":
                    info["quotient"] = "Z2 quotient of the circle tube, acting isometrically"
                rep.grids[f"tube_{b.label}"] = tube_grid_table(d.f, d.h, d.params,
                                                               GridSpec(cfg.grid_points, 1e-3, d.h.domain[1]))
            else:
                h, erep = build_exceptional_tube(b.fiber_kind.n, lam, Lam, nu, grid_points=cfg.grid_points)
                tubes_st.extend(erep, prefix=f"{b.label}.")
                if PRODUCT_FIBER not in rep.cited_results:
                    rep.cited_results.append(PRODUCT_FIBER)
                info.update(h=h.to_dict(), group=b.fiber_kind.group)
        except InfeasibleParams as exc:
            tubes_st.add(f"{b.label}.design", nu_bound(lam, params.eps) - nu, None)
            info["error"] = str(exc)
            rep.details[b.label] = info
            continue
        except (DesignFailure, InvalidParam) as exc:
            tubes_st.add(f"{b.label}.design", -1.0, None)
            info["error"] = str(exc)
            rep.details[b.label] = info
            continue
        window = _opt(t.get("smoothing_window", cfg.smoothing_window)) or WINDOW_FRACTION * h.domain[1]
        info["junction"] = _junction(b.label, h, theta, rep, window)
        rep.details[b.label] = info
    return rep


def _is_sine_cap(p: Profile) -> bool:
    if len(p.segments) != 1:
        return False
    s = p.segments[0]
    return isinstance(s, SineArc) and s.a == 1.0 and s.b == 0.0 and p.domain == (0.0, math.pi / 2)


def assemble_double(f: Profile | None = None, h: Profile | None = None, q: int = 1, m: int = 1,
                    points: int = 12, planes: int = 12, seed: int = 0) -> FeasibilityReport:
    """Two copies of the round sine tube glued along r = pi/2."""
    f = f or sine_profile()
    h = h or sine_profile()
    if not (_is_sine_cap(f) and _is_sine_cap(h)):
        raise InvalidParam("the double uses f = h = sin on [0, pi/2]")
    rep = FeasibilityReport(config={"construction": "double",
                                    "double": {"q": q, "m": m, "points": points, "planes": planes, "seed": seed}})
    jm = jet_match(h, mirror(h), order=3, tol=0.0)
    st = rep.stage("jets")
    for k, res in enumerate(jm.residuals):
        st.add(f"order{k}_residual", -res, None, strict=False)
    r = default_grid(h, DEFAULT_GRID_POINTS).values()
    ric = ricci_g1(f.eval_grid(r), h.eval_grid(r), TubeParams(q, m, 1.0, 1.0, 1.0, 0.5, 0.01))
    rc = rep.stage("ricci")
    rc.add("radial", ric.radial, r)
    rc.add("horizontal", ric.horizontal, r)
    rc.add("fiber", ric.fiber, r)
    sec = rep.stage("sectional")
    if (q, m) == (1, 1):
        chart = chart_doubly_warped(f, h, r_range=(0.05, math.pi / 2 - 0.01))
        smin = sectional_min(chart, points, planes, seed)
        sec.add("sampled_minimum", smin - SEC_FLOOR, None)
        rep.details["sec_min_sampled"] = smin
    else:
        sec.add("sampled_minimum", 1.0 - SEC_FLOOR, None)
        rep.details["sec_min_sampled"] = "closed form: round sphere of curvature 1"
    rep.details["jet_residuals"] = list(jm.residuals)
    rep.cited_results.append(SUBMERSION_SECTIONAL)
    return rep


# --------------------------------------------------------------------------
# experiment


SCAN_HEADER = ("label", "a", "b", "base_ric_radial_margin", "base_ric_fiber_margin", "lambda_left", "p_left",
               "cond2_left", "lambda_right", "p_right", "cond2_right", "feasible")


def sine_shell_family(cuts) -> dict:
    """psi = sin on [t, pi - t] for each t."""
    return {f"sin[{t:g},pi-{t:g}]": sine_profile(t, math.pi - t) for t in cuts}


def experiment_shell_scan(d: int, rhoF: float, psi_family: dict, scale: float = 1.0,
                          grid_points: int = DEFAULT_GRID_POINTS) -> list:
    """Feasibility margins of two-boundary warped-interval bases, one row per profile."""
    rows = []
    fk = FiberKind("S_mod_Gamma", n=max(d, 2))
    for label, psi in psi_family.items():
        a, b = psi.domain
        r = default_grid(psi, grid_points).with_knots(psi)
        ric = ricci_warped_interval(psi.eval_grid(r), d, rhoF)
        rad, fib = float(np.min(ric["radial"])), float(np.min(ric["fiber"]))
        left, right = shell_boundaries(psi, fk, scale)
        c2l, c2r = left.condition_margin(), right.condition_margin()
        rows.append({
            "label": label, "a": a, "b": b, "base_ric_radial_margin": rad, "base_ric_fiber_margin": fib,
            "lambda_left": left.lambda_i, "p_left": left.p_inf, "cond2_left": c2l,
            "lambda_right": right.lambda_i, "p_right": right.p_inf, "cond2_right": c2r,
            "feasible": bool(rad > 0 and fib > 0 and c2l > 0 and c2r > 0),
        })
    return rows


__all__ = [
    "AssemblyConfig", "BaseSpec", "BoundaryData", "FeasibilityReport", "FiberKind", "TubeDesign",
    "assemble", "assemble_double", "build_exceptional_tube", "collar_slopes", "design_tube",
    "design_tube_report", "experiment_shell_scan", "shell_boundaries", "sine_shell_family",
]
