"""Warping profiles: piecewise analytic functions with exact 2-jets.

A :class:`Profile` is a tiling of an interval by :class:`SineArc`,
:class:`Constant` and :class:`QuinticHermite` segments. Every evaluation is
analytic inside a segment, so the only numerical differentiation anywhere in
the package lives in :mod:`orbitmetric.oracle`.

The builders at the bottom of the module construct the radial functions of a
tube (``build_h``, ``build_f``) and of a boundary collar (``build_collar``).
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize

from .errors import DesignFailure, InvalidParam, OutOfDomain

C1_TOL = 1e-12
SMOOTH_TOL = 1e-9
DEFAULT_GRID_POINTS = 2048
GRID_FLOOR = 1e-3


class Jet2(NamedTuple):
    value: float
    d1: float
    d2: float


class Jet3(NamedTuple):
    value: float
    d1: float
    d2: float
    d3: float


# --------------------------------------------------------------------------
# segments


@dataclass(frozen=True)
class SineArc:
    """r -> a*sin(r/a + b) on [lo, hi]."""

    a: float
    b: float
    lo: float
    hi: float
    kind = "sine_arc"

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidParam(f"SineArc amplitude must be positive, got {self.a}")

    def jet3(self, r):
        x = r / self.a + self.b
        s, c = np.sin(x), np.cos(x)
        return self.a * s, c, -s / self.a, -c / (self.a * self.a)

    def positive_interior(self) -> bool:
        x0 = self.lo / self.a + self.b
        x1 = self.hi / self.a + self.b
        k = math.floor(x0 / math.pi)
        if k % 2:
            return False
        return x1 <= (k + 1) * math.pi + 1e-12

    def clipped(self, lo, hi):
        return SineArc(self.a, self.b, lo, hi)

    def mirrored(self, pivot):
        return SineArc(self.a, math.pi - pivot / self.a - self.b, pivot - self.hi, pivot - self.lo)

    def to_dict(self):
        return {"kind": self.kind, "a": self.a, "b": self.b, "from": self.lo, "to": self.hi}


@dataclass(frozen=True)
class Constant:
    c: float
    lo: float
    hi: float
    kind = "constant"

    def __post_init__(self):
        if not self.c > 0:
            raise InvalidParam(f"Constant segment must be positive, got {self.c}")

    def jet3(self, r):
        z = r * 0
        return z + self.c, z, z, z

    def positive_interior(self) -> bool:
        return True

    def clipped(self, lo, hi):
        return Constant(self.c, lo, hi)

    def mirrored(self, pivot):
        return Constant(self.c, pivot - self.hi, pivot - self.lo)

    def to_dict(self):
        return {"kind": self.kind, "c": self.c, "from": self.lo, "to": self.hi}


# power-basis coefficients of the six quintic Hermite basis functions on [0, 1],
# ordered (y0, y0', y0'', y1, y1', y1''); row k is the t**k coefficient
_HERMITE5 = np.array(
    [
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
        [-10.0, -6.0, -1.5, 10.0, -4.0, 0.5],
        [15.0, 8.0, 1.5, -15.0, 7.0, -1.0],
        [-6.0, -3.0, -0.5, 6.0, -3.0, 0.5],
    ]
)


@dataclass(frozen=True)
class QuinticHermite:
    """Degree-5 polynomial matching a 2-jet at each end of [lo, hi]."""

    left: tuple
    right: tuple
    lo: float
    hi: float
    coef: np.ndarray = field(init=False, repr=False, compare=False)
    kind = "quintic_hermite"

    def __post_init__(self):
        if not self.hi > self.lo:
            raise InvalidParam(f"empty QuinticHermite interval [{self.lo}, {self.hi}]")
        left = tuple(float(v) for v in self.left)
        right = tuple(float(v) for v in self.right)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)
        w = self.hi - self.lo
        fwd = np.array([left[0], left[1] * w, left[2] * w * w, right[0], right[1] * w, right[2] * w * w])
        bwd = np.array([right[0], -right[1] * w, right[2] * w * w, left[0], -left[1] * w, left[2] * w * w])
        # expansions about each end; the nearer one is used so endpoint jets are exact
        object.__setattr__(self, "coef", (_HERMITE5 @ fwd, _HERMITE5 @ bwd))

    @staticmethod
    def _horner(c, t):
        y = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))))
        y1 = c[1] + t * (2 * c[2] + t * (3 * c[3] + t * (4 * c[4] + t * 5 * c[5])))
        y2 = 2 * c[2] + t * (6 * c[3] + t * (12 * c[4] + t * 20 * c[5]))
        y3 = 6 * c[3] + t * (24 * c[4] + t * 60 * c[5])
        return y, y1, y2, y3

    def jet3(self, r):
        w = self.hi - self.lo
        t = (r - self.lo) / w
        u = (self.hi - r) / w
        fy, f1, f2, f3 = self._horner(self.coef[0], t)
        by, b1, b2, b3 = self._horner(self.coef[1], u)
        near = t <= 0.5
        y = np.where(near, fy, by)
        y1 = np.where(near, f1, -b1)
        y2 = np.where(near, f2, b2)
        y3 = np.where(near, f3, -b3)
        if np.ndim(r) == 0:
            y, y1, y2, y3 = y[()], y1[()], y2[()], y3[()]
        return y, y1 / w, y2 / (w * w), y3 / (w * w * w)

    def positive_interior(self) -> bool:
        r = np.linspace(self.lo, self.hi, 257)[1:-1]
        return bool(np.all(self.jet3(r)[0] > 0))

    def clipped(self, lo, hi):
        if lo == self.lo and hi == self.hi:
            return self
        return QuinticHermite(self.jet3(lo)[:3], self.jet3(hi)[:3], lo, hi)

    def mirrored(self, pivot):
        (y0, s0, c0), (y1, s1, c1) = self.left, self.right
        return QuinticHermite((y1, -s1, c1), (y0, -s0, c0), pivot - self.hi, pivot - self.lo)

    def to_dict(self):
        return {"kind": self.kind, "left": list(self.left), "right": list(self.right), "from": self.lo, "to": self.hi}


Segment = SineArc | Constant | QuinticHermite


def segment_from_dict(d: dict) -> Segment:
    kind = d.get("kind")
    lo, hi = float(d["from"]), float(d["to"])
    if kind == "sine_arc":
        return SineArc(float(d["a"]), float(d["b"]), lo, hi)
    if kind == "constant":
        return Constant(float(d["c"]), lo, hi)
    if kind == "quintic_hermite":
        return QuinticHermite(tuple(d["left"]), tuple(d["right"]), lo, hi)
    raise InvalidParam(f"unknown segment kind {kind!r}")


# --------------------------------------------------------------------------
# profiles


class Profile:
    """Positive piecewise-C^2 function on ``[lo, hi]``.

    Segments must tile the domain exactly. Value and first derivative are
    checked for continuity at every knot; second-derivative jumps are kept in
    ``d2_jumps`` and ``smooth`` is true when all of them are below 1e-9.
    """

    def __init__(self, segments: Sequence[Segment]):
        segments = list(segments)
        if not segments:
            raise InvalidParam("a profile needs at least one segment")
        for s0, s1 in zip(segments, segments[1:]):
            if s0.hi != s1.lo:
                raise InvalidParam(f"segments do not tile: gap/overlap between {s0.hi} and {s1.lo}")
        for s in segments:
            if not s.hi > s.lo:
                raise InvalidParam(f"segment has empty domain [{s.lo}, {s.hi}]")
            if not s.positive_interior():
                raise InvalidParam(f"segment {s.kind} on [{s.lo}, {s.hi}] is not positive on its interior")
        self.segments = tuple(segments)
        self._los = [s.lo for s in segments]
        self.d2_jumps = []
        for s0, s1 in zip(segments, segments[1:]):
            k = s0.hi
            v0, a0, b0, _ = s0.jet3(k)
            v1, a1, b1, _ = s1.jet3(k)
            if abs(v0 - v1) > C1_TOL * max(1.0, abs(v0)) or abs(a0 - a1) > C1_TOL * max(1.0, abs(a0)):
                raise InvalidParam(
                    f"profile is not C1 at knot {k}: value jump {v1 - v0:.3e}, slope jump {a1 - a0:.3e}"
                )
            self.d2_jumps.append(float(b1 - b0))

    @property
    def domain(self) -> tuple[float, float]:
        return self.segments[0].lo, self.segments[-1].hi

    @property
    def knots(self) -> list[float]:
        return [s.lo for s in self.segments[1:]]

    @property
    def smooth(self) -> bool:
        return all(abs(j) <= SMOOTH_TOL for j in self.d2_jumps)

    def _segment_at(self, r) -> Segment:
        lo, hi = self.domain
        if not lo <= r <= hi:
            raise OutOfDomain(f"r={r} outside profile domain [{lo}, {hi}]")
        i = bisect.bisect_right(self._los, r) - 1
        return self.segments[max(i, 0)]

    def eval(self, r) -> Jet2:
        """Analytic 2-jet at ``r``; at a knot the right-hand segment is used."""
        v, d1, d2, _ = self._segment_at(r).jet3(r)
        if isinstance(r, np.longdouble):
            return Jet2(v, d1, d2)
        return Jet2(float(v), float(d1), float(d2))

    def eval3(self, r) -> Jet3:
        v, d1, d2, d3 = self._segment_at(r).jet3(r)
        return Jet3(float(v), float(d1), float(d2), float(d3))

    __call__ = eval

    def eval_grid(self, r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Vectorised 2-jet over an array of points."""
        r = np.asarray(r, dtype=float)
        lo, hi = self.domain
        if r.size and (r.min() < lo or r.max() > hi):
            raise OutOfDomain(f"grid [{r.min()}, {r.max()}] leaves profile domain [{lo}, {hi}]")
        idx = np.clip(np.searchsorted(self._los, r, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty((3,) + r.shape)
        for i, seg in enumerate(self.segments):
            mask = idx == i
            if np.any(mask):
                v, d1, d2, _ = seg.jet3(r[mask])
                out[0][mask], out[1][mask], out[2][mask] = v, d1, d2
        return out[0], out[1], out[2]

    def restricted(self, lo, hi) -> "Profile":
        segs = []
        for s in self.segments:
            a, b = max(s.lo, lo), min(s.hi, hi)
            if b > a:
                segs.append(s.clipped(a, b))
        return Profile(segs)

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "segments": [s.to_dict() for s in self.segments]}

    @classmethod
    def from_dict(cls, d: dict) -> "Profile":
        prof = cls([segment_from_dict(s) for s in d["segments"]])
        if "domain" in d and [float(x) for x in d["domain"]] != list(prof.domain):
            raise InvalidParam(f"declared domain {d['domain']} does not match segments {prof.domain}")
        return prof

    def __repr__(self):
        kinds = ",".join(s.kind for s in self.segments)
        return f"Profile([{self.domain[0]:.6g}, {self.domain[1]:.6g}]: {kinds})"


def sine_profile(lo: float = 0.0, hi: float = math.pi / 2) -> Profile:
    return Profile([SineArc(1.0, 0.0, lo, hi)])


def constant_profile(c: float, lo: float = 0.0, hi: float = 1.0) -> Profile:
    return Profile([Constant(c, lo, hi)])


def mirror(profile: Profile) -> Profile:
    """s -> profile(hi - s) on ``[0, hi - lo]``.

    SineArc segments are re-expressed as SineArcs, so the reflection of an
    arc that is symmetric about the pivot reproduces the arc bit-for-bit.
    """
    pivot = profile.domain[1]
    return Profile([s.mirrored(pivot) for s in reversed(profile.segments)])


# --------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class GridSpec:
    points: int
    lo: float
    hi: float

    def __post_init__(self):
        if self.points < 2:
            raise InvalidParam("a grid needs at least 2 points")
        if not self.lo < self.hi:
            raise InvalidParam(f"grid requires lo < hi, got [{self.lo}, {self.hi}]")

    def values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.points)

    def with_knots(self, *profiles: Profile) -> np.ndarray:
        r = [self.values()]
        for p in profiles:
            k = np.array([x for x in p.knots if self.lo <= x <= self.hi])
            r.append(k)
        return np.unique(np.concatenate(r))


def default_grid(profile: Profile, points: int = DEFAULT_GRID_POINTS) -> GridSpec:
    lo, hi = profile.domain
    return GridSpec(points, max(GRID_FLOOR, lo), hi)


# --------------------------------------------------------------------------
# jet matching


class MatchReport(NamedTuple):
    residuals: tuple
    passed: bool
    tolerance: float

    def passes_through(self, order: int) -> bool:
        return all(r <= self.tolerance for r in self.residuals[: order + 1])

    def to_dict(self):
        return {"residuals": list(self.residuals), "pass": self.passed, "tolerance": self.tolerance}


def jet_match(left: Profile, right: Profile, order: int = 2, tol: float = 1e-6) -> MatchReport:
    """Compare derivatives of ``left`` at its right end with ``right`` at its left end."""
    if order not in (0, 1, 2, 3):
        raise InvalidParam(f"order must be in 0..3, got {order}")
    a = left._segment_at(left.domain[1]).jet3(left.domain[1])
    b = right._segment_at(right.domain[0]).jet3(right.domain[0])
    res = tuple(float(abs(a[k] - b[k])) for k in range(order + 1))
    return MatchReport(res, all(x <= tol for x in res), tol)


# --------------------------------------------------------------------------
# builders


def _quintic_margins(seg: QuinticHermite):
    r = np.linspace(seg.lo, seg.hi, DEFAULT_GRID_POINTS)
    _, d1, d2, _ = seg.jet3(r)
    return float(np.min(-d2)), float(np.min(d1)), float(np.min(1.0 - d1))


def build_h(lam: float, Lam: float, delta: float, ladder_ratio: float = 1.25, max_rungs: int = 60):
    """Concave h with h = sin on [0, delta], h(R) = lam and h'(R) = Lam.

    Returns ``(profile, R)``. The join after ``delta`` is a quintic Hermite
    segment ending in the jet ``(lam, Lam, -kappa)``; R is the first rung of a
    geometric ladder whose quintic is strictly concave with 0 <= h' < 1. If the
    ladder jumps over the admissible window a dense scan of the window is used.
    """
    if not 0 < Lam < 1:
        raise InvalidParam(f"Lambda must lie in (0, 1), got {Lam}")
    if not lam > 0:
        raise InvalidParam(f"lambda must be positive, got {lam}")
    if not 0 < delta < math.pi / 4:
        raise InvalidParam(f"delta must lie in (0, pi/4), got {delta}")
    sd, cd = math.sin(delta), math.cos(delta)
    if lam <= sd:
        raise DesignFailure(f"lambda={lam} does not exceed sin(delta)={sd}; shrink delta")
    if Lam >= cd:
        raise DesignFailure(f"Lambda={Lam} is not below cos(delta)={cd}; shrink delta")
    kappa = 0.01 * min(1.0, lam)
    left, right = (sd, cd, -sd), (lam, Lam, -kappa)
    rise = lam - sd

    def attempt(R):
        seg = QuinticHermite(left, right, delta, R)
        conc, slope_lo, slope_hi = _quintic_margins(seg)
        if slope_lo < 0:
            return seg, slope_lo
        return seg, min(conc, slope_hi)

    R0 = delta + rise
    for j in range(max_rungs):
        R = R0 * ladder_ratio**j
        if rise / (R - delta) <= Lam:
            break
        seg, margin = attempt(R)
        if margin > 0:
            return Profile([SineArc(1.0, 0.0, 0.0, delta), seg]), R

    best = None
    for m in np.linspace(Lam, cd, 402)[1:-1]:
        R = delta + rise / m
        seg, margin = attempt(R)
        if best is None or margin > best[1]:
            best = (seg, margin, R)
    if best is None or best[1] <= 0:
        raise DesignFailure(
            f"no concave h found for lambda={lam}, Lambda={Lam}, delta={delta} "
            f"(best margin {best[1] if best else float('nan'):.3e})"
        )
    return Profile([SineArc(1.0, 0.0, 0.0, delta), best[0]]), best[2]


def build_f(h: Profile, f_target: float, iota: float, smoothing_window: float) -> Profile:
    """f = h near 0, then a concave quintic bridge onto the plateau ``f_target``.

    The bridge is centred on the point where h reaches ``f_target`` and has
    width ``smoothing_window``; the plateau covers at least ``[R - iota, R]``.
    """
    lo, R = h.domain
    if not f_target > 0:
        raise InvalidParam(f"f_target must be positive, got {f_target}")
    if not (iota > 0 and smoothing_window > 0):
        raise InvalidParam("iota and smoothing_window must be positive")
    hR = h.eval(R).value
    if f_target >= hR:
        raise DesignFailure(f"f_target={f_target} must be below h(R)={hR}")
    v_lo = h.eval(lo).value
    if f_target <= v_lo:
        raise DesignFailure(f"f_target={f_target} is not in the range of h above h(lo)={v_lo}")
    delta_f = optimize.bisect(lambda r: h.eval(r).value - f_target, lo, R, xtol=1e-12)
    a = delta_f - smoothing_window / 2
    b = delta_f + smoothing_window / 2
    if a <= lo:
        raise DesignFailure(f"smoothing window {smoothing_window} reaches past the cone point")
    if b > R - iota:
        raise DesignFailure(
            f"plateau would start at {b:.6g}, after R - iota = {R - iota:.6g}; shrink iota or the window"
        )
    hj = h.eval(a)
    bridge = QuinticHermite(tuple(hj), (f_target, 0.0, 0.0), a, b)
    rb = np.linspace(a, b, DEFAULT_GRID_POINTS)
    fv, f1, f2, _ = bridge.jet3(rb)
    hv, _, _ = h.eval_grid(rb)
    if np.max(f2) > 1e-12:
        raise DesignFailure(f"bridge is not concave: max f'' = {np.max(f2):.3e}")
    if np.min(f1) < -1e-12:
        raise DesignFailure(f"bridge is not monotone: min f' = {np.min(f1):.3e}")
    if np.max(fv - hv) > 1e-12:
        raise DesignFailure(f"bridge rises above h by {np.max(fv - hv):.3e}")
    segs = list(h.restricted(lo, a).segments) + [bridge, Constant(f_target, b, R)]
    return Profile(segs)


def build_collar(lam: float, slope0: float, slope1: float, length: float) -> Profile:
    """Collar function with theta(0)=lam, theta'(0)=slope0, theta'(length)=slope1.

    theta'' is the constant (slope1 - slope0)/length, so theta is strictly
    concave and its slope stays between the two end slopes.
    """
    if not lam > 0 or not length > 0:
        raise InvalidParam("lambda and length must be positive")
    for s in (slope0, slope1):
        if not -1 < s < 1:
            raise InvalidParam(f"collar slopes must lie in (-1, 1), got {s}")
    if not slope1 < slope0:
        raise DesignFailure(f"a strictly concave collar needs slope1 < slope0, got {slope1} >= {slope0}")
    k = (slope1 - slope0) / length
    end = lam + 0.5 * (slope0 + slope1) * length
    if end <= 0:
        raise DesignFailure(f"collar reaches theta={end:.6g} <= 0 before s={length}")
    return Profile([QuinticHermite((lam, slope0, k), (end, slope1, k), 0.0, length)])
