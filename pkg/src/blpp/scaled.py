"""KPZ-scaled coordinates: weights, profiles, and per-sample structural identities.

The scaled weight of a journey from (x, t1) to (y, t2) is an affine recentering
of the maximal unscaled energy between the corresponding grid endpoints.
Endpoints are snapped to the grid *before* both the dynamic program and the
centering terms, so concatenation, splitting and rescaling identities hold
exactly (up to float roundoff) on every sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import lpp
from .env import Environment, GridSpec, line_values
from .errors import CoverageError, PreconditionError

INTEGRALITY_TOL = 1e-9


def parabola(z):
    """The curvature term 2^(-1/2) z^2 added to weights to cancel the global trend."""
    return 2.0 ** -0.5 * np.square(z)


def _alpha(n: int) -> float:
    return 2.0 ** -0.5 * float(n) ** (-1.0 / 3.0)


class ScaledPoint(NamedTuple):
    x: float
    t: float


@dataclass(frozen=True)
class CompatibleTriple:
    """(n, t1, t2) with n*t1 and n*t2 integral; the times at which journeys exist."""

    n: int
    t1: float
    t2: float

    def __post_init__(self) -> None:
        if self.n < 1 or int(self.n) != self.n:
            raise PreconditionError(f"n must be a positive integer, got {self.n}")
        if not self.t1 < self.t2:
            raise PreconditionError(f"need t1 < t2, got ({self.t1}, {self.t2})")
        for t in (self.t1, self.t2):
            if abs(self.n * t - round(self.n * t)) > INTEGRALITY_TOL:
                raise PreconditionError(f"n*t = {self.n * t} is not an integer")

    @property
    def t12(self) -> float:
        return self.t2 - self.t1

    @property
    def line1(self) -> int:
        return int(round(self.n * self.t1))

    @property
    def line2(self) -> int:
        return int(round(self.n * self.t2))


def scaling_map(n: int, v: tuple[float, float]) -> tuple[float, float]:
    """Unscaled (v1, v2) to scaled (space, time)."""
    v1, v2 = v
    return 2.0 ** -1 * n ** (-2.0 / 3.0) * (v1 - v2), v2 / n


def scaling_map_inverse(n: int, w: tuple[float, float]) -> tuple[float, float]:
    a, b = w
    v2 = n * b
    return v2 + 2.0 * n ** (2.0 / 3.0) * a, v2


def unscaled_coordinate(n: int, x: float, t: float) -> float:
    return n * t + 2.0 * n ** (2.0 / 3.0) * x


def scaled_x(n: int, u, t: float):
    return (u - n * t) / (2.0 * n ** (2.0 / 3.0))


@dataclass(frozen=True, eq=False)
class WeightProfile:
    """A sampled weight profile y -> weight, in scaled or normalized coordinates.

    For a forward profile the base is the (snapped) start point and ys are end
    locations; for a backward profile the base is the end point and ys are
    start locations.  snap_errors records, per output point, the distance from
    the requested coordinate to the grid image (zero for swept grid points).
    """

    triple: CompatibleTriple
    base: ScaledPoint
    direction: str  # "forward" | "backward"
    ys: np.ndarray
    weights: np.ndarray
    snap_errors: np.ndarray
    coords: str = "scaled"  # "scaled" | "normalized"
    base_snap_error: float = 0.0

    def __post_init__(self) -> None:
        ys = np.asarray(self.ys, dtype=float)
        ws = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "weights", ws)
        if ys.shape != ws.shape:
            raise PreconditionError("ys and weights must have the same length")
        if ys.size >= 2 and np.any(np.diff(ys) <= 0):
            raise PreconditionError("ys must be strictly increasing")

    @property
    def spacing(self) -> float:
        if self.ys.size < 2:
            raise PreconditionError("profile has fewer than two points")
        return (self.ys[-1] - self.ys[0]) / (self.ys.size - 1)

    def index_of(self, y: float) -> int:
        j = int(round((y - self.ys[0]) / self.spacing))
        if j < 0 or j >= self.ys.size or abs(self.ys[j] - y) > 0.5 * self.spacing:
            raise CoverageError(f"{y} outside profile range [{self.ys[0]}, {self.ys[-1]}]")
        return j

    def value_at(self, y: float) -> float:
        return float(self.weights[self.index_of(y)])

    def restricted(self, lo: float, hi: float) -> "WeightProfile":
        keep = (self.ys >= lo - 1e-12) & (self.ys <= hi + 1e-12)
        if not keep.any():
            raise CoverageError(f"profile does not meet [{lo}, {hi}]")
        return replace(self, ys=self.ys[keep], weights=self.weights[keep],
                       snap_errors=np.asarray(self.snap_errors)[keep])


@dataclass(frozen=True, eq=False)
class ParabolicView:
    """Profile with the parabolic trend added back: adjusted = weight + Q(y - base)."""

    profile: WeightProfile
    adjusted: np.ndarray


def parabolic_view(profile: WeightProfile) -> ParabolicView:
    if profile.coords != "scaled":
        raise PreconditionError("parabolic view is defined on scaled coordinates")
    adj = profile.weights + parabola(profile.ys - profile.base.x)
    return ParabolicView(profile=profile, adjusted=adj)


def _weight_from_energy(n: int, m1, span_lines: int, offset):
    """Shared recentering so scalar and vector paths are bit-identical.

    With snapped endpoints g1, g2 the centering term 2*n*t12 + 2*n^(2/3)*(y-x)
    collapses to span_lines + (g2-g1)*step; offset is that grid distance.
    """
    return _alpha(n) * (m1 - span_lines - offset)


def _snap_endpoint(env: Environment, triple: CompatibleTriple, p: ScaledPoint) -> tuple[int, int, float, float]:
    """(line, grid index, snapped scaled x, scaled snap error) for a scaled point."""
    n = triple.n
    nt = n * p.t
    line = int(round(nt))
    if abs(nt - line) > INTEGRALITY_TOL:
        raise PreconditionError(f"n*t = {nt} is not an integer")
    if line < 0 or line >= env.lines:
        raise CoverageError(f"line {line} outside environment [0, {env.lines})")
    u = unscaled_coordinate(n, p.x, p.t)
    g, pu, err = env.grid.snap(u)
    denom = 2.0 * n ** (2.0 / 3.0)
    return line, g, (pu - nt) / denom, err / denom


def scaled_weight_detail(env: Environment, triple: CompatibleTriple,
                         frm: ScaledPoint, to: ScaledPoint) -> tuple[float, float, float]:
    """(weight, snapped from-x, snapped to-x)."""
    if abs(frm.t - triple.t1) > 1e-12 or abs(to.t - triple.t2) > 1e-12:
        raise PreconditionError("endpoint times must match the triple")
    l1, g1, xs, _ = _snap_endpoint(env, triple, frm)
    l2, g2, ys, _ = _snap_endpoint(env, triple, to)
    if g2 < g1:
        raise PreconditionError(
            f"weight undefined: y={to.x} below x - n^(1/3) t12 / 2 after snapping")
    m1 = lpp.max_energy(env, (env.grid.point(g1), l1), (env.grid.point(g2), l2))
    w = _weight_from_energy(triple.n, m1, l2 - l1, (g2 - g1) * env.grid.step)
    return float(w), xs, ys


def scaled_weight(env: Environment, triple: CompatibleTriple,
                  frm: ScaledPoint, to: ScaledPoint) -> float:
    """Scaled, centered maximal energy of the journey frm -> to.

    Endpoints snap to the nearest grid point; the snapped coordinates are used
    inside the centering terms as well, keeping structural identities exact.
    """
    return scaled_weight_detail(env, triple, frm, to)[0]


def forward_profile(env: Environment, triple: CompatibleTriple, base: ScaledPoint,
                    y_max: float | None = None) -> WeightProfile:
    """Weights from a fixed base to every grid endpoint, in one DP sweep.

    Pointwise bit-identical to scaled_weight at each output location.
    """
    l1, g1, xs, ex = _snap_endpoint(env, triple, base)
    l2 = triple.line2
    if l2 >= env.lines:
        raise CoverageError(f"line {l2} outside environment [0, {env.lines})")
    hi = None
    if y_max is not None:
        _, hi, _, _ = _snap_endpoint(env, triple, ScaledPoint(y_max, triple.t2))
    _, m = lpp.max_energy_profile(env, (env.grid.point(g1), l1), l2, hi=hi)
    idx = np.arange(g1, g1 + m.size)
    weights = _weight_from_energy(triple.n, m, l2 - l1, (idx - g1) * env.grid.step)
    ys = scaled_x(triple.n, env.grid.origin + idx * env.grid.step, triple.t2)
    return WeightProfile(triple=triple, base=ScaledPoint(xs, triple.t1), direction="forward",
                         ys=ys, weights=weights, snap_errors=np.zeros(ys.size),
                         base_snap_error=ex)


def _reflected(env: Environment, l1: int, l2: int, glo: int, ghi: int) -> Environment:
    """Line-reversed, coordinate-negated, value-negated view over a grid slice.

    Staircases from (u, l1) to (v, l2) correspond bijectively, with equal
    energy, to staircases of the reflected environment from (-point(ghi), 0)
    to (-u, l2 - l1).
    """
    vals = [-line_values(env, k)[glo: ghi + 1][::-1] for k in range(l2, l1 - 1, -1)]
    grid = GridSpec(-env.grid.point(ghi), env.grid.step, ghi - glo + 1)
    return Environment.from_arrays(vals, grid)


def backward_profile(env: Environment, triple: CompatibleTriple, base: ScaledPoint,
                     x_min: float | None = None) -> WeightProfile:
    """Weights from every grid start location to a fixed base, in one DP sweep.

    Implemented as a forward sweep of the reflected environment; values agree
    with scaled_weight to the 1e-9 identity tolerance (float association
    differs between sweep directions).
    """
    l2, g2, ys_snap, ey = _snap_endpoint(env, triple, base)
    l1 = triple.line1
    if l1 < 0:
        raise CoverageError(f"line {l1} outside environment")
    glo = 0
    if x_min is not None:
        glo, _, _, _ = _snap_endpoint(env, triple, ScaledPoint(x_min, triple.t1))
    glo = min(glo, g2)
    renv = _reflected(env, l1, l2, glo, g2)
    _, m = lpp.max_energy_profile(renv, (renv.grid.origin, 0), l2 - l1)
    # Reflected endpoint r corresponds to original start index g2 - r.
    idx = g2 - np.arange(m.size)
    weights = _weight_from_energy(triple.n, m, l2 - l1, (g2 - idx) * env.grid.step)
    xs = scaled_x(triple.n, env.grid.origin + idx * env.grid.step, triple.t1)
    order = np.argsort(xs)
    return WeightProfile(triple=triple, base=ScaledPoint(ys_snap, triple.t2), direction="backward",
                         ys=xs[order], weights=weights[order], snap_errors=np.zeros(m.size),
                         base_snap_error=ey)


def normalized_profile(p: WeightProfile) -> WeightProfile:
    """Duration-normalized coordinates: (y, w) -> ((y-base) t12^(-2/3), w t12^(-1/3))."""
    if p.coords != "scaled":
        raise PreconditionError("profile is already normalized")
    t12 = p.triple.t12
    zs = (p.ys - p.base.x) * t12 ** (-2.0 / 3.0)
    ws = p.weights * t12 ** (-1.0 / 3.0)
    return replace(p, ys=zs, weights=ws, coords="normalized")


def denormalized_profile(p: WeightProfile) -> WeightProfile:
    if p.coords != "normalized":
        raise PreconditionError("profile is not normalized")
    t12 = p.triple.t12
    ys = p.base.x + p.ys * t12 ** (2.0 / 3.0)
    ws = p.weights * t12 ** (1.0 / 3.0)
    return replace(p, ys=ys, weights=ws, coords="scaled")


def weight_matrix(env: Environment, triple: CompatibleTriple,
                  x_interval: tuple[float, float], y_interval: tuple[float, float],
                  x_stride: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weights for every grid (start, end) pair in a rectangle.

    Returns (xs, ys, W) with W[r, c] the weight from (xs[r], t1) to (ys[c], t2),
    -inf where the journey is undefined.  x_stride subsamples start locations.
    """
    n = triple.n
    l1, l2 = triple.line1, triple.line2
    if l1 < 0 or l2 >= env.lines:
        raise CoverageError("triple lines outside environment")
    gx_lo = env.grid.nearest_index(unscaled_coordinate(n, min(x_interval), triple.t1))
    gx_hi = env.grid.nearest_index(unscaled_coordinate(n, max(x_interval), triple.t1))
    gy_lo = env.grid.nearest_index(unscaled_coordinate(n, min(y_interval), triple.t2))
    gy_hi = env.grid.nearest_index(unscaled_coordinate(n, max(y_interval), triple.t2))
    starts = np.arange(gx_lo, gx_hi + 1, x_stride)
    m = lpp.max_energy_matrix(env, l1, l2, starts, gy_lo, gy_hi)
    ends = np.arange(gy_lo, gy_hi + 1)
    offsets = (ends[None, :] - starts[:, None]) * env.grid.step
    w = _weight_from_energy(n, m, l2 - l1, offsets)
    xs = scaled_x(n, env.grid.origin + starts * env.grid.step, triple.t1)
    ys = scaled_x(n, env.grid.origin + ends * env.grid.step, triple.t2)
    return xs, ys, w


def parabolic_delta(env: Environment, triple: CompatibleTriple,
                    x_pair: tuple[float, float], y_pair: tuple[float, float]) -> float:
    """Difference of parabolically adjusted weights between two endpoint pairs.

    Supports collapsed x or y intervals (x1 == x2 or y1 == y2).
    """
    x1, x2 = x_pair
    y1, y2 = y_pair
    w2, xs2, ys2 = scaled_weight_detail(env, triple, ScaledPoint(x2, triple.t1), ScaledPoint(y2, triple.t2))
    w1, xs1, ys1 = scaled_weight_detail(env, triple, ScaledPoint(x1, triple.t1), ScaledPoint(y1, triple.t2))
    return (w2 + float(parabola(ys2 - xs2))) - (w1 + float(parabola(ys1 - xs1)))


def verify_scaling_principle(env: Environment, triple: CompatibleTriple,
                             frm: ScaledPoint, to: ScaledPoint) -> float:
    """Residual of the exact duration-rescaling identity between the two systems.

    Both parameterizations resolve to the same unscaled endpoints, hence the
    same maximal energy on the same environment; the residual is pure scalar
    roundoff and must be <= 1e-9.
    """
    t12 = triple.t12
    lhs = scaled_weight(env, triple, frm, to)
    m = triple.line2 - triple.line1
    kappa = triple.t1 / t12
    rescaled = CompatibleTriple(m, kappa, kappa + 1.0)
    s = t12 ** (-2.0 / 3.0)
    rhs = scaled_weight(env, rescaled, ScaledPoint(frm.x * s, kappa), ScaledPoint(to.x * s, kappa + 1.0))
    return abs(lhs - t12 ** (1.0 / 3.0) * rhs)


def verify_superadditivity(env: Environment, triple: CompatibleTriple,
                           x: float, y: float, z: float, t_mid: float) -> float:
    """Slack of weight(x->y) >= weight(x->z at t_mid) + weight(z at t_mid -> y).

    Requires both sub-triples compatible and all three weights well defined.
    The slack must be >= -1e-9 on every sample: concatenating the two optimal
    paths through (z, t_mid) is itself an admissible path.
    """
    first = CompatibleTriple(triple.n, triple.t1, t_mid)
    second = CompatibleTriple(triple.n, t_mid, triple.t2)
    n13 = triple.n ** (1.0 / 3.0)
    if y < x - 0.5 * n13 * triple.t12 or z < x - 0.5 * n13 * first.t12 or y < z - 0.5 * n13 * second.t12:
        raise PreconditionError("domain condition violated: some weight undefined")
    whole = scaled_weight(env, triple, ScaledPoint(x, triple.t1), ScaledPoint(y, triple.t2))
    lower = scaled_weight(env, first, ScaledPoint(x, triple.t1), ScaledPoint(z, t_mid))
    upper = scaled_weight(env, second, ScaledPoint(z, t_mid), ScaledPoint(y, triple.t2))
    return whole - (lower + upper)


@dataclass(frozen=True)
class RewireCheck:
    applicable: bool
    residual: float | None = None
    detail: dict = field(default_factory=dict)


def verify_rewire_inequality(env: Environment, triple: CompatibleTriple,
                             starts: tuple[float, float], ends: tuple[float, float]) -> float:
    """Pathwise crossing inequality: w(x1,y1) + w(x2,y2) >= w(x2,y1) + w(x1,y2).

    The two journeys x2 -> y1 and x1 -> y2 must cross; splitting both at a
    shared grid point and exchanging tails yields admissible journeys for the
    uncrossed pairs, so the slack is >= -1e-9 on every sample.  (Any reward at
    the start locations cancels from both sides.)
    """
    x1, x2 = starts
    y1, y2 = ends
    if not (x1 < x2) or not (y1 < y2):
        raise PreconditionError("need x1 < x2 and y1 < y2")
    t1, t2 = triple.t1, triple.t2
    straight = (scaled_weight(env, triple, ScaledPoint(x1, t1), ScaledPoint(y1, t2))
                + scaled_weight(env, triple, ScaledPoint(x2, t1), ScaledPoint(y2, t2)))
    crossed = (scaled_weight(env, triple, ScaledPoint(x2, t1), ScaledPoint(y1, t2))
               + scaled_weight(env, triple, ScaledPoint(x1, t1), ScaledPoint(y2, t2)))
    return straight - crossed


def verify_crossing_rewire(env: Environment, triple: CompatibleTriple,
                           starts: tuple[float, float], ends: tuple[float, float],
                           f, window: tuple[float, float], tol: float = 1e-9) -> RewireCheck:
    """Endpoint-exchange identity for two crossing rewarded polymers.

    Applicable when rewarded polymers x2 -> y1 and x1 -> y2 exist for the
    given starts (their rewarded weights attain the window maxima within tol)
    with x1 < x2 and y1 < y2.  The rewired pair x1 -> y1 and x2 -> y2 then
    carries the same summed rewarded weight.  Note the crossing inequality
    (verify_rewire_inequality) forces ties at the maxima for this to happen,
    so generic environments report not-applicable; exact-tie instances arise
    from degenerate or constructed data.
    """
    from .initcond import f_rewarded_weight  # local import to avoid a cycle

    x1, x2 = starts
    y1, y2 = ends
    if not (x1 < x2) or not (y1 < y2):
        return RewireCheck(applicable=False, detail={"reason": "no crossing configuration"})
    r1 = f_rewarded_weight(env, triple, f, y1, window)
    r2 = f_rewarded_weight(env, triple, f, y2, window)
    t1, t2 = triple.t1, triple.t2

    def rewarded(x: float, y: float) -> float:
        vals, mask = f.evaluate(np.array([x]))
        if not mask[0]:
            return -math.inf
        return scaled_weight(env, triple, ScaledPoint(x, t1), ScaledPoint(y, t2)) + float(vals[0])

    crossed1 = rewarded(x2, y1)
    crossed2 = rewarded(x1, y2)
    if crossed1 < r1.weight - tol or crossed2 < r2.weight - tol:
        return RewireCheck(applicable=False,
                           detail={"reason": "stated crossing polymers do not attain the maxima",
                                   "gap_to_y1": r1.weight - crossed1,
                                   "gap_to_y2": r2.weight - crossed2})
    rewired = rewarded(x1, y1) + rewarded(x2, y2)
    residual = abs((r1.weight + r2.weight) - rewired)
    return RewireCheck(applicable=True, residual=residual,
                       detail={"original": r1.weight + r2.weight, "rewired": rewired})
