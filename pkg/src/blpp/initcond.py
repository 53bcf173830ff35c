"""General initial conditions, rewarded line-to-point weights, and event predicates.

An initial condition is a function f from scaled start locations to rewards,
possibly unrewarded (excluded) on part of the line.  Membership in the
admissible class is parameterized by a triple of positive constants
(growth envelope, central window, central floor) and is checked on the
evaluation window only; exclusion is represented by a mask, never by large
negative floats, so no arithmetic is ever done on unrewarded entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import lpp
from .env import Environment
from .errors import ConfigurationError, CoverageError, NoRewardError, PreconditionError
from .scaled import (CompatibleTriple, ScaledPoint, WeightProfile, _alpha,
                     _weight_from_energy, backward_profile, scaled_x,
                     unscaled_coordinate, weight_matrix)


@dataclass(frozen=True)
class PsiTriple:
    """Positive constants bounding growth, central window and central floor."""

    psi1: float
    psi2: float
    psi3: float

    def __post_init__(self) -> None:
        if not (self.psi1 > 0 and self.psi2 > 0 and self.psi3 > 0):
            raise ConfigurationError(f"psi constants must be positive, got {self}")


DEFAULT_PSI = PsiTriple(4.0, 2.0, 4.0)


@dataclass(frozen=True, eq=False)
class InitialCondition:
    """Reward function over scaled start locations.

    kind is one of narrow-wedge | flat | table | expression.  evaluate(xs)
    returns (values, admissible): the reward at each x and a mask of rewarded
    locations.  The narrow wedge rewards exactly one location: the entry of xs
    nearest its mass point (grid-aware snapping, consistent with endpoint
    snapping elsewhere).
    """

    kind: str
    psi: PsiTriple = DEFAULT_PSI
    fn: Callable[[np.ndarray], np.ndarray] | None = None
    location: float = 0.0

    def evaluate(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        xs = np.asarray(xs, dtype=float)
        if self.kind == "narrow-wedge":
            vals = np.zeros(xs.shape)
            mask = np.zeros(xs.shape, dtype=bool)
            if xs.size:
                mask[int(np.argmin(np.abs(xs - self.location)))] = True
            return vals, mask
        vals = np.asarray(self.fn(xs), dtype=float)
        mask = np.isfinite(vals)
        return np.where(mask, vals, 0.0), mask

    def check_on_window(self, xs: np.ndarray, vals: np.ndarray, mask: np.ndarray) -> None:
        """Admissibility on the window: growth envelope and central floor."""
        envelope = self.psi.psi1 * (1.0 + np.abs(xs))
        if np.any(vals[mask] > envelope[mask] + 1e-9):
            raise ConfigurationError("initial condition exceeds its growth envelope on the window")
        central = mask & (np.abs(xs) <= self.psi.psi2)
        if central.any() and vals[central].max() <= -self.psi.psi3:
            raise ConfigurationError("initial condition below its central floor on the window")


def narrow_wedge(location: float = 0.0, psi: PsiTriple = DEFAULT_PSI) -> InitialCondition:
    return InitialCondition(kind="narrow-wedge", psi=psi, location=location)


def flat(psi: PsiTriple = DEFAULT_PSI) -> InitialCondition:
    return InitialCondition(kind="flat", psi=psi, fn=lambda xs: np.zeros(np.shape(xs)))


def from_table(xs, fs, extend: str = "none", psi: PsiTriple = DEFAULT_PSI) -> InitialCondition:
    """Piecewise-linear table; unrewarded outside the table range unless extend='linear'."""
    xs = np.asarray(xs, dtype=float)
    fs = np.asarray(fs, dtype=float)
    if xs.ndim != 1 or xs.shape != fs.shape or xs.size < 2:
        raise ConfigurationError("table needs two equal-length columns with at least two rows")
    if np.any(np.diff(xs) <= 0):
        raise ConfigurationError("table abscissae must be strictly increasing")
    if extend not in ("none", "linear"):
        raise ConfigurationError(f"unknown extend mode {extend!r}")

    def fn(q: np.ndarray) -> np.ndarray:
        out = np.interp(q, xs, fs)
        if extend == "linear":
            lo = q < xs[0]
            hi = q > xs[-1]
            out = np.where(lo, fs[0] + (q - xs[0]) * (fs[1] - fs[0]) / (xs[1] - xs[0]), out)
            out = np.where(hi, fs[-1] + (q - xs[-1]) * (fs[-1] - fs[-2]) / (xs[-1] - xs[-2]), out)
        else:
            out = np.where((q < xs[0]) | (q > xs[-1]), -np.inf, out)
        return out

    return InitialCondition(kind="table", psi=psi, fn=fn)


def load_table(path, extend: str = "none", psi: PsiTriple = DEFAULT_PSI) -> InitialCondition:
    """Two-column numeric text file (x, f(x))."""
    data = np.loadtxt(path, ndmin=2)
    if data.shape[1] != 2:
        raise ConfigurationError(f"table file must have two columns, got {data.shape[1]}")
    return from_table(data[:, 0], data[:, 1], extend=extend, psi=psi)


_EXPR_GLOBALS = {"__builtins__": {}}
_EXPR_LOCALS = {name: getattr(np, name) for name in
                ("abs", "sqrt", "exp", "log", "sin", "cos", "tanh", "minimum", "maximum", "where")}
_EXPR_LOCALS["pi"] = math.pi
_EXPR_LOCALS["inf"] = math.inf


def from_expression(expr: str, psi: PsiTriple = DEFAULT_PSI) -> InitialCondition:
    """Vectorized expression in x, e.g. '-0.5*abs(x)'.  Trusted configuration input."""
    code = compile(expr, "<initial-condition>", "eval")

    def fn(q: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(eval(code, _EXPR_GLOBALS, {**_EXPR_LOCALS, "x": q}),
                                          dtype=float), np.shape(q)).copy()

    return InitialCondition(kind="expression", psi=psi, fn=fn)


@dataclass(frozen=True)
class EventReport:
    """Outcome of a named event predicate, with the witness that decided it."""

    name: str
    outcome: bool
    witness: dict


@dataclass(frozen=True)
class FRewarded:
    weight: float
    argmax_x: float
    boundary_hit: bool


def f_rewarded_weight(env: Environment, triple: CompatibleTriple, f: InitialCondition,
                      y: float, window: tuple[float, float]) -> FRewarded:
    """Best reward-plus-weight over grid start locations in the window.

    One backward-profile sweep; ties in the maximum resolve to the smallest
    start location.  boundary_hit flags an argmax on the window edge, exposing
    truncation bias instead of silently accepting it.
    """
    lo, hi = min(window), max(window)
    prof = backward_profile(env, triple, ScaledPoint(y, triple.t2), x_min=lo)
    keep = prof.ys <= hi + 1e-12
    xs = prof.ys[keep]
    ws = prof.weights[keep]
    vals, mask = f.evaluate(xs)
    f.check_on_window(xs, vals, mask)
    if not mask.any():
        raise NoRewardError("initial condition unrewarded everywhere on the window")
    total = np.where(mask, ws + vals, -np.inf)
    k = int(np.argmax(total))
    return FRewarded(weight=float(total[k]), argmax_x=float(xs[k]),
                     boundary_hit=(k == 0 or k == xs.size - 1))


def f_rewarded_profile(env: Environment, triple: CompatibleTriple, f: InitialCondition,
                       window: tuple[float, float], y_min: float, y_max: float) -> WeightProfile:
    """Rewarded line-to-point weights for every output location, in one sweep.

    The reward enters the dynamic program as its initial row, so the whole
    profile costs one pass.  Agrees with f_rewarded_weight to the 1e-9
    identity tolerance at every output location.
    """
    n = triple.n
    l1, l2 = triple.line1, triple.line2
    if l1 < 0 or l2 >= env.lines:
        raise CoverageError("triple lines outside environment")
    glo = env.grid.nearest_index(unscaled_coordinate(n, min(window), triple.t1))
    gwhi = env.grid.nearest_index(unscaled_coordinate(n, max(window), triple.t1))
    ghi = env.grid.nearest_index(unscaled_coordinate(n, y_max, triple.t2))
    gy_lo = env.grid.nearest_index(unscaled_coordinate(n, y_min, triple.t2))
    if gy_lo < glo:
        raise CoverageError("output range extends below the start window")
    hi = max(ghi, gwhi)
    idx = np.arange(glo, hi + 1)
    xs = scaled_x(n, env.grid.origin + idx * env.grid.step, triple.t1)
    vals, mask = f.evaluate(xs)
    mask = mask & (idx <= gwhi)
    f.check_on_window(xs[mask], vals[mask], np.ones(int(mask.sum()), dtype=bool))
    if not mask.any():
        raise NoRewardError("initial condition unrewarded everywhere on the window")
    # Fold the reward and start-centering into the DP's initial row:
    # weight(x->y) + f(x) maximizes  M + g*step + f/alpha  over start indices g.
    a = _alpha(n)
    reward = np.where(mask, idx * env.grid.step + vals / a, -np.inf)
    m = lpp.max_energy_rewarded(env, l1, l2, reward, glo, hi)
    out = (idx >= gy_lo) & (idx <= ghi)
    weights = a * (m[out] - (l2 - l1) - idx[out] * env.grid.step)
    ys = scaled_x(n, env.grid.origin + idx[out] * env.grid.step, triple.t2)
    return WeightProfile(triple=triple, base=ScaledPoint(float(xs[mask][0]), triple.t1),
                         direction="forward", ys=ys, weights=weights,
                         snap_errors=np.zeros(ys.size))


def regfluc(env: Environment, triple: CompatibleTriple, f: InitialCondition, R: float) -> EventReport:
    """Rewarded polymers to (-1, t2) start at or above -(R+1); to (1, t2) at or below R+1.

    The grid argmax stands in for the polymer start (smallest location on ties).
    Requires a window at least [-(R+3), R+3].
    """
    lo_needed = unscaled_coordinate(triple.n, -(R + 3.0), triple.t1)
    hi_needed = unscaled_coordinate(triple.n, R + 3.0, triple.t1)
    if env.grid.origin > lo_needed or env.grid.last < hi_needed:
        raise CoverageError(f"window [-(R+3), R+3] = [{-(R + 3)}, {R + 3}] not covered by grid")
    window = (-(R + 3.0), R + 3.0)
    left = f_rewarded_weight(env, triple, f, -1.0, window)
    right = f_rewarded_weight(env, triple, f, 1.0, window)
    ok = (left.argmax_x >= -(R + 1.0) - 1e-9) and (right.argmax_x <= R + 1.0 + 1e-9)
    return EventReport(name="regfluc", outcome=bool(ok),
                       witness={"start_to_minus_one": left.argmax_x,
                                "start_to_plus_one": right.argmax_x, "R": R})


def poly_wgt_reg(env: Environment, triple: CompatibleTriple,
                 x_interval: tuple[float, float], y_interval: tuple[float, float],
                 r: float, x_stride: int = 1) -> EventReport:
    """Duration-normalized adjusted weights stay within r over the whole rectangle."""
    xs, ys, w = weight_matrix(env, triple, x_interval, y_interval, x_stride=x_stride)
    if not np.isfinite(w).all():
        raise PreconditionError("some weight in the rectangle is undefined")
    t12 = triple.t12
    adj = np.abs(t12 ** (-1.0 / 3.0) * w
                 + 2.0 ** -0.5 * t12 ** (-4.0 / 3.0) * np.square(ys[None, :] - xs[:, None]))
    i, j = np.unravel_index(int(np.argmax(adj)), adj.shape)
    return EventReport(name="poly-wgt-reg", outcome=bool(adj[i, j] <= r),
                       witness={"u": float(xs[i]), "v": float(ys[j]), "sup": float(adj[i, j])})


def loc_wgt_reg(env: Environment, triple: CompatibleTriple, x: float, y: float,
                eps: float, r: float) -> EventReport:
    """Raw weight oscillation over the (x, y) eps-squares stays within r*sqrt(eps)."""
    xs, ys, w = weight_matrix(env, triple, (x, x + eps), (y, y + eps))
    if not np.isfinite(w).all():
        raise PreconditionError("some weight in the square is undefined")
    sup = float(w.max() - w.min())
    hi = np.unravel_index(int(np.argmax(w)), w.shape)
    lo = np.unravel_index(int(np.argmin(w)), w.shape)
    return EventReport(name="loc-wgt-reg", outcome=bool(sup <= r * math.sqrt(eps)),
                       witness={"sup": sup, "argmax": (float(xs[hi[0]]), float(ys[hi[1]])),
                                "argmin": (float(xs[lo[0]]), float(ys[lo[1]]))})


def oscillation(profile: WeightProfile, eps: float, lo: float = -1.0, hi: float = 1.0) -> float:
    """Modulus of continuity of the profile over [lo, hi] at scale eps.

    Grid pairs at separation <= eps; when eps exceeds the domain width this is
    the full oscillation (documented convention).
    """
    p = profile.restricted(lo, hi)
    w = p.weights
    h = p.spacing
    dmax = min(int(math.floor(eps / h + 1e-9)), w.size - 1)
    if dmax < 1:
        raise PreconditionError(f"eps {eps} below grid spacing {h}")
    best = 0.0
    for d in range(1, dmax + 1):
        m = float(np.abs(w[d:] - w[:-d]).max())
        if m > best:
            best = m
    return best


def equicty(profile: WeightProfile, rho: float, eps: float) -> EventReport:
    """The profile's modulus of continuity at scale eps stays below rho."""
    omega = oscillation(profile, eps)
    return EventReport(name="equicty", outcome=bool(omega < rho),
                       witness={"omega": omega, "eps": eps})


def unifbd(profile: WeightProfile, K: float) -> EventReport:
    """The profile is uniformly bounded by K on [-1, 1]."""
    p = profile.restricted(-1.0, 1.0)
    k = int(np.argmax(np.abs(p.weights)))
    return EventReport(name="unifbd", outcome=bool(abs(p.weights[k]) <= K),
                       witness={"sup": float(abs(p.weights[k])), "at": float(p.ys[k])})
