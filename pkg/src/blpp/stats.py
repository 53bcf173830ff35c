"""Statistical estimators and independent distributional oracles.

Tail curves carry Wilson score intervals; decay exponents are fitted by least
squares on log(-log p) against log(level), restricted to levels whose
empirical probability is measurably inside (0, 1).  The top-eigenvalue oracle
samples a Hermitian Gaussian matrix and diagonalizes it with cyclic Jacobi
rotations; a Sturm-sequence bisection on the characteristic polynomial serves
as its own independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import EstimationError, InputError, NumericError, PreconditionError
from .scaled import WeightProfile

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is a declared dependency
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn


@dataclass(frozen=True, eq=False)
class TailCurve:
    """Empirical exceedance probabilities with Wilson 95% intervals."""

    levels: np.ndarray
    exceed_counts: np.ndarray
    total: int
    probabilities: np.ndarray
    wilson_low: np.ndarray
    wilson_high: np.ndarray


@dataclass(frozen=True)
class ExponentFit:
    slope: float
    intercept: float
    r_squared: float
    slope_stderr: float


@dataclass(frozen=True)
class TheoremConstants:
    """Reference-curve constants for shape-only overlays; values are not pinned."""

    c: float = 1.0
    C: float = 1.0
    c1: float = None  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if not (self.c > 0 and self.C > 0):
            raise InputError("constants must be positive")
        derived = min(2.0 ** -2.5 * self.c, 0.125)
        if self.c1 is None:
            object.__setattr__(self, "c1", derived)
        elif abs(self.c1 - derived) > 1e-12:
            raise InputError(f"c1 = {self.c1} inconsistent with min(2^-5/2 c, 1/8) = {derived}")


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        raise InputError("need a positive sample count")
    p = k / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = (z / denom) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return max(0.0, center - half), min(1.0, center + half)


def tail_curve_from_counts(levels, counts, total: int) -> TailCurve:
    levels = np.asarray(levels, dtype=float)
    counts = np.asarray(counts, dtype=int)
    if levels.size == 0 or counts.shape != levels.shape:
        raise InputError("levels and counts must be nonempty and congruent")
    if np.any(counts > total):
        raise InputError("counts exceed total")
    lows, highs = zip(*(wilson_interval(int(k), total) for k in counts))
    return TailCurve(levels=levels, exceed_counts=counts, total=total,
                     probabilities=counts / total,
                     wilson_low=np.array(lows), wilson_high=np.array(highs))


def estimate_tail(samples, levels) -> TailCurve:
    """Exceedance fractions P(X >= level) over sorted levels."""
    s = np.asarray(samples, dtype=float)
    levels = np.asarray(levels, dtype=float)
    if s.size == 0:
        raise InputError("empty sample set")
    if levels.size == 0 or np.any(np.diff(levels) < 0):
        raise InputError("levels must be nonempty and sorted")
    counts = np.array([(s >= lv).sum() for lv in levels])
    return tail_curve_from_counts(levels, counts, s.size)


def fit_exponent(curve: TailCurve, drop_zero: bool = True) -> ExponentFit:
    """Least-squares slope of log(-log p) against log(level).

    Levels outside p in [5/N, 0.5], with p in {0, 1} or level <= 0, are noise
    dominated and excluded.  drop_zero=False raises when zero-probability
    levels are present instead of silently dropping them.
    """
    p = curve.probabilities
    if not drop_zero and np.any(p == 0.0):
        raise EstimationError("zero-probability levels present")
    lo = 5.0 / curve.total
    usable = (p >= lo) & (p <= 0.5) & (curve.levels > 0)
    if usable.sum() < 3:
        raise EstimationError(f"only {int(usable.sum())} usable levels, need >= 3")
    x = np.log(curve.levels[usable])
    y = np.log(-np.log(p[usable]))
    return _least_squares(x, y)


def holder_fit(pairs) -> ExponentFit:
    """Slope of log(value) against log(eps) over (eps, value) pairs."""
    arr = np.asarray(pairs, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 3:
        raise EstimationError("need at least 3 (eps, value) pairs")
    if np.any(arr <= 0):
        raise EstimationError("eps and values must be positive")
    return _least_squares(np.log(arr[:, 0]), np.log(arr[:, 1]))


def _least_squares(x: np.ndarray, y: np.ndarray) -> ExponentFit:
    n = x.size
    xm, ym = x.mean(), y.mean()
    sxx = float(((x - xm) ** 2).sum())
    if sxx == 0.0:
        raise EstimationError("degenerate abscissae")
    slope = float(((x - xm) * (y - ym)).sum() / sxx)
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    ss_res = float((resid ** 2).sum())
    ss_tot = float(((y - ym) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    stderr = math.sqrt(ss_res / max(n - 2, 1) / sxx) if n > 2 else 0.0
    return ExponentFit(slope=slope, intercept=float(intercept), r_squared=r2, slope_stderr=stderr)


def ks_distance(a, b) -> float:
    """Two-sample Kolmogorov-Smirnov statistic."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise InputError("both samples must be nonempty")
    allv = np.concatenate([a, b])
    ca = np.searchsorted(a, allv, side="right") / a.size
    cb = np.searchsorted(b, allv, side="right") / b.size
    return float(np.abs(ca - cb).max())


# ---------------------------------------------------------------------------
# Modulus of continuity statistic


def _norm_factor(gaps: np.ndarray) -> np.ndarray:
    return np.sqrt(gaps) * np.log(1.0 / gaps) ** (2.0 / 3.0)


def modulus_statistic(profile: WeightProfile, cutoff_low: float, scheme: str = "auto") -> float:
    """Largest normalized increment of the profile over [-1, 1].

    Pairs (y, z) with cutoff_low < z - y <= 1/e contribute
    |W(z) - W(y)| / ((z-y)^(1/2) (log 1/(z-y))^(2/3)).  The dyadic scheme
    restricts to dyadically aligned pairs at power-of-two separations, which
    tracks the full-grid supremum within a factor of 4 by a chaining argument;
    the full scan enumerates every grid pair.  scheme="auto" scans fully up to
    4096 profile points and falls back to the dyadic scheme beyond.
    """
    p = profile.restricted(-1.0, 1.0)
    w = p.weights
    ys = p.ys
    h = p.spacing
    if cutoff_low < 2.0 * h * (1 - 1e-9):
        raise PreconditionError(f"cutoff {cutoff_low} below twice the grid resolution {h}")
    if scheme == "auto":
        scheme = "full" if w.size <= 4096 else "dyadic"
    e_inv = 1.0 / math.e
    best = 0.0
    if scheme == "full":
        d_lo = int(math.floor(cutoff_low / h + 1e-9)) + 1
        d_hi = min(int(math.floor(e_inv / h + 1e-9)), w.size - 1)
        for d in range(d_lo, d_hi + 1):
            gap = d * h
            if gap <= cutoff_low or gap > e_inv:
                continue
            m = float(np.abs(w[d:] - w[:-d]).max())
            v = m / float(_norm_factor(np.array([gap]))[0])
            if v > best:
                best = v
    elif scheme == "dyadic":
        i = 2  # 2^-2 is the largest dyadic scale <= 1/e
        while 2.0 ** -i > cutoff_low * (1 + 1e-12):
            gap = 2.0 ** -i
            d = int(round(gap / h))
            if d >= 1 and abs(d * h - gap) <= 1e-9 * gap and d < w.size:
                # dyadically aligned left endpoints: ys[k] a multiple of 2^-i
                ratio = ys / gap
                aligned = np.abs(ratio - np.round(ratio)) < 1e-9
                left = np.where(aligned[: w.size - d])[0]
                if left.size:
                    m = float(np.abs(w[left + d] - w[left]).max())
                    v = m / float(_norm_factor(np.array([gap]))[0])
                    if v > best:
                        best = v
            i += 1
    else:
        raise PreconditionError(f"unknown scheme {scheme!r}")
    return best


# ---------------------------------------------------------------------------
# Top-eigenvalue oracle


@njit(cache=False)
def _jacobi_max_eig(a: np.ndarray, tol: float, max_sweeps: int):  # pragma: no cover - jit
    m = a.shape[0]
    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(m - 1):
            for q in range(p + 1, m):
                off += a[p, q] * a[p, q]
        if math.sqrt(2.0 * off) < tol:
            best = a[0, 0]
            for i in range(1, m):
                if a[i, i] > best:
                    best = a[i, i]
            return best, sweep
        if sweep == max_sweeps:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                phi = 0.5 * math.atan2(2.0 * apq, a[q, q] - a[p, p])
                c = math.cos(phi)
                s = math.sin(phi)
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = c * c * app + s * s * aqq - 2.0 * s * c * apq
                a[q, q] = s * s * app + c * c * aqq + 2.0 * s * c * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(m):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = c * aip - s * aiq
                        a[p, i] = a[i, p]
                        a[i, q] = c * aiq + s * aip
                        a[q, i] = a[i, q]
    return math.nan, -1


JACOBI_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100


def largest_eigenvalue_jacobi(h: np.ndarray) -> float:
    """Largest eigenvalue of a Hermitian matrix by cyclic Jacobi rotations.

    A complex Hermitian H = A + iB embeds as the real symmetric [[A, -B], [B, A]]
    with the same spectrum (doubled); rotations run until the off-diagonal
    Frobenius norm drops below 1e-10.
    """
    h = np.asarray(h)
    if np.iscomplexobj(h):
        a, b = h.real, h.imag
        m = np.block([[a, -b], [b, a]])
    else:
        m = h.astype(float, copy=True)
    if m.shape[0] == 1:
        return float(m[0, 0])
    val, sweeps = _jacobi_max_eig(np.ascontiguousarray(m, dtype=float), JACOBI_TOL, JACOBI_MAX_SWEEPS)
    if sweeps < 0:
        raise NumericError(f"Jacobi rotations did not converge in {JACOBI_MAX_SWEEPS} sweeps")
    return float(val)


def _count_sign_changes(minors: list[float]) -> int:
    count = 0
    prev = 1.0
    for d in minors:
        if d == 0.0:
            d = -prev * 1e-300  # treat exact zero as a change; perturbed away by callers
        if (d < 0) != (prev < 0):
            count += 1
        prev = d
    return count


def largest_eigenvalue_bisection(h: np.ndarray, tol: float = 1e-10) -> float:
    """Largest root of the characteristic polynomial via Sturm-count bisection.

    The number of eigenvalues below x equals the number of sign changes in the
    sequence of leading principal minors of H - xI.  Independent of the Jacobi
    route; intended for small matrices.
    """
    h = np.asarray(h)
    n = h.shape[0]
    radius = float(np.abs(h).sum(axis=1).max()) + 1.0

    def eigs_below(x: float) -> int:
        m = h - x * np.eye(n)
        minors = [float(np.linalg.det(m[: k + 1, : k + 1]).real) for k in range(n)]
        return _count_sign_changes(minors)

    lo, hi = -radius, radius
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eigs_below(mid) == n:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def sample_gue_matrix(n: int, seed) -> np.ndarray:
    """Hermitian matrix with N(0,1) diagonal and N(0,1/2)+iN(0,1/2) off-diagonal."""
    if n < 1:
        raise PreconditionError(f"need n >= 1, got {n}")
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    diag = rng.standard_normal(n)
    re = rng.standard_normal((n, n)) * math.sqrt(0.5)
    im = rng.standard_normal((n, n)) * math.sqrt(0.5)
    h = np.zeros((n, n), dtype=complex)
    iu = np.triu_indices(n, 1)
    h[iu] = re[iu] + 1j * im[iu]
    h = h + h.conj().T
    h[np.diag_indices(n)] = diag
    return h


def sample_gue_top_eigenvalue(n: int, seed) -> float:
    """Largest eigenvalue of a sampled Hermitian Gaussian matrix."""
    return largest_eigenvalue_jacobi(sample_gue_matrix(n, seed))


def dyson_top_oracle(n_particles: int, t: float, seed) -> float:
    """Top particle at time t of the nonintersecting Brownian system.

    Equals sqrt(t) times a top eigenvalue draw; shares the law of the maximal
    unscaled energy to (t, n_particles - 1) over n_particles Brownian lines.
    """
    if n_particles < 1 or not t > 0:
        raise PreconditionError("need n_particles >= 1 and t > 0")
    return math.sqrt(t) * sample_gue_top_eigenvalue(n_particles, seed)


# ---------------------------------------------------------------------------
# Two-point tail


def two_point_tail(envs, triple, x: float, eps: float, k_levels) -> TailCurve:
    """Joint tail of a gap-eps adjusted-profile difference with the global-bound event.

    For each environment, the narrow-wedge adjusted profile A(y) = W(y) + Q(y)
    is swept once; level K counts the sample when |A(x+eps) - A(x)| >= K
    sqrt(eps) and |A| <= K/4 throughout [x-2, x+2] (grid scan).
    """
    from .scaled import CompatibleTriple, ScaledPoint, forward_profile, parabolic_view

    if not (0 < eps <= 1):
        raise PreconditionError(f"eps must be in (0, 1], got {eps}")
    k_levels = np.asarray(k_levels, dtype=float)
    counts = np.zeros(k_levels.size, dtype=int)
    total = 0
    sqeps = math.sqrt(eps)
    for env in envs:
        prof = forward_profile(env, triple, ScaledPoint(0.0, triple.t1))
        view = parabolic_view(prof)
        adj = view.adjusted
        i0 = prof.index_of(x)
        i1 = prof.index_of(x + eps)
        d = abs(adj[i1] - adj[i0])
        lo = prof.index_of(x - 2.0)
        hi = prof.index_of(x + 2.0)
        g_sup = float(np.abs(adj[lo: hi + 1]).max())
        counts += (d >= k_levels * sqeps) & (g_sup <= k_levels / 4.0)
        total += 1
    if total < 1:
        raise InputError("empty environment batch")
    return tail_curve_from_counts(k_levels, counts, total)
