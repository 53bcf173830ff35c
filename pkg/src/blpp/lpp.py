"""Unscaled last passage percolation over a Brownian environment.

A staircase from (x, i) to (y, j) is encoded by its nondecreasing jump list
z_{i+1} <= ... <= z_j, where z_k is the point at which the path moves up from
line k-1 to line k (with the conventions z_i = x and z_{j+1} = y).  Its energy
is the telescoping sum of Brownian increments collected along each line.  The
maximal energy over all grid-aligned staircases is computed by a prefix-max
dynamic program that keeps only the previous row resident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable

import numpy as np

from .env import Environment, line_values
from .errors import CapacityError, PreconditionError

try:
    from numba import njit as _njit
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAVE_NUMBA = False

    def _njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

ENUMERATION_GUARD = 10_000_000


class OpCounter:
    """Elementwise DP operation counter (cost instrumentation for tests)."""

    def __init__(self) -> None:
        self.enabled = False
        self.count = 0

    def reset(self) -> None:
        self.count = 0

    def add(self, k: int) -> None:
        if self.enabled:
            self.count += k


dp_ops = OpCounter()

# Test-only hook: called as hook(line_index, dp_row) after each DP line update.
# Used to inject faults when checking that verification actually detects them.
_fault_hook: Callable[[int, np.ndarray], None] | None = None


def set_fault_hook(fn: Callable[[int, np.ndarray], None] | None) -> None:
    global _fault_hook
    _fault_hook = fn


@dataclass(frozen=True, eq=False)
class Staircase:
    """Monotone jump-list path from start=(x, i) to end=(y, j)."""

    start: tuple[float, int]
    end: tuple[float, int]
    jumps: np.ndarray  # z_{i+1..j}; jumps[m] is the entry point onto line i+1+m

    def __post_init__(self) -> None:
        x, i = self.start
        y, j = self.end
        jumps = np.asarray(self.jumps, dtype=float)
        object.__setattr__(self, "jumps", jumps)
        if i > j:
            raise PreconditionError(f"start line {i} above end line {j}")
        if x > y:
            raise PreconditionError(f"start {x} right of end {y}")
        if jumps.shape != (j - i,):
            raise PreconditionError(f"need {j - i} jumps, got {jumps.shape}")
        tol = 1e-12 * max(1.0, abs(x), abs(y))
        if jumps.size:
            if np.any(np.diff(jumps) < -tol):
                raise PreconditionError("jump list must be nondecreasing")
            if jumps[0] < x - tol or jumps[-1] > y + tol:
                raise PreconditionError("jumps must lie in [x, y]")


def energy(env: Environment, s: Staircase) -> float:
    """Increment sum of the staircase, summed line by line in ascending order.

    All coordinates must lie on env's grid.  Accumulated with compensated
    summation so per-sample identities hold to full precision.
    """
    x, i = s.start
    y, j = s.end
    gx = env.grid.exact_index(x)
    gy = env.grid.exact_index(y)
    gj = [env.grid.exact_index(z) for z in s.jumps]
    idx = [gx] + gj + [gy]
    terms = []
    for m, k in enumerate(range(i, j + 1)):
        b = line_values(env, k)
        terms.append(b[idx[m + 1]] - b[idx[m]])
    return math.fsum(terms)


def _check_lines(env: Environment, i: int, j: int) -> None:
    if not (0 <= i <= j < env.lines):
        raise PreconditionError(f"line range [{i}, {j}] outside [0, {env.lines})")


@_njit(cache=False)
def _dp_sweep_kernel(block: np.ndarray, init: np.ndarray) -> np.ndarray:  # pragma: no cover - jit
    n_lines, g = block.shape
    m = np.empty(g)
    run = -math.inf
    for t in range(g):
        v = init[t] - block[0, t]
        if v > run:
            run = v
        m[t] = run + block[0, t]
    for k in range(1, n_lines):
        run = -math.inf
        for t in range(g):
            v = m[t] - block[k, t]
            if v > run:
                run = v
            m[t] = run + block[k, t]
    return m


@_njit(cache=False)
def _dp_matrix_kernel(block: np.ndarray, starts: np.ndarray) -> np.ndarray:  # pragma: no cover - jit
    n_lines, g = block.shape
    rows = starts.size
    m = np.empty((rows, g))
    for r in range(rows):
        s = starts[r]
        for t in range(g):
            m[r, t] = block[0, t] - block[0, s] if t >= s else -math.inf
    for k in range(1, n_lines):
        for r in range(rows):
            run = -math.inf
            for t in range(g):
                v = m[r, t] - block[k, t]
                if v > run:
                    run = v
                m[r, t] = run + block[k, t]
    return m


def _lines_block(env: Environment, i: int, j: int, sl: slice) -> np.ndarray:
    out = np.empty((j - i + 1, len(range(*sl.indices(env.grid.count)))))
    for k in range(i, j + 1):
        out[k - i] = line_values(env, k)[sl]
    return out


def _dp_rows(env: Environment, i: int, j: int, lo: int, hi: int | None,
             init: np.ndarray | None = None) -> np.ndarray:
    """Run the prefix-max DP over grid slice [lo, hi] and lines i..j.

    Returns the final row M with M[t] = max energy from the start (or from the
    rewarded initial row, if init is given) to grid point lo+t on line j.
    The compiled and vectorized paths apply identical operations in identical
    order, so results are bit-identical across them.
    """
    sl = slice(lo, None if hi is None else hi + 1)
    if _HAVE_NUMBA and _fault_hook is None and not dp_ops.enabled:
        block = _lines_block(env, i, j, sl)
        if init is None:
            base = block[0] - block[0][0]
            if block.shape[0] == 1:
                return base
            return _dp_sweep_kernel(block[1:], base)
        return _dp_sweep_kernel(block, np.asarray(init, dtype=float))
    b = line_values(env, i)[sl]
    if init is None:
        M = b - b[0]
        dp_ops.add(M.size)
    else:
        M = np.maximum.accumulate(init - b) + b
        dp_ops.add(3 * M.size)
    if _fault_hook is not None:
        _fault_hook(i, M)
    for k in range(i + 1, j + 1):
        bk = line_values(env, k)[sl]
        np.subtract(M, bk, out=M)
        np.maximum.accumulate(M, out=M)
        np.add(M, bk, out=M)
        dp_ops.add(3 * M.size)
        if _fault_hook is not None:
            _fault_hook(k, M)
    return M


def max_energy(env: Environment, start: tuple[float, int], end: tuple[float, int]) -> float:
    """Maximal staircase energy from start to end via the prefix-max recursion."""
    x, i = start
    y, j = end
    _check_lines(env, i, j)
    if y < x:
        raise PreconditionError(f"end {y} left of start {x}")
    gx = env.grid.exact_index(x)
    gy = env.grid.exact_index(y)
    return float(_dp_rows(env, i, j, gx, gy)[-1])


def max_energy_profile(env: Environment, start: tuple[float, int], j: int,
                       hi: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """One DP sweep yielding the maximal energy to every grid endpoint on line j.

    Returns (ys, M) with M[t] the maximal energy from start to (ys[t], j).
    Pointwise bit-identical to max_energy at each endpoint (the recursion only
    ever looks left, so a longer sweep does not change earlier entries).
    """
    x, i = start
    _check_lines(env, i, j)
    gx = env.grid.exact_index(x)
    M = _dp_rows(env, i, j, gx, hi)
    ys = env.grid.points()[gx: None if hi is None else hi + 1]
    return ys, M


def max_energy_per_line(env: Environment, start: tuple[float, int], y: float, j_max: int) -> np.ndarray:
    """Maximal energies from start to (y, m) for every line m = i..j_max, one sweep."""
    x, i = start
    _check_lines(env, i, j_max)
    gx = env.grid.exact_index(x)
    gy = env.grid.exact_index(y)
    if gy < gx:
        raise PreconditionError(f"end {y} left of start {x}")
    sl = slice(gx, gy + 1)
    b = line_values(env, i)[sl]
    M = b - b[0]
    out = np.empty(j_max - i + 1)
    out[0] = M[-1]
    for k in range(i + 1, j_max + 1):
        bk = line_values(env, k)[sl]
        M = np.maximum.accumulate(M - bk) + bk
        out[k - i] = M[-1]
    return out


def max_energy_matrix(env: Environment, i: int, j: int, start_indices: np.ndarray,
                      end_lo: int, end_hi: int) -> np.ndarray:
    """Maximal energies for every (start, end) grid pair, vectorized over starts.

    Entry [r, t] is the maximal energy from (point(start_indices[r]), i) to
    (point(end_lo + t), j); -inf where the end lies left of the start.
    """
    _check_lines(env, i, j)
    starts = np.asarray(start_indices, dtype=int)
    lo = int(starts.min())
    sl = slice(lo, end_hi + 1)
    if _HAVE_NUMBA and _fault_hook is None and not dp_ops.enabled:
        block = _lines_block(env, i, j, sl)
        M = _dp_matrix_kernel(block, np.ascontiguousarray(starts - lo))
        return M[:, end_lo - lo:]
    cols = np.arange(lo, end_hi + 1)
    b = line_values(env, i)[sl]
    M = b[None, :] - b[starts - lo][:, None]
    M[cols[None, :] < starts[:, None]] = -np.inf
    for k in range(i + 1, j + 1):
        bk = line_values(env, k)[sl]
        M = np.maximum.accumulate(M - bk[None, :], axis=1) + bk[None, :]
    return M[:, end_lo - lo:]


def max_energy_rewarded(env: Environment, i: int, j: int, reward: np.ndarray,
                        lo: int, hi: int) -> np.ndarray:
    """Line-to-point sweep: max over starts u <= t of (reward[u] + energy(u -> t)).

    reward is indexed over the grid slice [lo, hi]; -inf marks inadmissible
    starts.  Returns the final row over endpoints on line j for the same slice.
    """
    _check_lines(env, i, j)
    if reward.shape != (hi - lo + 1,):
        raise PreconditionError("reward length does not match grid slice")
    return _dp_rows(env, i, j, lo, hi, init=reward)


def geodesic(env: Environment, start: tuple[float, int], end: tuple[float, int]) -> Staircase:
    """An energy-maximizing staircase with the lexicographically minimal jump list.

    Backtracks greedily from the start, taking at each line the smallest jump
    location whose completion value matches the running suffix maximum (an
    exact float comparison against the same expression the DP computed).
    """
    x, i = start
    y, j = end
    _check_lines(env, i, j)
    gx = env.grid.exact_index(x)
    gy = env.grid.exact_index(y)
    if gy < gx:
        raise PreconditionError(f"end {y} left of start {x}")
    if i == j:
        return Staircase(start, end, np.empty(0))
    sl = slice(gx, gy + 1)
    # Suffix tables, top line down: cand[k][t] = B(k, t) + best completion
    # after jumping up at t; smax[k][t] = max over z >= t of cand[k][z].
    b_top = line_values(env, j)[sl]
    best_from = b_top[-1] - b_top  # best completion from (t, j)
    cands: list[np.ndarray] = []
    smaxs: list[np.ndarray] = []
    for k in range(j - 1, i - 1, -1):
        bk = line_values(env, k)[sl]
        cand = best_from + bk
        smax = np.maximum.accumulate(cand[::-1])[::-1]
        cands.append(cand)
        smaxs.append(smax)
        best_from = smax - bk
    cands.reverse()
    smaxs.reverse()
    jumps = np.empty(j - i)
    cur = 0
    for m in range(j - i):
        target = smaxs[m][cur]
        rel = int(np.argmax(cands[m][cur:] == target))
        cur = cur + rel
        jumps[m] = env.grid.point(gx + cur)
    return Staircase(start, end, jumps)


def brute_force_max_energy(env: Environment, start: tuple[float, int], end: tuple[float, int]) -> float:
    """Exhaustive enumeration oracle over all nondecreasing grid jump lists."""
    x, i = start
    y, j = end
    _check_lines(env, i, j)
    gx = env.grid.exact_index(x)
    gy = env.grid.exact_index(y)
    if gy < gx:
        raise PreconditionError(f"end {y} left of start {x}")
    g = gy - gx + 1
    n_jumps = j - i
    n_lists = math.comb(g + n_jumps - 1, n_jumps)
    if n_lists > ENUMERATION_GUARD:
        raise CapacityError(f"{n_lists} jump lists exceeds enumeration guard")
    rows = [line_values(env, k)[gx: gy + 1] for k in range(i, j + 1)]
    best = -math.inf
    for combo in combinations_with_replacement(range(g), n_jumps):
        idx = (0,) + combo + (g - 1,)
        e = math.fsum(rows[m][idx[m + 1]] - rows[m][idx[m]] for m in range(n_jumps + 1))
        if e > best:
            best = e
    return best
