"""Finite-horizon value iteration for the worst-case compensator.

State is a pair ``(x, y)``: the current value of the submartingale and
the compensator accumulated so far.  With ``n`` steps to go, the
controller picks a predictable increment ``a in [0, 1 - x]``; the chain
then jumps to the absorbing ceiling ``x = 1`` with probability ``x + a``
(collecting ``f(y + a)`` at the end) or falls back to ``x = 0`` with the
complementary probability.  The value tables computed here store the
``x = 0`` slice on a uniform ``y``-grid with linear interpolation;
general ``x`` is reconstructed on demand from that slice.

Reads past the top of the grid clamp to the last value, so the layer for
``n`` steps to go is only trustworthy for ``y <= y_max - n``; build
tables with ``y_max >= horizon`` (plus slack if general-``x`` queries at
large ``y`` are needed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functions import FunctionSpec, is_class_s_family, vector_callable
from .recursion import DEFAULT_CONFIG, SolverConfig, recursion_sequence

__all__ = [
    "DEFAULT_STEP",
    "GridConfig",
    "ValueTable",
    "Lemma1Report",
    "BoundComparison",
    "grid_error_budget",
    "value_iteration",
    "backup_objective",
    "full_value",
    "extremal_policy",
    "ExtremalPolicy",
    "verify_lemma1",
    "compare_bounds",
]

DEFAULT_STEP = 1.0 / 512.0

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GridConfig:
    """Uniform ``y``-grid: ``[0, y_max]`` in steps of ``step``."""

    y_max: float
    step: float = DEFAULT_STEP

    def __post_init__(self) -> None:
        if self.y_max <= 0.0:
            raise ValueError("y_max must be > 0")
        if self.step <= 0.0 or self.step > self.y_max:
            raise ValueError("step must lie in (0, y_max]")

    @property
    def n_points(self) -> int:
        return int(round(self.y_max / self.step)) + 1

    def points(self) -> np.ndarray:
        return np.linspace(0.0, self.y_max, self.n_points)


def grid_error_budget(step: float) -> float:
    """Absolute error allowance for grid-interpolated values.

    Linear interpolation of the convex layers overestimates by
    O(step^2) per layer; ``2 * step`` is a deliberately generous cover
    for every horizon used here (the refinement study in the test suite
    shows actual step-halving differences orders of magnitude smaller).
    """
    return 2.0 * step


# ----------------------------------------------------------------------
# interpolated reads


def _uniform_interp(V: np.ndarray, step: float, q) -> np.ndarray:
    """Linear interpolation of layer values on the uniform grid, with
    reads past the top edge clamped to the last value."""
    pos = np.asarray(q, dtype=float) / step
    idx = np.floor(pos).astype(np.intp)
    np.clip(idx, 0, len(V) - 1, out=idx)
    w = pos - idx
    idx1 = np.minimum(idx + 1, len(V) - 1)
    return (1.0 - w) * V[idx] + w * V[idx1]


def _shifted_read(V: np.ndarray, step: float, a: float) -> np.ndarray:
    """``V`` interpolated at every grid point shifted by the scalar
    ``a >= 0``; exploits the uniform grid (pure slicing, no gathers)."""
    t = a / step
    k = int(t)
    w = t - k
    n = len(V)
    if k >= n - 1:
        return np.full(n, V[-1])
    v0 = np.empty(n)
    v0[:n - k] = V[k:]
    v0[n - k:] = V[-1]
    v1 = np.empty(n)
    m = k + 1
    v1[:n - m] = V[m:]
    v1[n - m:] = V[-1]
    return (1.0 - w) * v0 + w * v1


# ----------------------------------------------------------------------
# the one-layer backup


def _backup(f_vec, V_prev: np.ndarray, y: np.ndarray, step: float,
            x: float, cfg: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    """Maximize ``(x+a) f(y+a) + (1-(x+a)) V_prev~(y+a)`` over the
    increment ``a in [0, 1-x]``, elementwise over the vector ``y``.

    Coarse scan over ``cfg.opt_grid_points`` increments (first maximum
    wins, so ties lean to the smallest ``a`` up to float noise), then a
    data-parallel golden-section pass inside each point's bracketing
    cells.  Returns ``(values, argmax increments)``.
    """
    a_hi = 1.0 - x
    n_y = len(y)
    if a_hi <= 0.0:
        return np.asarray(f_vec(y), dtype=float), np.zeros(n_y)

    k_pts = cfg.opt_grid_points
    a_grid = np.linspace(0.0, a_hi, k_pts)
    uniform_shift = (x == 0.0 and len(V_prev) == n_y)

    best_v = np.full(n_y, -np.inf)
    best_a = np.zeros(n_y)
    best_i = np.zeros(n_y, dtype=np.intp)
    for i, a in enumerate(a_grid):
        q = y + a
        reads = (_shifted_read(V_prev, step, a) if uniform_shift
                 else _uniform_interp(V_prev, step, q))
        obj = (x + a) * f_vec(q) + (1.0 - (x + a)) * reads
        better = obj > best_v
        np.copyto(best_v, obj, where=better)
        best_a[better] = a
        best_i[better] = i

    if cfg.refine_iters > 0:
        lo = a_grid[np.maximum(best_i - 1, 0)].copy()
        hi = a_grid[np.minimum(best_i + 1, k_pts - 1)].copy()

        def evaluate(a_vec):
            q = y + a_vec
            reads = _uniform_interp(V_prev, step, q)
            return (x + a_vec) * f_vec(q) + (1.0 - (x + a_vec)) * reads

        width = hi - lo
        c = hi - _INVPHI * width
        d = lo + _INVPHI * width
        fc = evaluate(c)
        fd = evaluate(d)
        for _ in range(cfg.refine_iters):
            for probe_v, probe_a in ((fc, c), (fd, d)):
                better = probe_v > best_v
                np.copyto(best_v, probe_v, where=better)
                np.copyto(best_a, probe_a, where=better)
            left = fc >= fd
            hi = np.where(left, d, hi)
            lo = np.where(left, lo, c)
            width = hi - lo
            c = hi - _INVPHI * width
            d = lo + _INVPHI * width
            fc = evaluate(c)
            fd = evaluate(d)
    return best_v, best_a


# ----------------------------------------------------------------------
# tables


@dataclass
class ValueTable:
    """Stacked ``x = 0`` value layers ``V[n]`` and their maximizing
    increments ``A[n]`` on the grid ``y`` (``A[0]`` is all zeros).

    ``clamp_used`` records that some reads during the build ran past the
    top of the grid; layer ``n`` is accurate for ``y <= y_max - n``.
    """

    spec: FunctionSpec
    grid: GridConfig
    y: np.ndarray
    V: np.ndarray
    A: np.ndarray
    clamp_used: bool
    solver: SolverConfig = field(default=DEFAULT_CONFIG)

    @property
    def horizon(self) -> int:
        return self.V.shape[0] - 1

    def value_at_zero(self, n: int) -> float:
        return float(self.V[n, 0])

    def growth_values(self) -> list[float]:
        """``V_n(0)`` for ``n = 0 .. horizon``."""
        return [float(v) for v in self.V[:, 0]]


def value_iteration(spec: FunctionSpec, horizon: int,
                    grid: GridConfig | None = None,
                    solver: SolverConfig = DEFAULT_CONFIG) -> ValueTable:
    """Backward induction from ``V_0 = f`` up to the given horizon."""
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if grid is None:
        grid = GridConfig(y_max=float(max(horizon, 1)))
    if grid.y_max < horizon:
        raise ValueError(
            f"y_max = {grid.y_max} does not cover horizon {horizon}")

    y = grid.points()
    f_vec = vector_callable(spec)
    n_pts = grid.n_points
    V = np.empty((horizon + 1, n_pts))
    A = np.zeros((horizon + 1, n_pts))
    V[0] = f_vec(y)
    # Any step with room to act reads past the top edge (y_max + a).
    clamp_used = horizon >= 1
    for n in range(1, horizon + 1):
        V[n], A[n] = _backup(f_vec, V[n - 1], y, grid.step, 0.0, solver)
    return ValueTable(spec, grid, y, V, A, clamp_used, solver)


# ----------------------------------------------------------------------
# general-x values


def _validate_state(table: ValueTable, n: int, x: float, y: float) -> None:
    if not 0 <= n <= table.horizon:
        raise ValueError(f"n = {n} outside table horizon {table.horizon}")
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x = {x} outside [0, 1]")
    if not 0.0 <= y <= table.grid.y_max:
        raise ValueError(f"y = {y} outside the grid [0, {table.grid.y_max}]")


def backup_objective(table: ValueTable, n: int, x: float, y: float,
                     a: float) -> float:
    """The two-point backup integrand: reach the ceiling with
    probability ``x + a`` and collect ``f(y + a)``, otherwise continue
    from ``(0, y + a)`` with ``n - 1`` steps to go."""
    _validate_state(table, n, x, y)
    if n == 0:
        raise ValueError("n must be >= 1 for a backup")
    if not 0.0 <= a <= 1.0 - x + 1e-15:
        raise ValueError(f"increment a = {a} outside [0, {1.0 - x}]")
    spec = table.spec
    reach = x + a
    cont = float(_uniform_interp(table.V[n - 1], table.grid.step,
                                 np.array([y + a]))[0])
    return reach * spec.value(y + a) + (1.0 - reach) * cont


def full_value(table: ValueTable, n: int, x: float, y: float) -> float:
    """``F_n(x, y)``: the optimal value from a general state,
    reconstructed from the stored ``x = 0`` layers.

    Matches the stored layer exactly at ``x = 0`` grid points (same
    backup code path); ``x = 1`` and ``n = 0`` collapse to ``f(y)``.
    """
    _validate_state(table, n, x, y)
    if n == 0 or x >= 1.0:
        return table.spec.value(y)
    f_vec = vector_callable(table.spec)
    vals, _ = _backup(f_vec, table.V[n - 1], np.array([y]),
                      table.grid.step, x, table.solver)
    return float(vals[0])


@dataclass
class ExtremalPolicy:
    """Maximizing increments as a function of (steps remaining, y)."""

    table: ValueTable

    def action(self, n: int, y: float) -> float:
        if not 1 <= n <= self.table.horizon:
            raise ValueError(
                f"n = {n} outside [1, {self.table.horizon}]")
        if not 0.0 <= y <= self.table.grid.y_max:
            raise ValueError(f"y = {y} outside the grid")
        a = float(_uniform_interp(self.table.A[n], self.table.grid.step,
                                  np.array([y]))[0])
        return min(max(a, 0.0), 1.0)


def extremal_policy(table: ValueTable) -> ExtremalPolicy:
    """Interpolated lookup of the table's maximizing increments."""
    return ExtremalPolicy(table)


# ----------------------------------------------------------------------
# structure checks


@dataclass(frozen=True)
class Lemma1Report:
    """Violation counts for the structural properties of the value
    function: nondecreasing in ``y``, nonincreasing in ``x``, and
    midpoint-convex in ``x``."""

    y_monotone_checks: int
    y_monotone_violations: int
    x_monotone_checks: int
    x_monotone_violations: int
    x_convex_checks: int
    x_convex_violations: int
    worst_y_monotone: float
    worst_x_monotone: float
    worst_x_convex: float

    @property
    def total_violations(self) -> int:
        return (self.y_monotone_violations + self.x_monotone_violations
                + self.x_convex_violations)

    @property
    def ok(self) -> bool:
        return self.total_violations == 0


def verify_lemma1(table: ValueTable,
                  y_samples=(0.0, 0.35, 0.8, 1.6, 2.5),
                  x_samples=None,
                  monotone_tol: float = 1e-9,
                  convex_tol: float = 1e-6) -> Lemma1Report:
    """Sample the structural properties of the computed values.

    ``y``-monotonicity is checked on the whole grid for every layer;
    the ``x`` checks run on sampled states restricted to the region the
    grid actually resolves (``y + 1 <= y_max - n + 1``).
    """
    if x_samples is None:
        x_samples = np.linspace(0.0, 1.0, 9)
    x_samples = sorted(float(v) for v in x_samples)

    y_checks = y_viols = 0
    worst_y = 0.0
    for n in range(table.horizon + 1):
        diffs = np.diff(table.V[n])
        y_checks += len(diffs)
        y_viols += int(np.sum(diffs < -monotone_tol))
        if len(diffs):
            worst_y = min(worst_y, float(np.min(diffs)))

    x_checks = x_viols = 0
    cx_checks = cx_viols = 0
    worst_x = 0.0
    worst_cx = 0.0
    for n in range(1, table.horizon + 1):
        y_cap = table.grid.y_max - n - 1.0
        for y in (v for v in y_samples if v <= y_cap):
            vals = [full_value(table, n, x, y) for x in x_samples]
            for v1, v2 in zip(vals, vals[1:]):
                x_checks += 1
                drop = v1 - v2
                worst_x = min(worst_x, drop)
                if drop < -monotone_tol:
                    x_viols += 1
            for i in range(len(x_samples) - 2):
                # x_samples is uniform, so i, i+1, i+2 are equispaced.
                cx_checks += 1
                slack = vals[i] + vals[i + 2] - 2.0 * vals[i + 1]
                worst_cx = min(worst_cx, slack)
                if slack < -convex_tol:
                    cx_viols += 1

    return Lemma1Report(y_checks, y_viols, x_checks, x_viols,
                        cx_checks, cx_viols, worst_y, worst_x, worst_cx)


# ----------------------------------------------------------------------
# two-route comparison


@dataclass(frozen=True)
class BoundComparison:
    """Exact growth values against the scalar recursion, per step."""

    spec: FunctionSpec
    rows: tuple[tuple[int, float, float, float], ...]  # (n, c_n, b_n, gap)
    budget: float
    max_gap: float
    enforced: bool
    within_budget: bool

    @property
    def max_abs_gap(self) -> float:
        return max(abs(g) for _, _, _, g in self.rows)


def compare_bounds(spec: FunctionSpec, horizon: int,
                   grid: GridConfig | None = None,
                   solver: SolverConfig = DEFAULT_CONFIG,
                   table: ValueTable | None = None) -> BoundComparison:
    """Tabulate ``c_n`` (value iteration) against ``b_n`` (recursion).

    ``c_n <= b_n + budget`` must hold for shift-class functions; the
    comparison is still tabulated, but not enforced, outside that class.
    A prebuilt ``table`` for the same spec/horizon may be passed to
    avoid recomputation.
    """
    if table is None:
        table = value_iteration(spec, horizon, grid, solver)
    elif table.horizon < horizon:
        raise ValueError("supplied table does not cover the horizon")
    b_seq, _ = recursion_sequence(spec, horizon, solver)
    budget = grid_error_budget(table.grid.step)
    rows = []
    max_gap = -math.inf
    for n in range(horizon + 1):
        c_n = table.value_at_zero(n)
        b_n = b_seq[n]
        gap = c_n - b_n
        max_gap = max(max_gap, gap)
        rows.append((n, c_n, b_n, gap))
    enforced = is_class_s_family(spec)
    return BoundComparison(spec, tuple(rows), budget, max_gap,
                           enforced, max_gap <= budget)
