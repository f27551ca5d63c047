"""The scalar recursion whose limit bounds compensator growth.

One step of the recursion maximizes, over a first-step increment
``a in [0, 1]``, the two-point mixture

    a * f(a)  +  (1 - a) * f(a + f^{-1}(b)),

where ``b`` is the previous bound.  Starting from ``b_0 = f(0)`` this
produces a nondecreasing sequence ``b_n``; its limit, when finite,
equals the root ``B`` of ``B = f(0) + f'(f^{-1}(B))``, which
:func:`fixed_point_bound` solves for directly.  :func:`divergence_scan`
offers a heuristic certificate for the unbounded case: if the mixture's
``a``-slope stays uniformly positive near ``a = 0`` along a ladder of
``b`` values, no finite fixed point is plausible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .functions import FunctionSpec, scalar_callable, vector_callable
from .optimize import bisect_root, golden_max

__all__ = [
    "SolverConfig",
    "RecursionStatus",
    "RecursionTrace",
    "FixedPointResult",
    "DivergenceScan",
    "mixture_objective",
    "mixture_objective_deriv",
    "optimal_step",
    "iterate",
    "recursion_sequence",
    "fixed_point_bound",
    "divergence_scan",
]

# Tolerance for the slope cross-check at the fixed point.
_CROSS_CHECK_TOL = 1e-6
_CROSS_CHECK_GRID = 512


@dataclass(frozen=True)
class SolverConfig:
    """Numerical knobs shared by the recursion and Bellman solvers."""

    opt_grid_points: int = 2048
    refine_iters: int = 60
    b_tolerance: float = 1e-9
    divergence_threshold: float = 1e6
    max_iterations: int = 20000
    bisection_tolerance: float = 1e-12

    def __post_init__(self) -> None:
        if self.opt_grid_points < 2:
            raise ValueError("opt_grid_points must be >= 2")
        if self.refine_iters < 0:
            raise ValueError("refine_iters must be >= 0")
        for name in ("b_tolerance", "divergence_threshold", "max_iterations",
                     "bisection_tolerance"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")


DEFAULT_CONFIG = SolverConfig()


def mixture_objective(spec: FunctionSpec, a, b: float):
    """The one-step objective at increment ``a`` given previous bound
    ``b >= f(0)``; vectorized over ``a`` in ``[0, 1]``."""
    if np.any(np.asarray(a) < 0.0) or np.any(np.asarray(a) > 1.0):
        raise ValueError("increment a must lie in [0, 1]")
    offset = spec.inverse(b)
    return a * spec.value(a) + (1.0 - a) * spec.value(a + offset)


def mixture_objective_deriv(spec: FunctionSpec, a, b: float):
    """d/da of :func:`mixture_objective`; vectorized over ``a``."""
    if np.any(np.asarray(a) < 0.0) or np.any(np.asarray(a) > 1.0):
        raise ValueError("increment a must lie in [0, 1]")
    offset = spec.inverse(b)
    shifted = a + offset
    return (spec.value(a) + a * spec.deriv(a)
            - spec.value(shifted) + (1.0 - a) * spec.deriv(shifted))


def _make_stepper(spec: FunctionSpec, cfg: SolverConfig):
    """A reusable single-step maximizer.

    Precomputes every grid quantity that does not depend on the incoming
    bound ``b`` (the first mixture term in particular), which matters
    when the recursion runs for hundreds of thousands of steps.
    """
    n = cfg.opt_grid_points
    a_grid = np.linspace(0.0, 1.0, n)
    f_vec = vector_callable(spec)
    f_scal = scalar_callable(spec)
    first_term = a_grid * f_vec(a_grid)
    weight = 1.0 - a_grid
    refine_iters = cfg.refine_iters

    def step(b: float) -> tuple[float, float]:
        offset = spec.inverse(b)
        vals = first_term + weight * f_vec(a_grid + offset)
        peak = float(np.max(vals))
        # Ties (exact or within float noise, as on flat objectives) go
        # to the smallest increment.
        noise = 1e-13 * max(1.0, abs(peak))
        i = int(np.argmax(vals >= peak - noise))
        best_v = float(vals[i])
        best_x = float(a_grid[i])
        lo = float(a_grid[i - 1]) if i > 0 else 0.0
        hi = float(a_grid[i + 1]) if i < n - 1 else 1.0
        if hi > lo and refine_iters > 0:
            ref_v, ref_x = golden_max(
                lambda a: a * f_scal(a) + (1.0 - a) * f_scal(a + offset),
                lo, hi, refine_iters)
            if ref_v > best_v + noise:
                best_v, best_x = ref_v, ref_x
        if best_v < b:
            # The true supremum is >= b (the objective equals b at
            # a = 0); only inverse round-off can dip below.
            return b, 0.0
        return best_v, best_x

    return step


def optimal_step(spec: FunctionSpec, b: float,
                 cfg: SolverConfig = DEFAULT_CONFIG) -> tuple[float, float]:
    """Maximize the one-step objective over ``a in [0, 1]``.

    Grid scan (``cfg.opt_grid_points``) plus golden-section refinement,
    ties toward the smallest ``a``.  Returns ``(value, argmax)`` with
    ``value >= b`` guaranteed (the objective equals ``b`` at ``a = 0``).
    """
    return _make_stepper(spec, cfg)(b)


class RecursionStatus(Enum):
    CONVERGED = "converged"
    DIVERGED = "diverged"
    MAX_ITERATIONS = "max_iterations"


@dataclass(frozen=True)
class RecursionTrace:
    """The computed recursion path.

    ``b`` holds ``b_0 .. b_n`` and ``a_star[k]`` is the maximizer that
    produced ``b[k+1]``.  ``limit`` is set when the run converged;
    ``diverged_at`` is the step index whose value first exceeded the
    divergence threshold.
    """

    spec: FunctionSpec
    b: tuple[float, ...]
    a_star: tuple[float, ...]
    status: RecursionStatus
    limit: float | None = None
    diverged_at: int | None = None

    @property
    def final(self) -> float:
        return self.b[-1]


def iterate(spec: FunctionSpec,
            cfg: SolverConfig = DEFAULT_CONFIG) -> RecursionTrace:
    """Run ``b_{n+1} = optimal_step(b_n)`` from ``b_0 = f(0)``.

    Stops with ``CONVERGED`` once successive values differ by less than
    ``cfg.b_tolerance``, with ``DIVERGED`` once a value exceeds
    ``cfg.divergence_threshold``, and with ``MAX_ITERATIONS`` otherwise.
    """
    stepper = _make_stepper(spec, cfg)
    b_seq = [spec.f_zero]
    a_seq: list[float] = []
    for step in range(1, cfg.max_iterations + 1):
        value, a_star = stepper(b_seq[-1])
        b_seq.append(value)
        a_seq.append(a_star)
        if value > cfg.divergence_threshold:
            return RecursionTrace(spec, tuple(b_seq), tuple(a_seq),
                                  RecursionStatus.DIVERGED,
                                  diverged_at=step)
        if abs(value - b_seq[-2]) < cfg.b_tolerance:
            return RecursionTrace(spec, tuple(b_seq), tuple(a_seq),
                                  RecursionStatus.CONVERGED, limit=value)
    return RecursionTrace(spec, tuple(b_seq), tuple(a_seq),
                          RecursionStatus.MAX_ITERATIONS)


def recursion_sequence(spec: FunctionSpec, n_steps: int,
                       cfg: SolverConfig = DEFAULT_CONFIG,
                       ) -> tuple[list[float], list[float]]:
    """Exactly ``n_steps`` recursion values with no stopping rule.

    Returns ``(b_0 .. b_n, a_1 .. a_n)``; used when a fixed horizon must
    line up with the Bellman table.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    stepper = _make_stepper(spec, cfg)
    b_seq = [spec.f_zero]
    a_seq: list[float] = []
    for _ in range(n_steps):
        value, a_star = stepper(b_seq[-1])
        b_seq.append(value)
        a_seq.append(a_star)
    return b_seq, a_seq


@dataclass(frozen=True)
class FixedPointResult:
    """Root of ``b = f(0) + f'(f^{-1}(b))``, or unbounded.

    ``cross_check_max`` is the largest one-step slope over an ``a``-grid
    at the root; a value above 1e-6 clears ``cross_check_ok`` and means
    the root does *not* dominate the recursion (expected exactly for
    functions outside the shift class).
    """

    value: float
    cross_check_max: float | None = None
    cross_check_ok: bool | None = None

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.value)


def _fixed_point_residual(spec: FunctionSpec, b: float) -> float:
    return spec.f_zero + spec.deriv(spec.inverse(b)) - b


def fixed_point_bound(spec: FunctionSpec,
                      cfg: SolverConfig = DEFAULT_CONFIG) -> FixedPointResult:
    """Solve ``b = f(0) + f'(f^{-1}(b))`` by bracketing + bisection.

    The bracket doubles outward from ``f(0) + 1``; if the residual stays
    positive all the way to ``cfg.divergence_threshold`` the bound is
    reported as unbounded.  At a finite root the one-step slope is
    cross-checked on a 512-point grid.
    """
    f0 = spec.f_zero
    lo = f0
    hi = f0 + 1.0
    res_hi = _fixed_point_residual(spec, hi)
    while res_hi > 0.0:
        lo = hi
        hi = f0 + 2.0 * (hi - f0)
        if hi > cfg.divergence_threshold:
            return FixedPointResult(math.inf)
        res_hi = _fixed_point_residual(spec, hi)

    if res_hi == 0.0:
        root = hi
    else:
        root = bisect_root(lambda b: _fixed_point_residual(spec, b),
                           lo, hi, cfg.bisection_tolerance)

    grid = np.linspace(0.0, 1.0, _CROSS_CHECK_GRID)
    slope_max = float(np.max(mixture_objective_deriv(spec, grid, root)))
    return FixedPointResult(root, slope_max, slope_max <= _CROSS_CHECK_TOL)


@dataclass(frozen=True)
class DivergenceScan:
    """Heuristic divergence witness: minimum one-step slope near
    ``a = 0`` for each ladder value.  ``indicated`` does not *prove*
    divergence; it only reports that the slope stayed uniformly
    positive on the scanned region."""

    epsilon: float
    entries: tuple[tuple[float, float], ...]
    min_slope: float
    indicated: bool


def divergence_scan(spec: FunctionSpec, epsilon: float,
                    b_ladder) -> DivergenceScan:
    """Scan ``min_{a in [0, epsilon]}`` of the one-step slope along
    ``b_ladder`` (65-point grid per ladder value)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    ladder = [float(b) for b in b_ladder]
    if not ladder:
        raise ValueError("b_ladder must be nonempty")
    grid = np.linspace(0.0, epsilon, 65)
    entries = []
    for b in ladder:
        slope_min = float(np.min(mixture_objective_deriv(spec, grid, b)))
        entries.append((b, slope_min))
    overall = min(s for _, s in entries)
    return DivergenceScan(epsilon, tuple(entries), overall, overall > 0.0)
