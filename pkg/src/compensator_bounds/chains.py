"""Exact laws and simulation for the extremal chains.

Two chains are covered.  The *doubling chain* starts at ``X = 0`` and,
while unabsorbed, jumps to the ceiling ``X = 1`` with probability one
half at every step; its compensator climbs by one half per step until
absorption, so the terminal law is supported on half-integers with
geometric weights.  The *table-driven chain* follows the maximizing
increments of a computed value table: from ``(0, y)`` with ``n`` steps
left it adds the increment ``a = policy.action(n, y)`` to the
compensator and reaches the ceiling with probability ``a``.

Both admit exact finite-support terminal laws (the unabsorbed state is
deterministic), which makes the Monte-Carlo routines easy to validate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .functions import FunctionSpec, vector_callable

__all__ = [
    "LawAtom",
    "ChainLaw",
    "intro_chain_law",
    "exact_expectation",
    "intro_kernel",
    "doob_decompose",
    "SimulationResult",
    "simulate_intro",
    "policy_schedule",
    "extremal_chain_law",
    "simulate_extremal",
]

_PROB_TOL = 1e-9


@dataclass(frozen=True)
class LawAtom:
    """One support point of a terminal law: the chain value ``x``, the
    accumulated compensator ``y``, and its probability."""

    x: float
    y: float
    prob: float


@dataclass(frozen=True)
class ChainLaw:
    """Finite-support joint law of ``(X_n, Y_n)``."""

    atoms: tuple[LawAtom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("law needs at least one atom")
        total = 0.0
        for atom in self.atoms:
            if not 0.0 <= atom.x <= 1.0:
                raise ValueError(f"chain value {atom.x} outside [0, 1]")
            if atom.y < 0.0:
                raise ValueError(f"compensator value {atom.y} is negative")
            if not 0.0 < atom.prob <= 1.0:
                raise ValueError(f"probability {atom.prob} outside (0, 1]")
            total += atom.prob
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(f"probabilities sum to {total}, not 1")

    @property
    def y_values(self) -> np.ndarray:
        return np.array([a.y for a in self.atoms])

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([a.prob for a in self.atoms])


def intro_chain_law(n_steps: int) -> ChainLaw:
    """Exact terminal law of the doubling chain after ``n_steps``.

    Absorption at step ``k`` has probability ``2**-k`` and compensator
    ``k/2``; the never-absorbed remainder carries ``2**-n`` at ``n/2``.
    """
    if n_steps < 0:
        raise ValueError("n_steps must be >= 0")
    if n_steps == 0:
        return ChainLaw((LawAtom(0.0, 0.0, 1.0),))
    atoms = [LawAtom(1.0, 0.5 * k, 2.0 ** -k)
             for k in range(1, n_steps + 1)]
    atoms.append(LawAtom(0.0, 0.5 * n_steps, 2.0 ** -n_steps))
    return ChainLaw(tuple(atoms))


def exact_expectation(spec: FunctionSpec, law: ChainLaw) -> float:
    """``E f(Y_n)`` under a finite-support terminal law."""
    return float(np.dot(law.probabilities, spec.value(law.y_values)))


# ----------------------------------------------------------------------
# pathwise compensators


def intro_kernel(step: int, x: float, y: float):
    """One-step transition law of the doubling chain from value ``x``."""
    if x >= 1.0 - 1e-12:
        return ((1.0, 1.0),)
    return ((1.0, 0.5), (0.0, 0.5))


def doob_decompose(x_path, kernel, y0: float = 0.0) -> np.ndarray:
    """Compensator along one path: running sum of conditional increment
    means under ``kernel(step, x, y) -> ((next_x, prob), ...)``.

    Rejects kernels whose conditional mean ever drops below the current
    value -- the decomposition only applies to submartingales.
    """
    x = np.asarray(x_path, dtype=float)
    if x.ndim != 1 or len(x) == 0:
        raise ValueError("x_path must be a nonempty 1-d sequence")
    y = np.empty(len(x))
    y[0] = y0
    for t in range(len(x) - 1):
        transitions = kernel(t, float(x[t]), float(y[t]))
        total = math.fsum(p for _, p in transitions)
        if abs(total - 1.0) > _PROB_TOL:
            raise ValueError(
                f"kernel probabilities sum to {total} at step {t}")
        mean_next = math.fsum(v * p for v, p in transitions)
        increment = mean_next - x[t]
        if increment < -1e-12:
            raise ValueError(
                f"negative compensator increment {increment:.3e} at step "
                f"{t}; the kernel does not give a submartingale")
        y[t + 1] = y[t] + increment
    return y


# ----------------------------------------------------------------------
# Monte Carlo


@dataclass(eq=False)
class SimulationResult:
    """Sample statistics of ``f(Y_n)`` plus a pathwise audit.

    ``max_doob_residual`` is the largest absolute gap, over the audited
    paths and all time steps, between the compensator rebuilt from the
    raw path via :func:`doob_decompose` and the closed-form value the
    sampler used.
    """

    spec: FunctionSpec
    n_steps: int
    n_paths: int
    seed: int
    mean_f: float
    std_error: float
    max_doob_residual: float
    y_final: np.ndarray = field(repr=False)
    x_final: np.ndarray = field(repr=False)
    # 1-based absorption step per path; n_steps + 1 means never absorbed.
    t_hit: np.ndarray = field(repr=False)


def _philox(seed: int) -> np.random.Generator:
    # Counter-based bit generator: a fixed seed pins the whole draw
    # order, independent of platform threading.
    return np.random.Generator(np.random.Philox(seed))


def simulate_intro(spec: FunctionSpec, n_steps: int, n_paths: int,
                   seed: int, audit_paths: int = 200) -> SimulationResult:
    """Monte-Carlo draw of the doubling chain."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    rng = _philox(seed)
    jumps = rng.random((n_paths, n_steps)) < 0.5
    absorbed = jumps.any(axis=1)
    # 1-based absorption step; n_steps + 1 encodes "still running".
    t_hit = np.where(absorbed, jumps.argmax(axis=1) + 1, n_steps + 1)
    y_final = 0.5 * np.minimum(t_hit, n_steps)
    x_final = absorbed.astype(float)

    f_vec = vector_callable(spec)
    values = f_vec(y_final)
    mean_f = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n_paths))

    residual = 0.0
    steps = np.arange(n_steps + 1)
    for i in range(min(audit_paths, n_paths)):
        x_path = (steps >= t_hit[i]).astype(float)
        y_path = doob_decompose(x_path, intro_kernel)
        closed = 0.5 * np.minimum(steps, t_hit[i])
        residual = max(residual, float(np.max(np.abs(y_path - closed))))
    return SimulationResult(spec, n_steps, n_paths, seed, mean_f,
                            std_error, residual, y_final, x_final, t_hit)


# ----------------------------------------------------------------------
# table-driven chain


def policy_schedule(policy, horizon: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic increments and compensator path of the unabsorbed
    state: ``a[t]`` applied with ``horizon - t`` steps left, ``y[t]``
    the compensator after ``t`` steps."""
    a_sched = np.empty(horizon)
    y_sched = np.empty(horizon + 1)
    y_sched[0] = 0.0
    y = 0.0
    for t in range(horizon):
        a = float(policy.action(horizon - t, y))
        a_sched[t] = a
        y += a
        y_sched[t + 1] = y
    return a_sched, y_sched


def extremal_chain_law(policy, horizon: int | None = None,
                       merge_tol: float = 1e-12) -> ChainLaw:
    """Exact terminal law of the chain driven by a value-table policy.

    The unabsorbed state is deterministic, so the law consists of one
    absorbed atom per step plus the final unabsorbed remainder.  Atoms
    closer than ``merge_tol`` in compensator value are combined;
    zero-probability atoms are dropped.
    """
    if horizon is None:
        horizon = policy.table.horizon
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    a_sched, y_sched = policy_schedule(policy, horizon)

    atoms: list[list[float]] = []
    p_live = 1.0
    for t in range(horizon):
        p_absorb = p_live * a_sched[t]
        if p_absorb > 0.0:
            y = y_sched[t + 1]
            if atoms and atoms[-1][0] == 1.0 and abs(atoms[-1][1] - y) <= merge_tol:
                atoms[-1][2] += p_absorb
            else:
                atoms.append([1.0, y, p_absorb])
        p_live *= 1.0 - a_sched[t]
    if p_live > 0.0:
        atoms.append([0.0, y_sched[horizon], p_live])
    return ChainLaw(tuple(LawAtom(x, y, p) for x, y, p in atoms))


def simulate_extremal(policy, spec: FunctionSpec, n_paths: int, seed: int,
                      horizon: int | None = None,
                      audit_paths: int = 200) -> SimulationResult:
    """Monte-Carlo draw of the table-driven chain."""
    if horizon is None:
        horizon = policy.table.horizon
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    if n_paths < 2:
        raise ValueError("n_paths must be >= 2")
    a_sched, y_sched = policy_schedule(policy, horizon)

    rng = _philox(seed)
    jumps = rng.random((n_paths, horizon)) < a_sched[None, :]
    absorbed = jumps.any(axis=1)
    t_hit = np.where(absorbed, jumps.argmax(axis=1) + 1, horizon + 1)
    y_final = y_sched[np.minimum(t_hit, horizon)]
    x_final = absorbed.astype(float)

    f_vec = vector_callable(spec)
    values = f_vec(y_final)
    mean_f = float(values.mean())
    std_error = float(values.std(ddof=1) / math.sqrt(n_paths))

    def schedule_kernel(step, x, y):
        if x >= 1.0 - 1e-12:
            return ((1.0, 1.0),)
        a = a_sched[step]
        if a <= 0.0:
            return ((0.0, 1.0),)
        return ((1.0, a), (0.0, 1.0 - a))

    residual = 0.0
    steps = np.arange(horizon + 1)
    for i in range(min(audit_paths, n_paths)):
        x_path = (steps >= t_hit[i]).astype(float)
        y_path = doob_decompose(x_path, schedule_kernel)
        closed = y_sched[np.minimum(steps, t_hit[i])]
        residual = max(residual, float(np.max(np.abs(y_path - closed))))
    return SimulationResult(spec, horizon, n_paths, seed, mean_f,
                            std_error, residual, y_final, x_final, t_hit)
