"""Test-function families for the compensator growth bounds.

All solvers in this package are parameterized by an increasing function
``f`` on ``[0, inf)``.  Four families are built in:

* ``exp:lambda=L``  -- ``f(x) = exp(L * x)`` with ``L > 0``;
* ``pow:m=M``       -- ``f(x) = x ** M`` with ``M >= 1``;
* ``quad``          -- ``f(x) = x + x**2 / 2`` (convex, concave slope);
* ``remark2``       -- ``f(x) = x`` on ``[0, 1]`` and ``(1 + x**2) / 2``
  beyond; a continuously differentiable splice whose curvature-to-slope
  ratio *jumps up* at ``x = 1``, making it the stock counterexample to
  the shift inequality that everything else here relies on.

A :class:`FunctionSpec` bundles the family and its parameter, evaluates
``f``, ``f'`` and ``f^{-1}``, and round-trips through the little
``family:key=value`` string syntax used on the command line.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .optimize import invert_increasing

__all__ = [
    "Family",
    "FunctionSpec",
    "ClassSResult",
    "parse_function_spec",
    "scalar_callable",
    "vector_callable",
    "second_derivative",
    "class_s_condition",
    "is_class_s_family",
]

# Step used for finite-difference second derivatives when a family has
# no closed form wired in.
_FD_STEP = 1e-4

# Relative slack when clamping an inverse target that float rounding has
# pushed just below f(0).
_INVERSE_CLAMP = 1e-9


class Family(enum.Enum):
    """The built-in function families."""

    EXPONENTIAL = "exp"
    POWER = "pow"
    QUAD = "quad"
    REMARK2 = "remark2"


def _domain_check(x) -> None:
    if np.any(np.asarray(x) < 0.0):
        raise ValueError("function argument must be >= 0")


@dataclass(frozen=True)
class FunctionSpec:
    """An increasing test function ``f`` on ``[0, inf)``.

    ``param`` is the exponential rate for ``Family.EXPONENTIAL``, the
    exponent for ``Family.POWER``, and ``None`` for the parameter-free
    families.  Instances are immutable and hashable.
    """

    family: Family
    param: float | None = None

    def __post_init__(self) -> None:
        if self.family is Family.EXPONENTIAL:
            if self.param is None or not self.param > 0.0:
                raise ValueError(f"lambda must be > 0, got {self.param}")
        elif self.family is Family.POWER:
            if self.param is None or not self.param >= 1.0:
                raise ValueError(f"m must be >= 1, got {self.param}")
        elif self.param is not None:
            raise ValueError(
                f"{self.family.value} takes no parameter, got {self.param}")

    # ------------------------------------------------------------------
    # evaluation

    def value(self, x):
        """``f(x)``; accepts scalars or numpy arrays, domain ``x >= 0``."""
        _domain_check(x)
        if self.family is Family.EXPONENTIAL:
            out = np.exp(self.param * np.asarray(x, dtype=float))
        elif self.family is Family.POWER:
            out = np.asarray(x, dtype=float) ** self.param
        elif self.family is Family.QUAD:
            xa = np.asarray(x, dtype=float)
            out = xa + 0.5 * xa * xa
        else:
            xa = np.asarray(x, dtype=float)
            out = np.where(xa <= 1.0, xa, 0.5 * (1.0 + xa * xa))
        return float(out) if np.ndim(x) == 0 else out

    def deriv(self, x):
        """``f'(x)``.  At the ``remark2`` splice point the left slope is
        used (the two one-sided slopes agree there anyway)."""
        _domain_check(x)
        if self.family is Family.EXPONENTIAL:
            out = self.param * np.exp(self.param * np.asarray(x, dtype=float))
        elif self.family is Family.POWER:
            xa = np.asarray(x, dtype=float)
            out = self.param * xa ** (self.param - 1.0)
        elif self.family is Family.QUAD:
            out = 1.0 + np.asarray(x, dtype=float)
        else:
            xa = np.asarray(x, dtype=float)
            out = np.where(xa <= 1.0, 1.0, xa)
        return float(out) if np.ndim(x) == 0 else out

    @property
    def f_zero(self) -> float:
        """``f(0)``: 1 for exponentials, 0 for the other families."""
        return 1.0 if self.family is Family.EXPONENTIAL else 0.0

    def inverse(self, y: float) -> float:
        """``f^{-1}(y)`` for ``y >= f(0)``.

        Closed form for the exponential and power families, monotone
        bisection (to better than 1e-12 absolute) otherwise.  Targets a
        hair below ``f(0)`` from float rounding are clamped; anything
        further below raises a range error.
        """
        y = float(y)
        f0 = self.f_zero
        if y < f0:
            if y >= f0 - _INVERSE_CLAMP * max(1.0, abs(f0)):
                return 0.0
            raise ValueError(f"inverse target {y} below f(0) = {f0}")
        if self.family is Family.EXPONENTIAL:
            return float(np.log(y) / self.param)
        if self.family is Family.POWER:
            return float(y ** (1.0 / self.param))
        return invert_increasing(self.value, y, lo=0.0, tol=1e-14)

    # ------------------------------------------------------------------
    # the mini-language

    def spec_string(self) -> str:
        """Canonical ``family:key=value`` form; round-trips via
        :func:`parse_function_spec`."""
        if self.family is Family.EXPONENTIAL:
            return f"exp:lambda={self.param!r}"
        if self.family is Family.POWER:
            return f"pow:m={self.param!r}"
        return self.family.value

    def __str__(self) -> str:
        return self.spec_string()


_PARAM_KEY = {Family.EXPONENTIAL: "lambda", Family.POWER: "m"}


def parse_function_spec(text: str) -> FunctionSpec:
    """Parse ``exp:lambda=0.5`` / ``pow:m=2`` / ``quad`` / ``remark2``.

    Raises ``ValueError`` naming the offending token on malformed input.
    """
    head, sep, tail = text.strip().partition(":")
    try:
        family = Family(head)
    except ValueError:
        raise ValueError(f"unknown function family '{head}'") from None

    key_needed = _PARAM_KEY.get(family)
    if key_needed is None:
        if sep:
            raise ValueError(
                f"{family.value} takes no parameter, got '{tail}'")
        return FunctionSpec(family)

    if not sep or not tail:
        raise ValueError(
            f"{family.value} requires parameter '{key_needed}=<value>'")
    key, eq, raw = tail.partition("=")
    if key != key_needed or not eq:
        raise ValueError(
            f"{family.value} requires parameter '{key_needed}=<value>', "
            f"got '{tail}'")
    try:
        param = float(raw)
    except ValueError:
        raise ValueError(
            f"could not parse number '{raw}' for '{key_needed}'") from None
    return FunctionSpec(family, param)


def scalar_callable(spec: FunctionSpec):
    """A plain-Python evaluator of ``f`` for hot scalar loops.

    Skips domain checks and array dispatch; callers are responsible for
    keeping arguments in ``[0, inf)``.
    """
    if spec.family is Family.EXPONENTIAL:
        lam = spec.param
        return lambda x: math.exp(lam * x)
    if spec.family is Family.POWER:
        m = spec.param
        return lambda x: x ** m
    if spec.family is Family.QUAD:
        return lambda x: x + 0.5 * x * x
    return lambda x: x if x <= 1.0 else 0.5 * (1.0 + x * x)


def vector_callable(spec: FunctionSpec):
    """Array evaluator of ``f`` without domain checks, for hot loops."""
    if spec.family is Family.EXPONENTIAL:
        lam = spec.param
        return lambda x: np.exp(lam * x)
    if spec.family is Family.POWER:
        m = spec.param
        return lambda x: x ** m
    if spec.family is Family.QUAD:
        return lambda x: x + 0.5 * x * x
    return lambda x: np.where(x <= 1.0, x, 0.5 * (1.0 + x * x))


# ----------------------------------------------------------------------
# curvature and the class membership check


def second_derivative(spec: FunctionSpec, x: float) -> float:
    """``f''(x)``: closed form for exponential/power families, central
    second difference (step 1e-4, one-sided near 0) otherwise."""
    x = float(x)
    _domain_check(x)
    if spec.family is Family.EXPONENTIAL:
        lam = spec.param
        return float(lam * lam * np.exp(lam * x))
    if spec.family is Family.POWER:
        m = spec.param
        if m == 1.0:
            return 0.0
        return float(m * (m - 1.0) * x ** (m - 2.0))
    h = _FD_STEP
    f = spec.value
    if x < h:
        # Forward stencil: exact for the piecewise-quadratic families.
        return (f(x) - 2.0 * f(x + h) + f(x + 2.0 * h)) / (h * h)
    return (f(x - h) - 2.0 * f(x) + f(x + h)) / (h * h)


class ClassSResult(NamedTuple):
    holds: bool
    violation_at: float | None


def class_s_condition(spec: FunctionSpec, grid) -> ClassSResult:
    """Check the smooth sufficient condition for the shift inequality:
    the ratio ``f''(x) / f'(x)`` must be nonincreasing along ``grid``.

    ``grid`` must be sorted ascending with at least two points, all in
    regions where ``f`` is smooth.  Returns whether the sampled ratio is
    nonincreasing (tolerance 1e-9) and, if not, the first offending grid
    point.  Points where ``f' = 0`` (power families at the origin) get a
    ``+inf`` ratio, matching the one-sided limit.
    """
    pts = [float(v) for v in np.asarray(grid, dtype=float).ravel()]
    if len(pts) < 2:
        raise ValueError("grid must contain at least two points")
    if any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("grid must be strictly increasing")

    def ratio(x: float) -> float:
        slope = spec.deriv(x)
        if slope == 0.0:
            return float("inf")
        return second_derivative(spec, x) / slope

    prev = ratio(pts[0])
    for x in pts[1:]:
        cur = ratio(x)
        if cur > prev + 1e-9:
            return ClassSResult(False, x)
        prev = cur
    return ClassSResult(True, None)


def is_class_s_family(spec: FunctionSpec) -> bool:
    """Whether the family is one for which the shift inequality is known
    to hold for every parameter value (all built-ins except ``remark2``)."""
    return spec.family is not Family.REMARK2
