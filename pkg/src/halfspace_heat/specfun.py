"""Special functions and closed-form moment integrals.

Everything here is pure. Factorial-like quantities are exact Python integers
while they fit in a double, and are otherwise available in log space.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import special

from .errors import DomainError

SQRT_PI = math.sqrt(math.pi)

MomentKind = Literal["integer-power", "half-odd-power"]


def erf(x):
    """Error function, ``(2/sqrt(pi)) * int_0^x exp(-s^2) ds``.

    Scalars go through libm, arrays through :func:`scipy.special.erf`.
    """
    if np.ndim(x) == 0:
        return math.erf(float(x))
    return special.erf(np.asarray(x, dtype=float))


def gamma_beta(x: float, y: float) -> tuple[float, float]:
    """Return ``(Gamma(x), B(x, y))`` for positive ``x`` and ``y``."""
    if not (x > 0 and y > 0):
        raise DomainError(f"gamma_beta requires x > 0 and y > 0, got x={x}, y={y}")
    gx = math.gamma(x) if x < 171.0 else math.inf
    return gx, float(special.beta(x, y))


def double_factorial_odd(n: int) -> int:
    """Exact ``(2n-1)!!`` with ``(-1)!! = 1``.

    Raises :class:`OverflowError` once the value no longer fits in a double;
    use :func:`log_double_factorial_odd` beyond that point.
    """
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    value = math.prod(range(1, 2 * n, 2))
    if value > sys.float_info.max:
        raise OverflowError(f"(2*{n}-1)!! exceeds the double range")
    return value


def log_double_factorial_odd(n: int) -> float:
    """``log((2n-1)!!)`` via ``(2n)! / (2^n n!)``."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    return math.lgamma(2 * n + 1) - n * math.log(2.0) - math.lgamma(n + 1)


def gamma_half_integer(n: int) -> float:
    """``Gamma(n + 1/2) = (2n-1)!! sqrt(pi) / 2^n``; ``inf`` past the double range."""
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    try:
        return double_factorial_odd(n) / 2**n * SQRT_PI
    except OverflowError:
        log_value = log_double_factorial_odd(n) - n * math.log(2.0) + math.log(SQRT_PI)
        return math.exp(log_value) if log_value < 709.0 else math.inf


@dataclass(frozen=True)
class HalfIntegerGammaTable:
    """Values ``Gamma(k + 1/2)`` for ``k = 0..max_n`` built by upward recurrence."""

    max_n: int
    values: tuple[float, ...]

    @classmethod
    def build(cls, max_n: int) -> HalfIntegerGammaTable:
        if max_n < 0:
            raise DomainError(f"max_n must be non-negative, got {max_n}")
        values = [SQRT_PI]
        for k in range(max_n):
            values.append((k + 0.5) * values[-1])
        return cls(max_n=max_n, values=tuple(values))

    def __getitem__(self, n: int) -> float:
        if not 0 <= n <= self.max_n:
            raise DomainError(f"n={n} outside table range 0..{self.max_n}")
        return self.values[n]


def _ratio(num: int, den: int) -> float:
    # int / int is correctly rounded in Python even for huge operands
    return num / den


def weighted_moment(kind: MomentKind, n: int, t: float) -> float:
    r"""Closed-form moments against :math:`\sqrt{t-\tau}` on :math:`[0, t]`.

    ``"integer-power"``:
        :math:`\int_0^t \tau^{3(n+1)} \sqrt{t-\tau}\, d\tau
        = 2^{3n+4} (3n+3)! / (6n+9)!! \; t^{3(2n+3)/2}`

    ``"half-odd-power"``:
        :math:`\int_0^t \tau^{3(2n+1)/2} \sqrt{t-\tau}\, d\tau
        = \pi (6n+3)!! / (2^{3(n+1)} (3n+3)!) \; t^{3(n+1)}`
    """
    if n < 0:
        raise DomainError(f"n must be non-negative, got {n}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    fact = math.factorial(3 * (n + 1))
    if kind == "integer-power":
        dfact = math.prod(range(1, 6 * n + 10, 2))
        coeff = _ratio(2 ** (3 * n + 4) * fact, dfact)
        return coeff * t ** (3 * (2 * n + 3) / 2)
    if kind == "half-odd-power":
        dfact = math.prod(range(1, 6 * n + 4, 2))
        coeff = math.pi * _ratio(dfact, 2 ** (3 * (n + 1)) * fact)
        return coeff * t ** (3 * (n + 1))
    raise DomainError(f"unknown moment kind {kind!r}")
