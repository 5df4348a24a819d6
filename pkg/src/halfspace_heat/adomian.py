"""Explicit series solution of ``y = 1 - (2 lam / sqrt(pi)) int_0^t y(tau) sqrt(t - tau) dtau``.

The decomposition terms are

* ``y_{2n}(t)   =  lam^(2n) t^(3n) / (3n)!``
* ``y_{2n+1}(t) = -2^(3n+2) lam^(2n+1) t^(3(2n+1)/2) / ((6n+3)!! sqrt(pi))``

i.e. ``y_k = (-lam)^k t^(3k/2) / Gamma(3k/2 + 1)``. Only integer powers of
``lam`` are used so negative ``lam`` needs no special casing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Literal

import numpy as np

from .errors import DomainError, TruncationError
from .specfun import SQRT_PI, double_factorial_odd, log_double_factorial_odd
from .volterra1d import TimeGrid

Part = Literal["all", "even", "odd"]


@dataclass(frozen=True)
class SeriesTruncation:
    """Stopping rule for series evaluation and what it achieved."""

    max_terms: int = 400
    tail_tolerance: float = 1e-10
    achieved_tail: float = math.nan
    terms_used: int = 0

    def __post_init__(self) -> None:
        if self.max_terms < 1:
            raise DomainError(f"max_terms must be >= 1, got {self.max_terms}")
        if not self.tail_tolerance > 0:
            raise DomainError(f"tail_tolerance must be positive, got {self.tail_tolerance}")


def _coefficient(k: int) -> tuple[float, float]:
    """``(sign, log|c_k|)`` with ``y_k = c_k lam^k t^(3k/2)``."""
    n, odd = divmod(k, 2)
    if not odd:
        return 1.0, -math.lgamma(3 * n + 1)
    log_den = log_double_factorial_odd(3 * n + 2) + math.log(SQRT_PI)
    return -1.0, (3 * n + 2) * math.log(2.0) - log_den


def _exact_coefficient(k: int) -> float | None:
    n, odd = divmod(k, 2)
    if not odd:
        return 1.0 / math.factorial(3 * n) if 3 * n <= 170 else None
    try:
        den = double_factorial_odd(3 * n + 2)
    except OverflowError:
        return None
    return -(2.0 ** (3 * n + 2)) / (den * SQRT_PI)


def log_abs_term(k: int, lam: float, t: float) -> float:
    """``log |y_k(t)|``; ``-inf`` when the term vanishes."""
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    if k == 0:
        return 0.0
    if lam == 0 or t == 0:
        return -math.inf
    _, logc = _coefficient(k)
    return logc + k * math.log(abs(lam)) + 1.5 * k * math.log(t)


def adomian_term(k: int, lam: float, t):
    """The ``k``-th decomposition term at ``t`` (scalar or array)."""
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0):
        raise DomainError("t must be non-negative")
    if k == 0:
        out = np.ones_like(t_arr)
    else:
        c = _exact_coefficient(k)
        p = 1.5 * k
        if c is not None and abs(lam) ** k < 1e300:
            out = c * float(lam) ** k * t_arr**p
        else:
            sign, logc = _coefficient(k)
            signlam = math.copysign(1.0, lam) ** k if lam != 0 else 0.0
            with np.errstate(divide="ignore"):
                logmag = logc + (k * math.log(abs(lam)) if lam != 0 else -math.inf) + p * np.log(t_arr)
            out = sign * signlam * np.exp(logmag)
    return float(out) if out.ndim == 0 else out


def _parts(part: Part) -> range:
    if part == "all":
        return range(0, 1 << 30)
    if part == "even":
        return range(0, 1 << 30, 2)
    if part == "odd":
        return range(1, 1 << 30, 2)
    raise DomainError(f"unknown series part {part!r}")


def _sum_terms(term, trunc: SeriesTruncation, part: Part):
    """Sum ``term(k)`` over ``part`` in index order with the tail criterion."""
    terms = []
    indices = iter(_parts(part))
    k = next(indices)
    for used in range(trunc.max_terms):
        terms.append(term(k))
        k = next(indices)
        nxt = abs(term(k))
        partial = math.fsum(terms)
        if nxt < trunc.tail_tolerance * max(1.0, abs(partial)):
            return partial, replace(trunc, achieved_tail=nxt, terms_used=used + 1)
    raise TruncationError(f"series not converged after {trunc.max_terms} terms", nxt)


def adomian_sum(lam: float, t: float, trunc: SeriesTruncation = SeriesTruncation(),
                part: Part = "all") -> tuple[float, SeriesTruncation]:
    """Partial sum of the decomposition series at a single ``t >= 0``.

    Terms are added in increasing index with exact (``math.fsum``)
    accumulation. ``part`` restricts the sum to even or odd indices.
    """
    if not t >= 0:
        raise DomainError(f"t must be non-negative, got {t}")
    return _sum_terms(lambda k: adomian_term(k, lam, t), trunc, part)


def adomian_values(lam: float, t, trunc: SeriesTruncation = SeriesTruncation()) -> np.ndarray:
    """Vectorized series values on an array of times.

    The term count is fixed by the largest time, where the tail is largest.
    """
    t = np.asarray(t, dtype=float)
    if t.size == 0:
        return t.copy()
    _, info = adomian_sum(lam, float(np.max(t)), trunc)
    total = np.zeros_like(t)
    comp = np.zeros_like(t)
    for k in range(info.terms_used + 1):
        term = adomian_term(k, lam, t)
        # Neumaier compensated summation, elementwise
        s = total + term
        comp += np.where(np.abs(total) >= np.abs(term), (total - s) + term, (term - s) + total)
        total = s
    return total + comp


def triadic_exponential(z: float) -> float:
    """``sum_n z^(3n) / (3n)! = (e^z + 2 e^(-z/2) cos(sqrt(3) z / 2)) / 3``."""
    return (math.exp(z) + 2.0 * math.exp(-z / 2) * math.cos(math.sqrt(3.0) * z / 2)) / 3.0


def odd_series(lam: float, t: float, scale: float = 2.0, trunc: SeriesTruncation = SeriesTruncation()) -> float:
    """``sum_n (scale^(3/2) ...)`` odd sub-series ``J`` with integer powers of ``lam``.

    ``J = sum_n scale^(3(2n+1)/2) lam^(2n+1) t^(3(2n+1)/2) / (6n+3)!!``. With
    ``scale = 2`` it reproduces the odd decomposition terms through
    ``y_odd = -sqrt(2/pi) J``; ``scale = 1`` is the variant without the factor
    inside the power.
    """
    def term(k):
        n = (k - 1) // 2
        if lam == 0 or t == 0:
            return 0.0
        logmag = (1.5 * k * math.log(scale) + k * math.log(abs(lam)) + 1.5 * k * math.log(t)
                  - log_double_factorial_odd(3 * n + 2))
        return math.copysign(1.0, lam) ** k * math.exp(logmag)

    value, _ = _sum_terms(term, trunc, "odd")
    return value


def closed_form_solution(lam: float, t: float, scale: float = 2.0) -> float:
    """``I(t) - sqrt(2/pi) J(t)`` with ``I`` from :func:`triadic_exponential`."""
    even = triadic_exponential(abs(lam) ** (2.0 / 3.0) * t)
    return even - math.sqrt(2.0 / math.pi) * odd_series(lam, t, scale)


def recurrence_term_oracle(k: int, lam: float, t_grid: TimeGrid) -> np.ndarray:
    """Iterate ``y_n = -(2 lam/sqrt(pi)) int_0^t y_{n-1}(tau) sqrt(t - tau) dtau`` numerically.

    Starts from ``y_0 = 1`` and applies product-trapezoidal quadrature
    (linear interpolation, exact kernel moments) ``k`` times; no closed-form
    term is used.
    """
    if k < 0:
        raise DomainError(f"k must be non-negative, got {k}")
    older, newer = _trapezoid_lag_weights(t_grid)
    c = 2.0 * lam / SQRT_PI
    N = t_grid.N
    y = np.ones(N + 1)
    for _ in range(k):
        # node t_i sees panel [t_{j-1}, t_j] at lag d = i - j
        mem = np.convolve(older, y[:-1])[:N] + np.convolve(newer, y[1:])[:N]
        y = np.concatenate([[0.0], -c * mem])
    return y


def _trapezoid_lag_weights(grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    """Linear-interpolation product weights for the kernel ``sqrt(t - tau)``.

    With ``u = (t_i - tau)/dt`` running over ``[d, d+1]`` on a panel at lag
    ``d``, the older node ``t_{j-1}`` carries ``int u^(1/2)(u - d) du`` and
    the newer node ``t_j`` carries ``int u^(1/2)(d + 1 - u) du``.
    """
    d = np.arange(grid.N, dtype=float)
    x, w = np.polynomial.legendre.leggauss(12)
    u = d[:, None] + 0.5 * (x[None, :] + 1)
    root = np.sqrt(u) * 0.5 * w[None, :]
    older = np.sum(root * (u - d[:, None]), axis=1)
    newer = np.sum(root * (d[:, None] + 1 - u), axis=1)
    # the lag-0 panel contains the sqrt endpoint
    older[0], newer[0] = 2.0 / 5.0, 2.0 / 3.0 - 2.0 / 5.0
    scale = grid.dt**1.5
    return scale * older, scale * newer


def series_total_flux(lam: float, h0: float, t: float,
                      trunc: SeriesTruncation = SeriesTruncation()) -> tuple[float, float]:
    """Total heat flux ``U(t)`` and wall flux ``W(t)`` from the series for ``g``.

    Each term ``y_k = a_k tau^p`` integrates exactly:
    ``int_0^t y_k = y_k(t) t/(p+1)`` and
    ``int_0^t y_k(tau)(t - tau) = y_k(t) t^2/((p+1)(p+2))``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if lam == 0:
        return 2 * h0 * math.sqrt(t / math.pi), h0 / math.sqrt(math.pi * t)

    def int_g(k):
        p = 1.5 * k
        return adomian_term(k, lam, t) * t / (p + 1)

    def int_g_lin(k):
        p = 1.5 * k
        return adomian_term(k, lam, t) * t * t / ((p + 1) * (p + 2))

    ig, _ = _sum_terms(int_g, trunc, "all")
    igl, _ = _sum_terms(int_g_lin, trunc, "all")
    U = 2 * h0 * math.sqrt(t / math.pi) - lam * h0 * igl
    W = h0 / math.sqrt(math.pi * t) - h0 * lam * ig
    return U, W
