"""Dirichlet half-space heat kernels and the initial-data terms.

Coordinates follow the half-space ``D = {(x, y) : x > 0, y in R^(n-1)}`` with
the wall at ``x = 0``. Initial profiles are immutable; integrals against the
kernels are done by composite Gauss-Legendre quadrature after the Gaussian
substitutions ``xi = x + 2 sqrt(t) w`` (field) and ``xi = 2 sqrt(t) eta``
(wall flux), which keep the integrands bounded as ``t -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import AccuracyError, DomainError
from .specfun import SQRT_PI

#: Gaussian integrals are truncated at this many units of ``2 sqrt(t)``.
GAUSS_CUTOFF = 6.0
#: radial truncation, ``exp(-49)`` is far below double precision relative to O(1) data
RADIAL_CUTOFF = 7.0
MAX_DIMENSION = 3


@lru_cache(maxsize=None)
def _gl_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def composite_gauss_legendre(breaks: Sequence[float], panels: int, order: int = 8):
    """Nodes and weights of a composite Gauss-Legendre rule.

    Every interval between consecutive ``breaks`` is split into ``panels``
    equal sub-panels with ``order`` points each.
    """
    x0, w0 = _gl_rule(order)
    breaks = np.asarray(breaks, dtype=float)
    edges = np.concatenate([
        np.linspace(a, b, panels + 1)[:-1] for a, b in zip(breaks[:-1], breaks[1:])
    ] + [breaks[-1:]])
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    nodes = (a + b) / 2 + half * x0
    weights = half * w0
    return nodes.ravel(), weights.ravel()


def tangential_rule(m: int, points: int = 128) -> tuple[np.ndarray, np.ndarray]:
    """Tensor rule for ``pi^(-m/2) int exp(-|z|^2) f(z) dz`` over ``[-6, 6]^m``.

    Returns nodes of shape ``(Q^m, m)`` and weights that already contain the
    Gaussian factor and the ``pi^(-m/2)`` normalization.
    """
    z, w = composite_gauss_legendre([-GAUSS_CUTOFF, GAUSS_CUTOFF], panels=points // 8)
    w = w * np.exp(-z * z) / SQRT_PI
    if m == 0:
        return np.zeros((1, 0)), np.ones(1)
    grids = np.meshgrid(*([z] * m), indexing="ij")
    wgrids = np.meshgrid(*([w] * m), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


# {{{ points and profiles


@dataclass(frozen=True)
class SpacePoint:
    """A point ``(x, y)`` of the closed half-space; ``n = len(y) + 1``."""

    x: float
    y: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.x >= 0:
            raise DomainError(f"x must be non-negative, got {self.x}")
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))
        if self.n > MAX_DIMENSION:
            raise DomainError(f"dimension {self.n} exceeds the supported maximum {MAX_DIMENSION}")

    @property
    def n(self) -> int:
        return len(self.y) + 1


def _as_tangential(y, m: int) -> np.ndarray:
    """Coerce ``y`` to shape ``(P, m)``."""
    y = np.asarray(y, dtype=float)
    if m == 0:
        return np.zeros((y.shape[0] if y.ndim == 2 else 1, 0))
    if y.ndim == 1:
        y = y.reshape(1, m) if y.size == m else y.reshape(-1, 1)
    if y.shape[-1] != m:
        raise DomainError(f"tangential coordinates have length {y.shape[-1]}, expected {m}")
    return y


@dataclass(frozen=True)
class InitialProfile:
    """Initial temperature ``h(x, y)``; subclasses define the concrete forms."""

    @property
    def form(self) -> str:
        raise NotImplementedError

    @property
    def decay_bound(self) -> float:
        """A finite ``M`` with ``|h| <= M`` on the half-space."""
        raise NotImplementedError

    @property
    def depends_on_y(self) -> bool:
        return True

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """Abscissae in ``x`` where ``h`` is only piecewise smooth."""
        return ()

    def __call__(self, xi, eta=None):
        raise NotImplementedError

    def tangential_average(self, xi, y, t: float) -> np.ndarray:
        r"""Heat-kernel average in the tangential directions.

        .. math::

            \pi^{-m/2} \int_{\mathbb{R}^m} e^{-|z|^2} h(\xi, y + 2\sqrt{t} z)\, dz

        ``xi`` has shape ``(K,)`` and ``y`` shape ``(P, m)``; the result has
        shape ``(P, K)``.
        """
        raise NotImplementedError


@dataclass(frozen=True)
class ConstantProfile(InitialProfile):
    h0: float

    @property
    def form(self) -> str:
        return "constant"

    @property
    def decay_bound(self) -> float:
        return abs(self.h0)

    @property
    def depends_on_y(self) -> bool:
        return False

    def __call__(self, xi, eta=None):
        return np.full(np.shape(xi), float(self.h0))

    def tangential_average(self, xi, y, t):
        y = np.atleast_2d(y)
        return np.full((y.shape[0], np.size(xi)), float(self.h0))


@dataclass(frozen=True)
class GaussianBump(InitialProfile):
    """``amplitude * exp(-(|x - cx|^2 + |y - cy|^2) / width^2)``."""

    amplitude: float
    center_x: float
    width: float
    center_y: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise DomainError(f"width must be positive, got {self.width}")
        object.__setattr__(self, "center_y", tuple(float(c) for c in self.center_y))

    @property
    def form(self) -> str:
        return "gaussian"

    @property
    def decay_bound(self) -> float:
        return abs(self.amplitude)

    @property
    def depends_on_y(self) -> bool:
        return len(self.center_y) > 0

    def __call__(self, xi, eta=None):
        xi = np.asarray(xi, dtype=float)
        r2 = (xi - self.center_x) ** 2
        if eta is not None and self.center_y:
            eta = np.asarray(eta, dtype=float)
            r2 = r2 + np.sum((eta - np.asarray(self.center_y)) ** 2, axis=-1)
        return self.amplitude * np.exp(-r2 / self.width**2)

    def tangential_average(self, xi, y, t):
        xi = np.asarray(xi, dtype=float).ravel()
        m = len(self.center_y)
        radial = self.amplitude * np.exp(-((xi - self.center_x) ** 2) / self.width**2)
        if m == 0:
            y = np.atleast_2d(y)
            return np.broadcast_to(radial, (y.shape[0], xi.size)).copy()
        y = _as_tangential(y, m)
        spread = self.width**2 + 4.0 * t
        factor = (self.width**2 / spread) ** (m / 2) * np.exp(
            -np.sum((y - np.asarray(self.center_y)) ** 2, axis=-1) / spread
        )
        return factor[:, None] * radial[None, :]


@dataclass(frozen=True)
class SeparableProfile(InitialProfile):
    """``h(x, y) = hx(x) * hy(y)``; ``hy`` maps arrays ``(..., m)`` to ``(...)``."""

    hx: Callable[[np.ndarray], np.ndarray]
    hy: Callable[[np.ndarray], np.ndarray]
    m: int
    bound: float
    points: int = 128

    def __post_init__(self) -> None:
        if not (math.isfinite(self.bound) and self.bound > 0):
            raise DomainError(f"decay bound must be finite and positive, got {self.bound}")
        if not 0 <= self.m < MAX_DIMENSION:
            raise DomainError(f"tangential dimension {self.m} not supported")

    @property
    def form(self) -> str:
        return "separable"

    @property
    def decay_bound(self) -> float:
        return self.bound

    @property
    def depends_on_y(self) -> bool:
        return self.m > 0

    def __call__(self, xi, eta=None):
        out = np.asarray(self.hx(np.asarray(xi, dtype=float)), dtype=float)
        if self.m and eta is not None:
            out = out * np.asarray(self.hy(np.asarray(eta, dtype=float)), dtype=float)
        return out

    def tangential_average(self, xi, y, t):
        xi = np.asarray(xi, dtype=float).ravel()
        radial = np.asarray(self.hx(xi), dtype=float)
        if self.m == 0:
            y = np.atleast_2d(y)
            return np.broadcast_to(radial, (y.shape[0], xi.size)).copy()
        y = _as_tangential(y, self.m)
        z, w = tangential_rule(self.m, self.points)
        pts = y[:, None, :] + 2.0 * math.sqrt(t) * z[None, :, :]
        avg = np.asarray(self.hy(pts), dtype=float) @ w
        return avg[:, None] * radial[None, :]


@dataclass(frozen=True)
class TabulatedProfile(InitialProfile):
    """Linear interpolation of samples in ``x``, independent of ``y``.

    Below the first knot the first value is held; beyond the last knot the
    last value decays with a Gaussian taper of width ``taper``.
    """

    x: tuple[float, ...]
    values: tuple[float, ...]
    taper: float = 1.0

    def __post_init__(self) -> None:
        x = tuple(float(v) for v in self.x)
        values = tuple(float(v) for v in self.values)
        if len(x) < 2 or len(x) != len(values):
            raise DomainError("tabulated profile needs at least two (x, value) pairs of equal length")
        if any(b <= a for a, b in zip(x[:-1], x[1:])) or x[0] < 0:
            raise DomainError("tabulated abscissae must be non-negative and strictly increasing")
        if not self.taper > 0:
            raise DomainError(f"taper must be positive, got {self.taper}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", values)

    @property
    def form(self) -> str:
        return "tabulated"

    @property
    def decay_bound(self) -> float:
        return max(abs(v) for v in self.values)

    @property
    def depends_on_y(self) -> bool:
        return False

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return self.x

    def __call__(self, xi, eta=None):
        xi = np.asarray(xi, dtype=float)
        out = np.interp(xi, self.x, self.values)
        beyond = xi > self.x[-1]
        if np.any(beyond):
            d = (xi[beyond] - self.x[-1]) / self.taper
            out[beyond] = self.values[-1] * np.exp(-d * d)
        return out

    def tangential_average(self, xi, y, t):
        y = np.atleast_2d(y)
        radial = self(np.asarray(xi, dtype=float).ravel())
        return np.broadcast_to(radial, (y.shape[0], radial.size)).copy()


# }}}


# {{{ kernels


def _spread(t, tau):
    s = np.asarray(t, dtype=float) - np.asarray(tau, dtype=float)
    if np.any(s <= 0):
        raise DomainError("kernels require t > tau")
    return s


def green_1d(x, t, xi, tau):
    """Dirichlet Green's function of ``u_t = u_xx`` on ``x > 0``."""
    s = _spread(t, tau)
    x = np.asarray(x, dtype=float)
    xi = np.asarray(xi, dtype=float)
    g = (np.exp(-((x - xi) ** 2) / (4 * s)) - np.exp(-((x + xi) ** 2) / (4 * s)))
    g = g / (2 * np.sqrt(np.pi * s))
    return g.item() if g.ndim == 0 else g


def green_nd(p: SpacePoint, t: float, q: SpacePoint, tau: float) -> float:
    """Half-space Green's function: tangential heat kernel times :func:`green_1d`."""
    if p.n != q.n:
        raise DomainError(f"dimension mismatch: {p.n} vs {q.n}")
    s = float(_spread(t, tau))
    g = green_1d(p.x, t, q.x, tau)
    if p.n == 1:
        return g
    r2 = sum((a - b) ** 2 for a, b in zip(p.y, q.y))
    return math.exp(-r2 / (4 * s)) / (2 * math.sqrt(math.pi * s)) ** (p.n - 1) * g


def wall_flux_kernel(t, xi, tau):
    """``d/dx`` of :func:`green_1d` at ``x = 0``."""
    s = _spread(t, tau)
    xi = np.asarray(xi, dtype=float)
    k = xi * np.exp(-(xi**2) / (4 * s)) / (2 * SQRT_PI * s**1.5)
    return k.item() if k.ndim == 0 else k


# }}}


# {{{ initial-data terms


def _converged(integrand, breaks, tol: float, what: str, panels: int = 4, max_panels: int = 512):
    """Integrate with panel doubling until two levels agree to ``tol``."""
    nodes, weights = composite_gauss_legendre(breaks, panels)
    prev = integrand(nodes) @ weights
    while True:
        panels *= 2
        nodes, weights = composite_gauss_legendre(breaks, panels)
        cur = integrand(nodes) @ weights
        est = float(np.max(np.abs(cur - prev)))
        scale = max(1.0, float(np.max(np.abs(cur))))
        if est <= tol * scale:
            return cur
        if panels >= max_panels:
            raise AccuracyError(f"{what} quadrature did not converge", est)
        prev = cur


def _breaks(lo: float, hi: float, knots) -> list[float]:
    inner = sorted(k for k in knots if lo < k < hi)
    return [lo, *inner, hi]


def initial_field_values(x: float, y, t: float, h: InitialProfile, tol: float = 1e-10) -> np.ndarray:
    """Vectorized ``u0(x, y, t)`` over tangential points ``y`` of shape ``(P, m)``."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if x == 0:
        return np.zeros(y.shape[0])
    c = 2.0 * math.sqrt(t)
    a = x / c
    knots = [k / c for k in h.breakpoints]

    def direct(w):
        return np.exp(-w * w) * h.tangential_average(x + c * w, y, t)

    def image(w):
        return np.exp(-w * w) * h.tangential_average(-x + c * w, y, t)

    lo = max(-a, -RADIAL_CUTOFF)
    total = _converged(direct, _breaks(lo, RADIAL_CUTOFF, [k - a for k in knots]),
                       tol, "initial field")
    if a < RADIAL_CUTOFF:
        total = total - _converged(image, _breaks(a, RADIAL_CUTOFF, [k + a for k in knots]),
                                   tol, "initial field image")
    return total / SQRT_PI


def initial_field_term(p: SpacePoint, t: float, h: InitialProfile, tol: float = 1e-10) -> float:
    """``u0(p, t) = int_D G(p, t; q, 0) h(q) dq``."""
    return float(initial_field_values(p.x, np.asarray(p.y).reshape(1, -1), t, h, tol)[0])


def initial_flux_values(y, t: float, h: InitialProfile, tol: float = 1e-10) -> np.ndarray:
    """Vectorized ``V0(y, t)`` over tangential points of shape ``(P, m)``.

    Uses ``V0 = 2/sqrt(pi t) int_0^inf eta exp(-eta^2) Th(2 sqrt(t) eta) d eta``
    where ``Th`` is the tangential heat average of ``h``.
    """
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    y = np.atleast_2d(np.asarray(y, dtype=float))
    c = 2.0 * math.sqrt(t)

    def integrand(eta):
        return eta * np.exp(-eta * eta) * h.tangential_average(c * eta, y, t)

    knots = [k / c for k in h.breakpoints]
    total = _converged(integrand, _breaks(0.0, RADIAL_CUTOFF, knots), tol, "initial flux")
    return 2.0 / math.sqrt(math.pi * t) * total


def initial_flux_term(y, t: float, h: InitialProfile, n: int, tol: float = 1e-10) -> float:
    """Wall flux ``V0(y, t)`` generated by the initial datum alone."""
    y = tuple(np.atleast_1d(np.asarray(y, dtype=float)).tolist()) if n > 1 else ()
    if len(y) != n - 1:
        raise DomainError(f"expected {n - 1} tangential coordinates, got {len(y)}")
    return float(initial_flux_values(np.asarray(y).reshape(1, n - 1), t, h, tol)[0])


# }}}


def initial_flux_function(h: InitialProfile, y=(), tol: float = 1e-10) -> Callable[[np.ndarray], np.ndarray]:
    """``t -> V0(y, t)`` on arrays of positive times, for use as solver forcing."""
    point = np.asarray(y, dtype=float).reshape(1, -1)

    def v0(t):
        return np.array([initial_flux_values(point, float(s), h, tol)[0] for s in np.atleast_1d(t)])

    return v0
