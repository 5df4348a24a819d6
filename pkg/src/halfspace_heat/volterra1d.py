"""Product-integration solvers for the one-dimensional flux equations.

Two families of second-kind Volterra equations appear:

* the Abel-kernel equation for the wall flux,
  ``W(t) = V0(t) - int_0^t F(A(tau)) / sqrt(pi (t - tau)) dtau`` with
  ``A(t) = int_0^t W``;
* smooth-kernel linear equations
  ``y(t) = f(t) - c int_0^t y(tau) sqrt(t - tau) dtau``.

Kernel moments are integrated exactly per panel on a uniform grid; the
non-kernel factor is replaced by its panel mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import BoundViolation, DomainError, StiffnessError
from .greens import InitialProfile, SpacePoint, composite_gauss_legendre, initial_field_term
from .specfun import SQRT_PI, erf

#: Picard iterations allowed before a step is declared stiff.
MAX_PICARD = 5
CONTRACTION_LIMIT = 0.5


# {{{ grid


@dataclass(frozen=True)
class TimeGrid:
    """Uniform nodes ``t_i = i T / N`` with exact per-panel kernel moments.

    Moments depend only on the lag ``d = i - j`` between the collocation node
    ``t_i`` and the panel ``[t_{j-1}, t_j]``, so they are stored by lag.
    """

    T: float
    N: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.T) and self.T > 0):
            raise DomainError(f"horizon T must be positive, got {self.T}")
        if int(self.N) != self.N or self.N < 2:
            raise DomainError(f"number of steps N must be an integer >= 2, got {self.N}")

    @property
    def dt(self) -> float:
        return self.T / self.N

    @cached_property
    def nodes(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.dt

    @cached_property
    def abel_lag_weights(self) -> np.ndarray:
        """``int (t_i - tau)^(-1/2)`` over a panel at lag ``d = 0..N-1``."""
        d = np.arange(self.N, dtype=float)
        # sqrt(d+1) - sqrt(d) without cancellation
        return 2.0 * math.sqrt(self.dt) / (np.sqrt(d + 1) + np.sqrt(d))

    @cached_property
    def smooth_lag_weights(self) -> np.ndarray:
        """``int (t_i - tau)^(1/2)`` over a panel at lag ``d = 0..N-1``."""
        d = np.arange(self.N, dtype=float)
        diff = (3 * d * d + 3 * d + 1) / ((d + 1) ** 1.5 + d**1.5)
        return 2.0 / 3.0 * self.dt**1.5 * diff

    def abel_weights(self, i: int) -> np.ndarray:
        """Weights for panels ``j = 1..i`` seen from node ``t_i``."""
        return self.abel_lag_weights[i - 1 :: -1][:i] if i > 0 else np.zeros(0)

    def smooth_weights(self, i: int) -> np.ndarray:
        return self.smooth_lag_weights[i - 1 :: -1][:i] if i > 0 else np.zeros(0)

    def refine(self, factor: int = 2) -> TimeGrid:
        return TimeGrid(self.T, self.N * factor)


# }}}


# {{{ source law


@dataclass(frozen=True)
class SourceLaw:
    """The map ``F`` applied to the cumulative wall flux.

    ``F`` enters the flux equation with a minus sign; this object stores
    ``F`` itself. Use :meth:`linear` or :meth:`custom` to construct.
    """

    kind: Literal["linear", "custom"]
    coefficient: float = 0.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    lipschitz: float = 0.0
    name: str = ""

    @classmethod
    def linear(cls, lam: float) -> SourceLaw:
        return cls(kind="linear", coefficient=float(lam), lipschitz=abs(float(lam)),
                   name=f"linear({lam:g})")

    @classmethod
    def zero(cls) -> SourceLaw:
        return cls.linear(0.0)

    @classmethod
    def custom(cls, func: Callable[[np.ndarray], np.ndarray], lipschitz: float,
               name: str = "custom") -> SourceLaw:
        if not (math.isfinite(lipschitz) and lipschitz > 0):
            raise DomainError(f"Lipschitz estimate must be positive, got {lipschitz}")
        if not math.isfinite(float(np.asarray(func(np.zeros(1)))[0])):
            raise DomainError("F(0) must be finite")
        return cls(kind="custom", func=func, lipschitz=float(lipschitz), name=name)

    @property
    def is_linear(self) -> bool:
        return self.kind == "linear"

    @property
    def is_zero(self) -> bool:
        return self.is_linear and self.coefficient == 0.0

    def __call__(self, a):
        if self.is_linear:
            return self.coefficient * np.asarray(a, dtype=float)
        return np.asarray(self.func(np.asarray(a, dtype=float)), dtype=float)

    def sup_abs(self, bound: float, samples: int = 4097) -> float:
        """``sup |F(X)|`` over ``|X| <= bound`` (sampled for custom laws)."""
        if self.is_linear:
            return abs(self.coefficient) * bound
        x = np.linspace(-bound, bound, samples)
        return float(np.max(np.abs(self(x))))

    def check_lipschitz(self, values: np.ndarray, slack: float = 1e-9) -> None:
        """Verify the Lipschitz estimate on the range spanned by ``values``."""
        if self.is_linear:
            return
        values = np.asarray(values, dtype=float)
        values = values[np.isfinite(values)]
        if values.size < 2:
            return
        x = np.linspace(values.min(), values.max(), 1025)
        dx = np.diff(x)
        if not np.any(dx > 0):
            return
        slope = np.abs(np.diff(self(x)))[dx > 0] / dx[dx > 0]
        if slope.max() > self.lipschitz * (1 + slack) + slack:
            raise DomainError(
                f"source law {self.name!r} has slope {slope.max():.4g} above "
                f"its Lipschitz estimate {self.lipschitz:.4g} on [{x[0]:.4g}, {x[-1]:.4g}]"
            )


# }}}


# {{{ traces


@dataclass(frozen=True)
class FluxTrace:
    """Wall flux ``W`` and cumulative flux ``A`` on a :class:`TimeGrid`.

    ``W[0]`` is ``nan``: the flux is singular at ``t = 0``. ``U`` is the
    total heat flux when it is computed along the way.
    """

    grid: TimeGrid
    W: np.ndarray
    A: np.ndarray
    U: Optional[np.ndarray] = None

    def cumulative_at(self, tau) -> np.ndarray:
        """``A(tau)``, interpolated linearly in ``sqrt(tau)``."""
        tau = np.asarray(tau, dtype=float)
        if np.any(tau > self.grid.T * (1 + 1e-12)):
            raise DomainError(f"time beyond trace horizon {self.grid.T}")
        return np.interp(np.sqrt(tau), np.sqrt(self.grid.nodes), self.A)


def singular_cumulative(v: np.ndarray, grid: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    r"""Cumulative integral and panel means of data behaving like ``t^(-1/2)``.

    ``v`` is sampled on nodes ``1..N`` (``v[0]`` is ignored). Writing
    :math:`v = \phi(t)/\sqrt{t}`, :math:`\phi` is taken constant on the first
    panel and linear on the others, and both :math:`\int v` and the panel
    means of that integral are evaluated exactly.
    """
    v = np.asarray(v, dtype=float)
    shape = (-1,) + (1,) * (v.ndim - 1)
    t = grid.nodes.reshape(shape)
    dt = grid.dt
    phi = np.empty(v.shape)
    phi[1:] = v[1:] * np.sqrt(t[1:])
    phi[0] = phi[1]

    a, b = t[:-1], t[1:]
    ra, rb = np.sqrt(a), np.sqrt(b)

    def mom(p):
        # int_a^b tau^(p - 1/2) d tau
        q = p + 0.5
        return (rb ** (2 * q) - ra ** (2 * q)) / q

    m0, m1, m2 = mom(0), mom(1), mom(2)
    # phi(tau) = alpha + beta * tau on each panel, constant on the first
    beta = (phi[1:] - phi[:-1]) / dt
    beta[0] = 0.0
    alpha = phi[1:] - beta * b
    increments = alpha * m0 + beta * m1
    S = np.concatenate([np.zeros((1,) + v.shape[1:]), np.cumsum(increments, axis=0)])

    # mean over the panel of int_a^tau v = (1/dt) int_a^b (b - s) v(s) ds
    inner = alpha * (b * m0 - m1) + beta * (b * m1 - m2)
    means = S[:-1] + inner / dt
    return S, means


# }}}


# {{{ solvers


def solve_smooth_linear(c: float, forcing: Callable[[np.ndarray], np.ndarray],
                        grid: TimeGrid) -> np.ndarray:
    """Solve ``y(t) = forcing(t) - c int_0^t y(tau) sqrt(t - tau) dtau``.

    Panel values are midpoint averages ``(y_{j-1} + y_j) / 2``; the term that
    involves the unknown ``y_i`` is resolved by one Picard correction after a
    linear-extrapolation predictor.
    """
    f = np.asarray(forcing(grid.nodes), dtype=float) * np.ones(grid.N + 1)
    w = grid.smooth_lag_weights
    y = np.empty(grid.N + 1)
    y[0] = f[0]
    ybar = np.empty(grid.N + 1)
    cw0 = c * w[0]
    for i in range(1, grid.N + 1):
        hist = c * np.dot(w[i - 1 : 0 : -1], ybar[1:i]) if i > 1 else 0.0
        pred = 2 * y[i - 1] - y[i - 2] if i > 1 else y[0]
        base = f[i] - hist - 0.5 * cw0 * y[i - 1]
        yi = base - 0.5 * cw0 * pred
        yi = base - 0.5 * cw0 * yi
        y[i] = yi
        ybar[i] = 0.5 * (y[i - 1] + yi)
    return y


def solve_abel_nonlinear(F: SourceLaw, v0: Callable[[np.ndarray], np.ndarray],
                         grid: TimeGrid) -> FluxTrace:
    """Step the Abel-kernel flux equation forward on ``grid``.

    ``A = S + C`` where ``S`` integrates ``v0`` with its ``t^(-1/2)``
    singularity built in and ``C`` is the trapezoidal integral of the
    remainder ``W - v0``. The source is evaluated at panel means of ``A``.
    """
    t = grid.nodes
    N, dt = grid.N, grid.dt
    v = np.full(N + 1, np.nan)
    v[1:] = np.asarray(v0(t[1:]), dtype=float)
    S, Smean = singular_cumulative(v, grid)
    w = grid.abel_lag_weights / SQRT_PI

    W = np.full(N + 1, np.nan)
    R = np.zeros(N + 1)
    C = np.zeros(N + 1)
    A = np.zeros(N + 1)
    FA = np.zeros(N + 1)  # F at panel means, index = panel

    def evaluate(i, Ri, hist):
        Ci = C[i - 1] + 0.5 * dt * (R[i - 1] + Ri)
        mean = Smean[i - 1] + C[i - 1] + dt * (2 * R[i - 1] + Ri) / 6.0
        f = float(F(mean))
        return -hist - w[0] * f, Ci, f

    for i in range(1, N + 1):
        hist = float(np.dot(w[i - 1 : 0 : -1], FA[1:i])) if i > 1 else 0.0
        r0 = 2 * R[i - 1] - R[i - 2] if i > 1 else 0.0
        r1, _, _ = evaluate(i, r0, hist)
        r2, Ci, fi = evaluate(i, r1, hist)
        first = abs(r1 - r0)
        scale = max(abs(v[i]), abs(r2), 1e-300)
        k = 1
        while first > 1e-14 * scale and abs(r2 - r1) > CONTRACTION_LIMIT * first:
            if k >= MAX_PICARD:
                raise StiffnessError("Picard correction failed to contract",
                                     abs(r2 - r1) / first, i)
            r0, r1 = r1, r2
            first = abs(r1 - r0)
            r2, Ci, fi = evaluate(i, r1, hist)
            k += 1
        R[i], C[i], FA[i] = r2, Ci, fi
        W[i] = v[i] + r2
        A[i] = S[i] + Ci

    F.check_lipschitz(A)
    return FluxTrace(grid=grid, W=W, A=A)


def flux_from_g(g_trace: np.ndarray, h0: float, lam: float, grid: TimeGrid) -> FluxTrace:
    """Assemble ``W`` and ``U`` from the resolvent-like function ``g``.

    ``W = h0/sqrt(pi t) - h0 lam int_0^t g`` and
    ``U = 2 h0 sqrt(t/pi) - lam h0 int_0^t g(tau) (t - tau) dtau``.
    """
    g = np.asarray(g_trace, dtype=float)
    if g.shape != (grid.N + 1,):
        raise DomainError(f"g trace has shape {g.shape}, expected {(grid.N + 1,)}")
    t, dt = grid.nodes, grid.dt
    gbar = 0.5 * (g[:-1] + g[1:])
    cum = np.concatenate([[0.0], np.cumsum(dt * gbar)])
    W = np.full(grid.N + 1, np.nan)
    W[1:] = h0 / np.sqrt(np.pi * t[1:]) - h0 * lam * cum[1:]
    lag = dt * dt * (2 * np.arange(grid.N) + 1) / 2.0
    mem = np.concatenate([[0.0], np.convolve(lag, gbar)[: grid.N]])
    U = 2 * h0 * np.sqrt(t / np.pi) - lam * h0 * mem
    return FluxTrace(grid=grid, W=W, A=U.copy(), U=U)


def temperature_1d(x: float, t: float, trace: FluxTrace, F: SourceLaw,
                   h: InitialProfile, panels: int = 64) -> float:
    """``u(x, t) = u0(x, t) - int_0^t erf(x / 2 sqrt(t - tau)) F(A(tau)) dtau``."""
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if t > trace.grid.T * (1 + 1e-12):
        raise DomainError(f"t={t} beyond trace horizon {trace.grid.T}")
    if x == 0:
        return 0.0
    if x < 0:
        raise DomainError(f"x must be non-negative, got {x}")
    u0 = initial_field_term(SpacePoint(x), t, h)
    if F.is_zero:
        return u0
    # tau = sigma^2 keeps the sqrt(tau) behaviour of A smooth
    sigma, ws = composite_gauss_legendre([0.0, math.sqrt(t)], panels)
    tau = sigma * sigma
    kern = erf(x / (2.0 * np.sqrt(t - tau)))
    mem = np.dot(ws, 2.0 * sigma * kern * F(trace.cumulative_at(tau)))
    return float(u0 - mem)


# }}}


# {{{ residual


def _sqrt_split_rule(order: int = 48):
    """Gauss-Legendre rule on [0, 1] for the square-root substitutions."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1), 0.5 * w


def _smooth_memory(y: Callable, t: float, order: int = 48) -> float:
    # int_0^t y(tau) sqrt(t - tau) dtau split at t/2 with tau = s^2 and t - tau = r^2
    u, w = _sqrt_split_rule(order)
    h = math.sqrt(t / 2)
    s = h * u
    left = np.dot(w, h * y(s * s) * 2 * s * np.sqrt(t - s * s))
    r = h * u
    right = np.dot(w, h * y(t - r * r) * 2 * r * r)
    return float(left + right)


def _cumulative_of(W: Callable, tau: np.ndarray, order: int = 48) -> np.ndarray:
    # A(tau) = int_0^sqrt(tau) 2 s W(s^2) ds
    u, w = _sqrt_split_rule(order)
    root = np.sqrt(tau)[:, None]
    s = root * u[None, :]
    return np.sum(w[None, :] * root * 2 * s * W(s * s), axis=1)


def _abel_memory(fa: Callable, t: float, order: int = 48) -> float:
    # int_0^t fa(tau) / sqrt(t - tau) dtau split at t/2
    u, w = _sqrt_split_rule(order)
    h = math.sqrt(t / 2)
    s = h * u
    left = np.dot(w, h * fa(s * s) * 2 * s / np.sqrt(t - s * s))
    r = h * u
    right = np.dot(w, h * fa(t - r * r) * 2)
    return float(left + right)


def _as_callable(candidate, grid: TimeGrid) -> Callable:
    if callable(candidate):
        return lambda tau: np.asarray(candidate(np.asarray(tau, dtype=float)), dtype=float)
    values = np.asarray(candidate, dtype=float)
    root = np.sqrt(grid.nodes)
    spline = CubicSpline(root, values)
    return lambda tau: spline(np.sqrt(np.asarray(tau, dtype=float)))


def residual(equation: Literal["abel", "smooth"], candidate, grid: TimeGrid, *,
             c: float = 0.0, forcing: Optional[Callable] = None,
             F: Optional[SourceLaw] = None, v0: Optional[Callable] = None,
             order: int = 48) -> float:
    """Max over ``t_1..t_N`` of ``|LHS - RHS|`` for a candidate solution.

    The integrals use Gauss-Legendre rules after square-root substitutions
    at both ends, independent of the solver weights. ``candidate`` is a
    callable or samples on ``grid`` (interpolated by a cubic spline in
    ``sqrt(t)``); for ``"abel"`` it is the flux ``W``, or a :class:`FluxTrace`
    whose stored ``A`` is used for the cumulative flux.
    """
    t = grid.nodes[1:]
    if equation == "smooth":
        if forcing is None:
            raise DomainError("smooth residual needs a forcing function")
        y = _as_callable(candidate, grid)
        lhs = y(t)
        rhs = np.array([float(np.asarray(forcing(np.array([ti])))[0]) - c * _smooth_memory(y, ti, order)
                        for ti in t])
        return float(np.max(np.abs(lhs - rhs)))
    if equation == "abel":
        if F is None or v0 is None:
            raise DomainError("abel residual needs F and v0")
        if isinstance(candidate, FluxTrace):
            Wt = candidate.W[1:]

            def fa(tau):
                return F(candidate.cumulative_at(tau))
        else:
            Wc = candidate if callable(candidate) else _as_callable(candidate, grid)
            Wt = np.asarray(Wc(t), dtype=float)

            def fa(tau):
                return F(_cumulative_of(Wc, np.atleast_1d(tau), order))
        v = np.asarray(v0(t), dtype=float)
        rhs = np.array([v[k] - _abel_memory(fa, ti, order) / SQRT_PI for k, ti in enumerate(t)])
        return float(np.max(np.abs(Wt - rhs)))
    raise DomainError(f"unknown equation {equation!r}")


def check_cumulative_bound(A: np.ndarray, bound: float) -> None:
    """Raise :class:`BoundViolation` naming the first node with ``|A| > bound``."""
    bad = np.argwhere(np.abs(A) > bound)
    if bad.size:
        node = tuple(int(k) for k in bad[0])
        raise BoundViolation(f"|A| = {abs(A[node]):.6g} exceeds bound {bound:.6g} at node {node}", node)


# }}}
