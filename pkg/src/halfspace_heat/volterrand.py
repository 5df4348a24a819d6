"""Wall-flux equation and field reconstruction for ``n = 2, 3``.

The memory term of the flux equation is written as

    (t - tau)^(-1/2) / sqrt(pi) * [Gaussian average of F(A(., tau))]

where the Gaussian average is the tangential heat-kernel convolution
divided by its mass. Only the Abel factor needs product weights; the
tangential part is a direct sum over a uniform lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import BoundViolation, DomainError, StiffnessError
from .greens import (
    GAUSS_CUTOFF,
    InitialProfile,
    SpacePoint,
    composite_gauss_legendre,
    initial_field_values,
    initial_flux_values,
)
from .specfun import SQRT_PI, erf
from .volterra1d import CONTRACTION_LIMIT, MAX_PICARD, SourceLaw, TimeGrid, singular_cumulative


@dataclass(frozen=True)
class TangentialGrid:
    """Uniform lattice on ``[-L, L]^(n-1)`` with an odd number of points per axis."""

    n: int
    half_width: float
    points_per_axis: int

    def __post_init__(self) -> None:
        if self.n not in (2, 3):
            raise DomainError(f"tangential lattices exist for n in {{2, 3}}, got {self.n}")
        if not self.half_width > 0:
            raise DomainError(f"half width must be positive, got {self.half_width}")
        if self.points_per_axis < 3 or self.points_per_axis % 2 == 0:
            raise DomainError(f"points per axis must be odd and >= 3, got {self.points_per_axis}")

    @property
    def m(self) -> int:
        return self.n - 1

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.points_per_axis - 1)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.m

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    @cached_property
    def nodes(self) -> np.ndarray:
        """Lattice nodes, shape ``(P^m, m)`` in C order."""
        grids = np.meshgrid(*([self.axis] * self.m), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    @property
    def origin_index(self) -> int:
        return int(np.ravel_multi_index((self.points_per_axis // 2,) * self.m, self.shape))


def axis_kernel(space: TangentialGrid, spread: float, targets=None,
                mode: str = "zero") -> tuple[np.ndarray, bool]:
    """One-axis Gaussian weights ``exp(-(y - eta)^2 / 4s) * dy``.

    Returns a ``(len(targets), P)`` matrix and whether the support radius
    ``6 sqrt(2 s)`` exceeds the half width. Offsets off the lattice are
    dropped (``"zero"``) or folded onto the nearest edge node (``"edge"``).
    """
    P, dy, L = space.points_per_axis, space.spacing, space.half_width
    targets = space.axis if targets is None else np.atleast_1d(np.asarray(targets, dtype=float))
    if spread == 0:
        idx = np.clip(np.rint((targets + L) / dy).astype(int), 0, P - 1)
        K = np.zeros((targets.size, P))
        K[np.arange(targets.size), idx] = 1.0
        return K, False
    if not spread > 0:
        raise DomainError(f"spread must be positive, got {spread}")
    radius = GAUSS_CUTOFF * math.sqrt(2 * spread)
    extra = int(math.ceil(radius / dy)) + 1
    k = np.arange(-extra, P + extra)
    virtual = -L + k * dy
    diff = targets[:, None] - virtual[None, :]
    w = np.exp(-diff * diff / (4 * spread)) * dy
    w[np.abs(diff) > radius] = 0.0
    K = np.zeros((targets.size, P))
    if mode == "edge":
        cols = np.clip(k, 0, P - 1)
        np.add.at(K.T, cols, w.T)
    elif mode == "zero":
        inside = (k >= 0) & (k < P)
        K[:, k[inside]] = w[:, inside]
    else:
        raise DomainError(f"unknown extension mode {mode!r}")
    return K, radius > L


def _apply(K: np.ndarray, values: np.ndarray, m: int) -> np.ndarray:
    """Apply the separable kernel ``K`` along every tangential axis."""
    if m == 1:
        return K @ values
    P = K.shape[1]
    grid = values.reshape(P, P)
    return (K @ grid @ K.T).ravel()


@dataclass(frozen=True)
class LayerConvolution:
    values: np.ndarray
    truncated: bool


def gaussian_layer_convolve(field: np.ndarray, spread: float, space: TangentialGrid,
                            mode: str = "zero") -> LayerConvolution:
    """Trapezoidal ``int exp(-|y - eta|^2 / 4s) field(eta) d eta`` on the lattice.

    ``field`` is given on the lattice (flat or shaped). Contributions from
    outside ``[-L, L]^m`` are zero unless ``mode="edge"``.
    """
    values = np.asarray(field, dtype=float).ravel()
    if values.size != space.points_per_axis**space.m:
        raise DomainError(f"field has {values.size} values, lattice has {space.points_per_axis ** space.m}")
    K, truncated = axis_kernel(space, spread, mode=mode)
    out = _apply(K, values, space.m)
    return LayerConvolution(values=out.reshape(space.shape), truncated=truncated)


def _normalized(K: np.ndarray) -> np.ndarray:
    return K / np.sum(K, axis=1, keepdims=True)


@dataclass(frozen=True)
class SurfaceFluxHistory:
    """Wall flux ``V`` and cumulative flux ``A`` on time x lattice.

    Arrays have shape ``(N + 1, P^m)``; row 0 of ``V`` is ``nan``.
    """

    grid: TimeGrid
    space: TangentialGrid
    V: np.ndarray
    A: np.ndarray
    truncated: bool = False
    warnings: tuple[str, ...] = field(default=())

    @property
    def V_origin(self) -> np.ndarray:
        return self.V[:, self.space.origin_index]

    @property
    def A_origin(self) -> np.ndarray:
        return self.A[:, self.space.origin_index]

    def cumulative_at(self, tau) -> np.ndarray:
        """``A(., tau)`` for an array of times, interpolated in ``sqrt(tau)``."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        if np.any(tau > self.grid.T * (1 + 1e-12)):
            raise DomainError(f"time beyond history horizon {self.grid.T}")
        root = np.sqrt(self.grid.nodes)
        r = np.sqrt(tau)
        j = np.clip(np.searchsorted(root, r, side="right") - 1, 0, self.grid.N - 1)
        theta = ((r - root[j]) / (root[j + 1] - root[j]))[:, None]
        return (1 - theta) * self.A[j] + theta * self.A[j + 1]


def _initial_flux_history(h: InitialProfile, grid: TimeGrid, space: TangentialGrid) -> np.ndarray:
    t = grid.nodes
    M = space.points_per_axis**space.m
    v = np.full((grid.N + 1, M), np.nan)
    if not h.depends_on_y:
        origin = np.zeros((1, space.m))
        for i in range(1, grid.N + 1):
            v[i] = initial_flux_values(origin, t[i], h)[0]
        return v
    for i in range(1, grid.N + 1):
        v[i] = initial_flux_values(space.nodes, t[i], h)
    return v


def solve_flux_nd(F: SourceLaw, h: InitialProfile, grid: TimeGrid,
                  space: TangentialGrid) -> SurfaceFluxHistory:
    """Time-step the tangentially coupled flux equation.

    The scheme is the one-dimensional product rule applied node by node,
    with the source on panel ``j`` replaced by its Gaussian average at the
    panel-midpoint spread ``(i - j + 1/2) dt``. The tangential average uses
    mass-normalized kernels with edge extension, so data independent of
    ``y`` reproduce the one-dimensional scheme exactly.
    """
    N, dt, m = grid.N, grid.dt, space.m
    P = space.points_per_axis
    M = P**m
    v = _initial_flux_history(h, grid, space)
    S, Smean = singular_cumulative(v, grid)
    w = grid.abel_lag_weights / SQRT_PI

    kernels = np.empty((N, P, P))
    truncated = False
    for d in range(N):
        K, trunc = axis_kernel(space, (d + 0.5) * dt, mode="edge")
        kernels[d] = _normalized(K)
        truncated |= trunc
    warnings = ()
    if truncated:
        warnings = (f"Gaussian support exceeds the lattice half width {space.half_width}; "
                    "values near the lattice boundary use edge extension",)

    R = np.zeros((N + 1, M))
    C = np.zeros((N + 1, M))
    A = np.zeros((N + 1, M))
    V = np.full((N + 1, M), np.nan)
    FA = np.zeros((N + 1, M))
    K0 = kernels[0]

    def history(i):
        if i == 1:
            return np.zeros(M)
        Ks = kernels[1:i]
        src = FA[i - 1 : 0 : -1]
        if m == 1:
            conv = np.einsum("dpq,dq->dp", Ks, src)
        else:
            g = src.reshape(i - 1, P, P)
            conv = (Ks @ g @ Ks.transpose(0, 2, 1)).reshape(i - 1, M)
        return w[1:i] @ conv

    def evaluate(i, Ri, hist):
        Ci = C[i - 1] + 0.5 * dt * (R[i - 1] + Ri)
        mean = Smean[i - 1] + C[i - 1] + dt * (2 * R[i - 1] + Ri) / 6.0
        f = F(mean)
        return -hist - w[0] * _apply(K0, f, m), Ci, f

    for i in range(1, N + 1):
        hist = history(i)
        r0 = 2 * R[i - 1] - R[i - 2] if i > 1 else np.zeros(M)
        r1, _, _ = evaluate(i, r0, hist)
        r2, Ci, fi = evaluate(i, r1, hist)
        first = float(np.max(np.abs(r1 - r0)))
        scale = max(float(np.max(np.abs(v[i]))), float(np.max(np.abs(r2))), 1e-300)
        k = 1
        while first > 1e-14 * scale and float(np.max(np.abs(r2 - r1))) > CONTRACTION_LIMIT * first:
            if k >= MAX_PICARD:
                raise StiffnessError("Picard correction failed to contract",
                                     float(np.max(np.abs(r2 - r1))) / first, i)
            r0, r1 = r1, r2
            first = float(np.max(np.abs(r1 - r0)))
            r2, Ci, fi = evaluate(i, r1, hist)
            k += 1
        R[i], C[i], FA[i] = r2, Ci, fi
        V[i] = v[i] + r2
        A[i] = S[i] + Ci

    F.check_lipschitz(A)
    return SurfaceFluxHistory(grid=grid, space=space, V=V, A=A,
                              truncated=truncated, warnings=warnings)


def _point_average(space: TangentialGrid, y: tuple[float, ...], spread: float,
                   values: np.ndarray) -> float:
    """Mass-normalized Gaussian average of lattice values at an arbitrary point."""
    rows = [_normalized(axis_kernel(space, spread, targets=[c], mode="edge")[0])[0] for c in y]
    if space.m == 1:
        return float(rows[0] @ values)
    return float(rows[0] @ values.reshape(space.points_per_axis, -1) @ rows[1])


def reconstruct_temperature_nd(p: SpacePoint, t: float, history: SurfaceFluxHistory,
                               F: SourceLaw, h: InitialProfile, panels: int = 64) -> float:
    """Temperature ``u(x, y, t)`` from the stored wall-flux history.

    ``u = u0 - int_0^t erf(x / 2 sqrt(t - tau)) <F(A(., tau))>_{t - tau}(y) dtau``
    where ``<.>_s`` is the Gaussian average at spread ``s``.
    """
    if p.n != history.space.n:
        raise DomainError(f"point has dimension {p.n}, history has {history.space.n}")
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    if t > history.grid.T * (1 + 1e-12):
        raise DomainError(f"t={t} beyond history horizon {history.grid.T}")
    if p.x == 0:
        return 0.0
    u0 = float(initial_field_values(p.x, np.asarray(p.y).reshape(1, -1), t, h)[0])
    if F.is_zero:
        return u0
    sigma, ws = composite_gauss_legendre([0.0, math.sqrt(t)], panels)
    tau = sigma * sigma
    A = history.cumulative_at(tau)
    kern = erf(p.x / (2.0 * np.sqrt(t - tau)))
    avg = np.array([_point_average(history.space, p.y, t - tk, F(Ak)) for tk, Ak in zip(tau, A)])
    return float(u0 - np.dot(ws, 2.0 * sigma * kern * avg))


def apriori_kernel_bound(history: SurfaceFluxHistory, F: SourceLaw, bound_B: float) -> float:
    """Worst ratio of the discrete memory integrand to ``m(t, tau) = sup|F| / sqrt(pi (t - tau))``.

    The integrand at ``(t_i, tau_j)`` is ``(t_i - tau_j)^(-1/2) / sqrt(pi)``
    times the Gaussian average of ``F(A(., tau_j))`` at spread
    ``t_i - tau_j``; the common singular factor cancels in the ratio.
    """
    A = history.A
    bad = np.argwhere(np.abs(A) > bound_B)
    if bad.size:
        node = tuple(int(k) for k in bad[0])
        raise BoundViolation(
            f"|A| = {abs(A[node]):.6g} exceeds bound {bound_B:.6g} at (time {node[0]}, lattice node {node[1]})",
            node,
        )
    sup = F.sup_abs(bound_B)
    if sup == 0:
        return 0.0
    space, grid = history.space, history.grid
    P, m = space.points_per_axis, space.m
    FA = F(A)  # (N + 1, M)
    worst = float(np.max(np.abs(FA))) / sup
    for d in range(1, grid.N + 1):
        K = _normalized(axis_kernel(space, d * grid.dt, mode="edge")[0])
        src = FA[: grid.N + 1 - d]
        if m == 1:
            avg = src @ K.T
        else:
            g = src.reshape(-1, P, P)
            avg = (K @ g @ K.T).reshape(src.shape[0], -1)
        worst = max(worst, float(np.max(np.abs(avg))) / sup)
    return worst


def bound_integral(t: float, sup_f: float, steps: int = 64) -> float:
    """``int_0^t m(t, tau) d tau`` accumulated from exact Abel panel moments."""
    grid = TimeGrid(t, steps)
    return sup_f / SQRT_PI * math.fsum(grid.abel_weights(grid.N))
