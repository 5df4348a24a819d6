"""Invariant suites behind ``halfspace-heat verify``.

Each check measures one quantity against an independent oracle (adaptive
quadrature, a second solver route or an exact identity) and compares it
with a fixed tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import adomian, specfun
from .greens import GAUSS_CUTOFF, ConstantProfile, GaussianBump, SpacePoint
from .specfun import SQRT_PI
from .volterra1d import (
    SourceLaw,
    TimeGrid,
    flux_from_g,
    residual,
    solve_abel_nonlinear,
    solve_smooth_linear,
    temperature_1d,
)
from .volterrand import (
    TangentialGrid,
    apriori_kernel_bound,
    gaussian_layer_convolve,
    reconstruct_temperature_nd,
    solve_flux_nd,
)


@dataclass(frozen=True)
class Check:
    """One measured invariant. ``at_least`` flips the comparison."""

    suite: str
    name: str
    measured: float
    tolerance: float
    at_least: bool = False

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.measured):
            return False
        if self.at_least:
            return self.measured >= self.tolerance
        return self.measured <= self.tolerance

    def line(self) -> str:
        op = ">=" if self.at_least else "<="
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.suite}/{self.name}  measured={self.measured:.3e}  ({op} {self.tolerance:.3g})"


def _rel(a: float, b: float) -> float:
    return abs(a - b) / abs(b)


def _quad_moment(p: float, t: float) -> float:
    # algebraic weight (t - tau)^(1/2) handled exactly by QUADPACK's qawse
    val, _ = integrate.quad(lambda tau: tau**p, 0.0, t, weight="alg", wvar=(0.0, 0.5),
                            epsabs=0.0, epsrel=1e-13, limit=200)
    return val


def _ones(t):
    return np.ones_like(np.asarray(t, dtype=float))


def _constant_flux(h0: float) -> Callable:
    return lambda t: h0 / np.sqrt(np.pi * t)


# {{{ specfun


def specfun_checks() -> list[Check]:
    s = "specfun"
    out = []
    ts = (0.25, 1.0, 3.0)
    worst_int = max(_rel(specfun.weighted_moment("integer-power", n, t), _quad_moment(3 * (n + 1), t))
                    for n in range(13) for t in ts)
    worst_half = max(_rel(specfun.weighted_moment("half-odd-power", n, t), _quad_moment(1.5 * (2 * n + 1), t))
                     for n in range(13) for t in ts)
    out.append(Check(s, "moment-integer-power", worst_int, 1e-9))
    out.append(Check(s, "moment-half-odd-power", worst_half, 1e-9))

    df = specfun.double_factorial_odd
    base = []
    for t in ts:
        base += [
            _rel(2.0 / 3.0 * t**1.5, _quad_moment(0.0, t)),
            _rel(math.pi / 16 * t**3, _quad_moment(1.5, t)),
            _rel(16 * 6 / df(5) * t**4.5, _quad_moment(3.0, t)),
            _rel(math.pi * df(5) / (2**6 * math.factorial(6)) * t**6, _quad_moment(4.5, t)),
            _rel(2**7 * math.factorial(6) / df(8) * t**7.5, _quad_moment(6.0, t)),
            _rel(math.pi * df(8) / (2**9 * math.factorial(9)) * t**9, _quad_moment(7.5, t)),
        ]
    out.append(Check(s, "moment-base-cases", max(base), 1e-12))

    gam = max(_rel(specfun.gamma_half_integer(n), specfun.gamma_beta(n + 0.5, 1.0)[0]) for n in range(16))
    out.append(Check(s, "gamma-half-integer", gam, 1e-13))
    beta = max(_rel(specfun.gamma_beta(1.5, 3 * n + 4)[1],
                    math.factorial(3 * (n + 1)) * 2 ** (3 * (n + 1) + 1) / df(3 * n + 5))
               for n in range(11))
    out.append(Check(s, "beta-double-factorial", beta, 1e-13))

    x = np.linspace(-6, 6, 1000)
    e = specfun.erf(x)
    odd = float(np.max(np.abs(e + specfun.erf(-x))))
    out.append(Check(s, "erf-odd", odd, 0.0))
    out.append(Check(s, "erf-monotone", float(np.min(np.diff(e))), 0.0, at_least=True))
    q, _ = integrate.quad(lambda u: 2 / SQRT_PI * math.exp(-u * u), 0, 1, epsabs=1e-15)
    out.append(Check(s, "erf-quadrature", abs(specfun.erf(1.0) - q), 1e-12))
    return out


# }}}


# {{{ adomian


def adomian_checks() -> list[Check]:
    s = "adomian"
    out = []
    grid = TimeGrid(1.0, 64)
    res = 0.0
    for lam in (1.0, -1.0):
        res = max(res, residual("smooth", lambda t, lam=lam: adomian.adomian_values(lam, t), grid,
                                c=2 * lam / SQRT_PI, forcing=_ones))
    out.append(Check(s, "series-residual", res, 1e-8))

    rgrid = TimeGrid(1.0, 2000)
    idx = [600, 2000]  # t = 0.3 and t = 1
    worst = 0.0
    for lam in (1.0, -1.0, 2.0):
        for k in range(13):
            y = adomian.recurrence_term_oracle(k, lam, rgrid)
            for i in idx:
                exact = adomian.adomian_term(k, lam, rgrid.nodes[i])
                worst = max(worst, abs(y[i] - exact) / max(1.0, abs(exact)))
    out.append(Check(s, "term-vs-recurrence", worst, 1e-5))

    par = 0.0
    for k in range(1, 16):
        sign = 1.0 if k % 2 == 0 else -1.0
        par = max(par, abs(adomian.adomian_term(k, -1.3, 0.8) - sign * adomian.adomian_term(k, 1.3, 0.8)))
    out.append(Check(s, "parity", par, 1e-15))

    logs = [adomian.log_abs_term(k + 2, 1.0, 1.0) - adomian.log_abs_term(k, 1.0, 1.0) for k in range(30, 41)]
    out.append(Check(s, "ratio-test", float(np.max(np.diff(logs))), 0.0))

    closed = max(abs(adomian.closed_form_solution(lam, 1.0) - adomian.adomian_sum(lam, 1.0)[0])
                 for lam in (1.0, -1.0, 2.0))
    out.append(Check(s, "closed-form-with-factor-2", closed, 1e-9))
    _, W = adomian.series_total_flux(1.0, 1.0, 1e-8)
    out.append(Check(s, "flux-leading-order", abs(W * math.sqrt(math.pi * 1e-8) - 1.0), 1e-4))
    return out


# }}}


# {{{ volterra


def volterra_checks() -> list[Check]:
    s = "volterra"
    out = []
    worst = 0.0
    for N in (16, 256, 4096):
        g = TimeGrid(1.0, N)
        t = g.nodes[1:]
        worst = max(worst, float(np.max(np.abs(np.cumsum(g.abel_lag_weights) - 2 * np.sqrt(t)))))
        worst = max(worst, float(np.max(np.abs(np.cumsum(g.smooth_lag_weights) - 2 / 3 * t**1.5))))
    out.append(Check(s, "grid-weight-sums", worst, 1e-13))

    lam, c = 1.0, 2.0 / SQRT_PI
    ref, _ = adomian.adomian_sum(lam, 1.0)
    errs = [abs(solve_smooth_linear(c, _ones, TimeGrid(1.0, N))[-1] - ref) for N in (512, 1024, 2048, 4096)]
    out.append(Check(s, "smooth-g-accuracy", errs[-1], 5e-4))
    out.append(Check(s, "smooth-g-reduction", min(a / b for a, b in zip(errs, errs[1:])), 3.5, at_least=True))

    grid = TimeGrid(1.0, 4096)
    F = SourceLaw.linear(lam)
    abel = solve_abel_nonlinear(F, _constant_flux(1.0), grid)
    g = solve_smooth_linear(c, _ones, grid)
    route = flux_from_g(g, 1.0, lam, grid)
    window = grid.nodes >= grid.T / 16
    out.append(Check(s, "two-route-flux", float(np.max(np.abs(abel.W - route.W)[window])), 1e-3))
    _, W_ref = adomian.series_total_flux(lam, 1.0, 1.0)
    out.append(Check(s, "abel-vs-series", abs(abel.W[-1] - W_ref), 5e-3))
    U = solve_smooth_linear(c, lambda t: 2 * np.sqrt(t / np.pi), grid)
    out.append(Check(s, "two-route-total-flux", abs(U[-1] - route.U[-1]), 1e-4))

    early = (grid.nodes > 0) & (grid.nodes <= 0.5)
    positive = min(float(np.min(g[early])), float(np.min(U[early])), float(np.min(abel.W[early])))
    out.append(Check(s, "remark-signs", positive, 0.0, at_least=True))
    t1 = grid.nodes[1]
    out.append(Check(s, "wall-flux-singularity", abs(abel.W[1] * math.sqrt(math.pi * t1) - 1.0), 0.05))
    out.append(Check(s, "g-initial-value", abs(g[1] - 1.0), 1e-3))

    h = ConstantProfile(1.0)
    out.append(Check(s, "boundary-zero", abs(temperature_1d(0.0, 0.5, abel, F, h)), 0.0))
    out.append(Check(s, "initial-recovery", abs(temperature_1d(1.0, 1e-3, abel, F, h) - 1.0), 1e-2))
    return out


# }}}


# {{{ nd reduction


def nd_reduction_checks() -> list[Check]:
    s = "nd-reduction"
    out = []
    F = SourceLaw.linear(1.0)
    h = ConstantProfile(1.0)
    grid = TimeGrid(1.0, 256)
    space = TangentialGrid(2, 4.0, 33)
    hist = solve_flux_nd(F, h, grid, space)
    one = solve_abel_nonlinear(F, _constant_flux(1.0), grid)
    window = grid.nodes >= grid.T / 16
    out.append(Check(s, "flux-matches-1d", float(np.max(np.abs(hist.V[window] - one.W[window, None]))), 1e-3))
    spread = float(np.max(np.abs(hist.V[1:] - hist.V_origin[1:, None])))
    out.append(Check(s, "translation-invariance", spread / float(np.max(np.abs(hist.V[1:]))), 1e-6))
    u_nd = reconstruct_temperature_nd(SpacePoint(1.0, (0.0,)), 0.5, hist, F, h)
    u_1d = temperature_1d(1.0, 0.5, one, F, h)
    out.append(Check(s, "temperature-matches-1d", abs(u_nd - u_1d), 2e-3))
    out.append(Check(s, "boundary-zero", abs(reconstruct_temperature_nd(SpacePoint(0.0, (0.3,)), 0.5, hist, F, h)), 0.0))

    free = solve_flux_nd(SourceLaw.zero(), h, TimeGrid(1.0, 32), TangentialGrid(3, 2.0, 5))
    t = free.grid.nodes[1:]
    out.append(Check(s, "no-source-flux", float(np.max(np.abs(free.V[1:] - 1 / np.sqrt(np.pi * t)[:, None]))), 1e-9))

    fine = TangentialGrid(2, 4.0, 81)
    sp = 0.01
    # nodes whose kernel support lies inside the lattice
    inner = np.abs(fine.axis) <= fine.half_width - GAUSS_CUTOFF * math.sqrt(2 * sp)
    mass = gaussian_layer_convolve(np.ones(81), sp, fine).values
    out.append(Check(s, "gaussian-mass-n2", float(np.max(np.abs(mass[inner] - 2 * math.sqrt(math.pi * sp)))), 1e-8))
    fine3 = TangentialGrid(3, 4.0, 81)
    mass3 = gaussian_layer_convolve(np.ones(81 * 81), sp, fine3).values
    out.append(Check(s, "gaussian-mass-n3", float(np.max(np.abs(mass3[np.ix_(inner, inner)] - 4 * math.pi * sp))), 1e-8))
    delta = np.zeros(81)
    delta[40] = 1.0 / fine.spacing
    prof = gaussian_layer_convolve(delta, sp, fine).values
    out.append(Check(s, "impulse-profile", float(np.max(np.abs(prof - np.exp(-fine.axis**2 / (4 * sp))))), 1e-6))

    bump = GaussianBump(1.0, 1.0, 1.0, (0.0,))
    sym = solve_flux_nd(F, bump, TimeGrid(1.0, 64), space)
    V = sym.V[1:].reshape(-1, *space.shape)
    out.append(Check(s, "symmetry", float(np.max(np.abs(V - V[:, ::-1]))), 1e-12))

    bound = float(np.max(np.abs(hist.A))) * (1 + 1e-12)
    out.append(Check(s, "apriori-bound", apriori_kernel_bound(hist, F, bound), 1.01))
    return out


# }}}


SUITES: dict[str, Callable[[], list[Check]]] = {
    "specfun": specfun_checks,
    "adomian": adomian_checks,
    "volterra": volterra_checks,
    "nd-reduction": nd_reduction_checks,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for fn in SUITES.values() for c in fn()]
    return SUITES[name]()
