from __future__ import annotations

import mpmath
import numpy as np
import pytest

from halfspace_heat.specfun import SQRT_PI
from halfspace_heat.volterra1d import SourceLaw, TimeGrid, flux_from_g, solve_abel_nonlinear, solve_smooth_linear


def mittag_leffler_g(lam: float, t: float) -> float:
    """``E_{3/2}(-lam t^{3/2})`` summed in extended precision."""
    with mpmath.workdps(40):
        z = -mpmath.mpf(lam) * mpmath.mpf(t) ** 1.5
        return float(mpmath.nsum(lambda k: z**k / mpmath.gamma(1.5 * k + 1), [0, mpmath.inf]))


def mittag_leffler_flux(lam: float, h0: float, t: float) -> tuple[float, float]:
    """``(U, W)`` from the same extended-precision series, integrated termwise."""
    with mpmath.workdps(40):
        t = mpmath.mpf(t)
        U = mpmath.nsum(lambda k: (-lam) ** k * t ** (1.5 * k + 0.5) / mpmath.gamma(1.5 * k + 1.5), [0, mpmath.inf])
        W = mpmath.nsum(lambda k: (-lam) ** k * t ** (1.5 * k - 0.5) / mpmath.gamma(1.5 * k + 0.5), [0, mpmath.inf])
        return float(h0 * U), float(h0 * W)


def ones(t):
    return np.ones_like(np.asarray(t, dtype=float))


def constant_flux(h0: float = 1.0):
    return lambda t: h0 / np.sqrt(np.pi * t)


@pytest.fixture(scope="session")
def fine_grid() -> TimeGrid:
    return TimeGrid(1.0, 4096)


@pytest.fixture(scope="session")
def abel_trace(fine_grid):
    return solve_abel_nonlinear(SourceLaw.linear(1.0), constant_flux(1.0), fine_grid)


@pytest.fixture(scope="session")
def g_trace(fine_grid):
    return solve_smooth_linear(2.0 / SQRT_PI, ones, fine_grid)


@pytest.fixture(scope="session")
def g_route(fine_grid, g_trace):
    return flux_from_g(g_trace, 1.0, 1.0, fine_grid)
