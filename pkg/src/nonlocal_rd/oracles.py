"""Independent reference solutions used to validate the PDE solver."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .errors import DomainError

ODE_CEILING = 1e10
DEFAULT_T0 = 0.05


def heat_exact(x, t, n, t0=DEFAULT_T0):
    """Shifted heat kernel (4π(t+t0))^{-n/2} exp(-|x|^2 / 4(t+t0)).

    ``x`` is an array whose last axis has length ``n`` (for n = 1 a plain
    array of coordinates is accepted too).
    """
    s = t + t0
    if not s > 0:
        raise DomainError(f"t + t0 must be positive, got {s}")
    x = np.asarray(x, dtype=float)
    r2 = x * x if n == 1 and (x.ndim == 0 or x.shape[-1] != 1) else np.sum(x * x, axis=-1)
    return (4.0 * math.pi * s) ** (-0.5 * n) * np.exp(-r2 / (4.0 * s))


def heat_exact_on(grid, t, t0=DEFAULT_T0):
    """Heat kernel sampled on the nodes of ``grid``."""
    r2 = sum(x * x for x in grid.coords())
    s = t + t0
    return np.broadcast_to((4.0 * math.pi * s) ** (-0.5 * grid.n) * np.exp(-r2 / (4.0 * s)),
                           grid.shape)


def heat_initial_data(n, t0=DEFAULT_T0):
    """The kernel at t = 0 as a Gaussian initial datum."""
    from .field import Gaussian

    return Gaussian((4.0 * math.pi * t0) ** (-0.5 * n), 0.0, math.sqrt(4.0 * t0))


def ode_blowup_time(alpha, u0):
    """Blow-up time u0^{1-α}/(α-1) of u' = u^α (∞ for α = 1)."""
    if u0 <= 0:
        raise DomainError(f"u0 must be positive, got {u0}")
    if alpha == 1:
        return math.inf
    if alpha < 1:
        raise DomainError(f"alpha must be >= 1, got {alpha}")
    return u0 ** (1.0 - alpha) / (alpha - 1.0)


def ode_steady_state(beta, sigma_eff):
    """Positive root σ_eff^{-1/β} of 1 - σ_eff u^β."""
    if not sigma_eff > 0:
        raise DomainError(f"sigma_eff must be positive, got {sigma_eff}")
    return sigma_eff ** (-1.0 / beta)


@dataclass(frozen=True)
class OdeReduction:
    """u' = u^α (1 - σ_eff u^β): the PDE on a periodic box with uniform data.

    σ_eff is σ times the box volume.
    """

    alpha: float
    beta: float
    sigma_eff: float
    u0: float

    def rhs(self, t, u):
        return u**self.alpha * (1.0 - self.sigma_eff * u**self.beta)

    @classmethod
    def for_grid(cls, grid, alpha, beta, sigma, u0):
        return cls(alpha, beta, sigma * grid.volume, u0)


@dataclass
class OdeTrajectory:
    t: np.ndarray
    u: np.ndarray
    blowup: bool
    t_blowup: float
    sol: object

    def __call__(self, t):
        return self.sol(t)[0]


def ode_solve(red, t_end, tol=1e-10):
    """Integrate the reduction with DOP853 until ``t_end`` or blow-up.

    Blow-up is flagged when u crosses ``ODE_CEILING`` or the integrator's
    step collapses; in both cases the partial trajectory is returned.
    """
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")

    def ceiling(t, y):
        return y[0] - ODE_CEILING

    ceiling.terminal = True
    ceiling.direction = 1

    res = solve_ivp(
        lambda t, y: [red.rhs(t, y[0])],
        (0.0, t_end),
        [red.u0],
        method="DOP853",
        # a tenth of tol locally keeps the global error near blow-up within 10 tol
        rtol=max(0.1 * tol, 1e-14),
        atol=tol * 1e-4,
        events=ceiling,
        dense_output=True,
    )
    hit = bool(res.t_events[0].size)
    blowup = hit or res.status == -1
    t_blow = float(res.t_events[0][0]) if hit else (float(res.t[-1]) if blowup else math.inf)
    return OdeTrajectory(t=res.t, u=res.y[0], blowup=blowup, t_blowup=t_blow, sol=res.sol)
