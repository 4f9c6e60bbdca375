"""IMEX time stepping with adaptive step control and blow-up detection.

One step freezes the nonlocal integral M = ∫u^β at the start of the step,
advances the reaction explicitly and the diffusion with backward Euler:

    u* = u + dt u^α (1 - σ M),    (I - dt Δ_h) u_new = u*,

then clips negative values to zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import fft
from scipy.linalg import solve_banded

from .errors import InvalidParameterError, NumericOverflow, SolverError
from .field import Field, Grid, integral_power, laplacian, make_field, pairwise_sum, sup_norm
from . import monitors

MAX_HALVINGS = 40


@dataclass(frozen=True)
class ProblemSpec:
    alpha: float
    beta: float
    sigma: float
    grid: Grid
    init: object
    # test hook: drop the reaction term entirely (pure heat equation)
    reaction_off: bool = False

    def __post_init__(self):
        if self.alpha < 1 or self.beta < 1:
            raise InvalidParameterError("alpha, beta >= 1 required")
        if self.sigma < 0:
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma}")

    @property
    def n(self):
        return self.grid.n

    @property
    def crit_exponent(self):
        return self.beta + self.alpha - 1.0


@dataclass(frozen=True)
class StepControls:
    t_end: float
    dt_init: float = 1e-3
    dt_min: float = 1e-9
    dt_max: float = 0.05
    growth_cap: float = 2.0
    u_max: float = 1e8
    linear_tol: float = 1e-10
    observe_every: int = 1
    safety: float = 0.2
    # test hook: take every step with exactly this dt, no adaptivity
    fixed_dt: float | None = None

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_init <= self.dt_max):
            raise InvalidParameterError(
                f"need 0 < dt_min <= dt_init <= dt_max, got "
                f"{self.dt_min}, {self.dt_init}, {self.dt_max}"
            )
        if not self.t_end > 0:
            raise InvalidParameterError(f"t_end must be positive, got {self.t_end}")
        if self.observe_every < 1:
            raise InvalidParameterError("observe_every must be >= 1")


@dataclass(frozen=True)
class State:
    field: Field
    t: float
    mass_beta: float
    clipped_mass_cum: float = 0.0

    @classmethod
    def initial(cls, prob):
        f = make_field(prob.grid, prob.init)
        return cls(f, 0.0, integral_power(f, prob.beta), 0.0)


class Trigger(str, Enum):
    CEILING_HIT = "CeilingHit"
    DT_UNDERFLOW = "DtUnderflow"


@dataclass
class Global:
    sup_over_time: float
    final_norms: dict

    kind = "Global"


@dataclass
class BlowUp:
    t_detect: float
    trigger: Trigger
    evidence: dict = field(default_factory=dict)

    kind = "BlowUp"


@dataclass
class Inconclusive:
    reason: str

    kind = "Inconclusive"


def verdict_to_dict(v):
    if isinstance(v, Global):
        return {"kind": v.kind, "sup_over_time": v.sup_over_time, "final_norms": v.final_norms}
    if isinstance(v, BlowUp):
        return {"kind": v.kind, "t_detect": v.t_detect, "trigger": v.trigger.value,
                "evidence": v.evidence}
    return {"kind": v.kind, "reason": v.reason}


def verdict_from_dict(d):
    kind = d["kind"]
    if kind == "Global":
        return Global(d["sup_over_time"], dict(d["final_norms"]))
    if kind == "BlowUp":
        return BlowUp(d["t_detect"], Trigger(d["trigger"]), dict(d.get("evidence", {})))
    return Inconclusive(d["reason"])


@dataclass
class RunOutcome:
    verdict: object
    series: list
    final_state: State
    steps: int = 0
    rejected: int = 0


class DiffusionSolver:
    """Solves (I - dt Δ_h) u = rhs on a fixed grid.

    1-D Dirichlet grids use banded elimination; everything else is
    diagonalised exactly (DST-I on the Dirichlet interior, FFT when periodic).
    """

    def __init__(self, grid):
        self.grid = grid
        h2 = grid.h**2
        if grid.periodic:
            N = grid.points_per_axis
            j = np.arange(N)
            ev = (4.0 / h2) * np.sin(np.pi * j / N) ** 2
            self._axis_eigs = [ev] * (grid.n - 1) + [ev[: N // 2 + 1]]
        else:
            N = grid.m - 2
            j = np.arange(1, N + 1)
            ev = (4.0 / h2) * np.sin(np.pi * j / (2.0 * (N + 1))) ** 2
            self._axis_eigs = [ev] * grid.n
        eig = np.zeros(())
        for ev in self._axis_eigs:
            eig = np.add.outer(eig, ev)
        self._eig = eig  # eigenvalues of -Δ_h

    def solve(self, rhs, dt):
        g = self.grid
        if g.periodic:
            spec = fft.rfftn(rhs)
            return fft.irfftn(spec / (1.0 + dt * self._eig), s=rhs.shape)
        out = np.zeros_like(rhs)
        inner = tuple([slice(1, -1)] * g.n)
        b = rhs[inner]
        if g.n == 1:
            r = dt / g.h**2
            N = b.size
            ab = np.empty((3, N))
            ab[0, :] = -r
            ab[1, :] = 1.0 + 2.0 * r
            ab[2, :] = -r
            out[inner] = solve_banded((1, 1), ab, b, check_finite=False)
        else:
            spec = fft.dstn(b, type=1)
            out[inner] = fft.idstn(spec / (1.0 + dt * self._eig), type=1)
        return out


def reaction(u, state, prob):
    if prob.reaction_off:
        return np.zeros_like(u)
    coeff = 1.0 - prob.sigma * state.mass_beta
    return (u if prob.alpha == 1 else np.power(u, prob.alpha)) * coeff


def imex_step(state, dt, prob, linear_tol=1e-10, solver=None):
    """Advance ``state`` by one IMEX step of size ``dt``."""
    if not dt > 0:
        raise InvalidParameterError(f"dt must be positive, got {dt}")
    grid = prob.grid
    solver = solver or DiffusionSolver(grid)
    u = state.field.values
    with np.errstate(over="ignore", invalid="ignore"):
        ustar = u + dt * reaction(u, state, prob)
    if not np.all(np.isfinite(ustar)):
        raise NumericOverflow("non-finite value after reaction substep")
    unew = solver.solve(ustar, dt)
    resid = unew - dt * laplacian(unew, grid) - ustar
    scale = max(float(np.max(np.abs(ustar))), 1e-300)
    rel = float(np.max(np.abs(resid))) / scale
    if not rel <= linear_tol:
        raise SolverError(f"linear solve residual {rel:.3e} exceeds {linear_tol:.1e}",
                          residual=rel)
    if not np.all(np.isfinite(unew)):
        raise NumericOverflow("non-finite value after diffusion substep")
    neg = np.minimum(unew, 0.0)
    clipped = -pairwise_sum(grid.weights * neg)
    unew = np.maximum(unew, 0.0)
    f = Field(grid, unew, check=False)
    return State(f, state.t + dt, integral_power(f, prob.beta),
                 state.clipped_mass_cum + clipped)


def reaction_rate(state, prob):
    """‖u‖_∞^{α-1} max(1, |1 - σM|): the explicit reaction's stiffness scale."""
    top = sup_norm(state.field)
    if prob.reaction_off or top == 0.0:
        return 0.0
    return top ** (prob.alpha - 1.0) * max(1.0, abs(1.0 - prob.sigma * state.mass_beta))


def select_dt(state, prev_dt, controls, prob):
    if controls.fixed_dt is not None:
        return controls.fixed_dt
    dt = min(controls.dt_max, 1.5 * prev_dt)
    lam = reaction_rate(state, prob)
    if lam > 0:
        dt = min(dt, controls.safety / lam)
    return max(dt, controls.dt_min)


def blowup_check(state, controls, dt, growth_violated=False):
    """CeilingHit if ‖u‖_∞ > u_max; DtUnderflow if pinned at dt_min and still too fast."""
    if sup_norm(state.field) > controls.u_max:
        return Trigger.CEILING_HIT
    if growth_violated and dt <= controls.dt_min:
        return Trigger.DT_UNDERFLOW
    return None


def _growth(old, new):
    a, b = sup_norm(old.field), sup_norm(new.field)
    if a == 0.0:
        return 1.0 if b == 0.0 else math.inf
    return b / a


def advance(prob, controls, ks=(), observer=None):
    """Integrate to ``controls.t_end`` or until blow-up is detected.

    Steps whose sup-norm amplification exceeds ``growth_cap`` are retried
    with half the step.  Records are taken at t = 0, every
    ``observe_every`` accepted steps, and at the final state.
    """
    ks = monitors.tracked_exponents(prob, ks)
    state = State.initial(prob)
    if sup_norm(state.field) >= controls.u_max:
        raise InvalidParameterError("u_max must exceed the sup of the initial data")
    solver = DiffusionSolver(prob.grid)
    series = []

    def record(s, dt):
        rec = monitors.observe(s, ks, prob, dt=dt)
        series.append(rec)
        if observer is not None:
            observer(s, rec)

    record(state, 0.0)
    sup_max = sup_norm(state.field)
    dt_prev = controls.dt_init
    steps = rejected = 0
    since_obs = 0
    verdict = None
    t_end = controls.t_end
    while state.t < t_end:
        dt = select_dt(state, dt_prev, controls, prob)
        if controls.fixed_dt is None and steps == 0:
            dt = min(dt, controls.dt_init)
        # absorb a roundoff-sized remainder instead of leaving a sliver step
        last_step = t_end - state.t <= dt * (1 + 1e-6)
        if last_step:
            dt = t_end - state.t
        new = None
        for _ in range(MAX_HALVINGS + 1):
            try:
                trial = imex_step(state, dt, prob, controls.linear_tol, solver)
            except NumericOverflow as exc:
                verdict = BlowUp(state.t, Trigger.CEILING_HIT, {"overflow": str(exc)})
                break
            except SolverError as exc:
                verdict = Inconclusive(f"linear solver failure: {exc}")
                break
            growth = _growth(state, trial)
            if growth <= controls.growth_cap or controls.fixed_dt is not None:
                new = trial
                break
            rejected += 1
            if blowup_check(state, controls, dt, growth_violated=True):
                verdict = BlowUp(state.t, Trigger.DT_UNDERFLOW,
                                 {"dt": dt, "growth": growth, "sup": sup_norm(state.field)})
                break
            dt = max(0.5 * dt, controls.dt_min)
            last_step = False
        else:
            verdict = Inconclusive(f"step rejected {MAX_HALVINGS} times at t={state.t!r}")
        if verdict is not None:
            break
        if last_step:
            new = replace(new, t=t_end)
        state = new
        steps += 1
        since_obs += 1
        dt_prev = dt if not last_step else max(dt_prev, dt)
        sup_max = max(sup_max, sup_norm(state.field))
        trig = blowup_check(state, controls, dt)
        if trig is not None:
            record(state, dt)
            verdict = BlowUp(state.t, trig, {"sup": sup_norm(state.field), "dt": dt})
            break
        if since_obs >= controls.observe_every or state.t >= t_end:
            record(state, dt)
            since_obs = 0
    if verdict is None:
        last = series[-1]
        norms = {"mass_beta": last.mass_beta, "norm_crit": last.norm_crit, "sup": last.sup}
        norms.update({f"norm_{k!r}": v for k, v in last.norm_k.items()})
        verdict = Global(sup_max, norms)
    return RunOutcome(verdict, series, state, steps, rejected)


def with_reaction_off(prob):
    return replace(prob, reaction_off=True)
