"""Trajectory observables and constant-free checks of the a priori estimates."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, NotApplicableError
from .field import (
    boundary_shell_mass,
    gradient_power_energy,
    integral_power,
    sup_norm,
)

DEFAULT_SLACK = 0.05
KEY_RTOL = 1e-9
TAIL_FRACTION = 0.2
ROUNDOFF = 1e-12


@dataclass
class TimeSeriesRecord:
    t: float
    dt: float
    mass_beta: float
    norm_beta: float
    norm_crit: float
    sup: float
    clipped_mass_cum: float
    boundary_shell_mass: float
    norm_k: dict = field(default_factory=dict)
    grad_energy_k: dict = field(default_factory=dict)


@dataclass
class InvariantReport:
    name: str
    holds: bool
    worst_violation: float
    location_t: float
    K0: float
    tolerance: float = DEFAULT_SLACK
    detail: str = ""

    def to_dict(self):
        return {
            "name": self.name,
            "holds": self.holds,
            "worst_violation": self.worst_violation,
            "location_t": self.location_t,
            "K0": self.K0,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


def _dedupe(ks):
    out = []
    for k in ks:
        k = float(k)
        if not any(math.isclose(k, j, rel_tol=KEY_RTOL) for j in out):
            out.append(k)
    return out


def tracked_exponents(prob, ks=()):
    """β and β+α-1 followed by the caller's extra exponents, without duplicates."""
    return tuple(_dedupe([prob.beta, prob.crit_exponent, *ks]))


def lookup(d, k):
    for key, val in d.items():
        if math.isclose(key, k, rel_tol=KEY_RTOL, abs_tol=1e-12):
            return val
    raise ContractError(f"record has no entry for exponent {k!r}")


def observe(state, ks, prob, dt=0.0):
    f = state.field
    norm_k = {}
    grad = {}
    for k in tracked_exponents(prob, ks):
        norm_k[k] = state.mass_beta if k == prob.beta else integral_power(f, k)
        grad[k] = gradient_power_energy(f, k)
    return TimeSeriesRecord(
        t=state.t,
        dt=dt,
        mass_beta=state.mass_beta,
        norm_beta=state.mass_beta ** (1.0 / prob.beta),
        norm_crit=lookup(norm_k, prob.crit_exponent),
        sup=sup_norm(f),
        clipped_mass_cum=state.clipped_mass_cum,
        boundary_shell_mass=boundary_shell_mass(f),
        norm_k=norm_k,
        grad_energy_k=grad,
    )


def energy_residual(r1, r2, k, prob):
    """Normalized defect of the L^k balance law between two records.

    d/dt ∫u^k + 4(k-1)/k ∫|∇u^{k/2}|^2 + kσ ∫u^β ∫u^{k+α-1} = k ∫u^{k+α-1},
    with the time derivative taken as a difference quotient and every other
    term averaged over the two records.
    """
    dt = r2.t - r1.t
    if not dt > 0:
        raise ContractError("records must be strictly increasing in time")
    kk = k + prob.alpha - 1.0
    dN = (lookup(r2.norm_k, k) - lookup(r1.norm_k, k)) / dt
    coeff = 4.0 * (k - 1.0) / k
    if coeff != 0.0:
        G = 0.5 * (lookup(r1.grad_energy_k, k) + lookup(r2.grad_energy_k, k))
    else:
        G = 0.0
    if prob.reaction_off:
        terms = [dN, coeff * G]
    else:
        Nr = 0.5 * (lookup(r1.norm_k, kk) + lookup(r2.norm_k, kk))
        M = 0.5 * (r1.mass_beta + r2.mass_beta)
        terms = [dN, coeff * G, k * prob.sigma * M * Nr, -k * Nr]
    scale = max(abs(t) for t in terms)
    if scale == 0.0:
        return 0.0
    return abs(sum(terms)) / scale


def _k0(series):
    """max{1, ‖u_0‖_∞, ‖u_0‖_β} from the first record."""
    first = series[0]
    return max(1.0, first.sup, first.norm_beta)


def lbeta_cap_check(series, sigma, beta, u0_mass_beta=None, tol=DEFAULT_SLACK):
    """∫u^β stays below max{∫u_0^β, 1/σ} up to a relative slack ``tol``."""
    if not sigma > 0:
        raise NotApplicableError("the L^beta cap needs sigma > 0")
    if u0_mass_beta is None:
        u0_mass_beta = series[0].mass_beta
    cap = max(u0_mass_beta, 1.0 / sigma)
    excess = np.array([r.mass_beta / cap - 1.0 for r in series])
    i = int(np.argmax(excess))
    worst = float(excess[i])
    return InvariantReport(
        name="lbeta_cap",
        holds=worst <= tol,
        worst_violation=worst,
        location_t=series[i].t,
        K0=_k0(series),
        tolerance=tol,
        detail=f"cap={cap!r}",
    )


def lbeta_decrease_check(series, sigma, tol=ROUNDOFF):
    """Whenever ∫u^β > 1/σ at a record, it is smaller at the next record.

    ``worst_violation`` is the largest relative rise found; by default only
    roundoff is tolerated.
    """
    if not sigma > 0:
        raise NotApplicableError("the L^beta decrease check needs sigma > 0")
    balance = 1.0 / sigma
    worst, where = -math.inf, series[0].t
    for a, b in zip(series, series[1:]):
        if a.mass_beta > balance:
            rise = (b.mass_beta - a.mass_beta) / a.mass_beta
            if rise > worst:
                worst, where = rise, b.t
    if worst == -math.inf:
        worst = 0.0
        detail = "never above the balance level"
    else:
        detail = f"balance={balance!r}"
    return InvariantReport("lbeta_decrease", worst <= tol, worst, where, _k0(series), tol, detail)


def series_columns(series, ks):
    cols = {"sup": [r.sup for r in series], "norm_crit": [r.norm_crit for r in series],
            "mass_beta": [r.mass_beta for r in series]}
    for k in ks:
        cols[f"norm_{float(k)!r}"] = [lookup(r.norm_k, k) for r in series]
    return cols


def uniform_bound_check(series, ks=(), tol=DEFAULT_SLACK, verdict=None):
    """Tracked norms stay bounded and have stopped climbing by the end of the run.

    The run is split at 80% of its final time.  Every tracked norm must be
    finite and its maximum over the trailing window must not exceed its
    maximum over the leading window by more than ``tol``; ∫u^{β+α-1} must in
    addition attain its peak inside the leading window.
    """
    if verdict is not None and getattr(verdict, "kind", verdict) == "BlowUp":
        raise NotApplicableError("uniform bounds are not claimed for a blow-up run")
    t = np.array([r.t for r in series])
    head = t <= (1.0 - TAIL_FRACTION) * t[-1]
    if head.sum() < 1 or head.all():
        raise NotApplicableError("series too short to split into head and tail")
    worst, where, names = -math.inf, t[-1], []
    finite = True
    for name, vals in series_columns(series, ks).items():
        v = np.asarray(vals, dtype=float)
        if not np.all(np.isfinite(v)):
            finite = False
            names.append(f"{name}: non-finite")
            continue
        hmax, tmax = v[head].max(), v[~head].max()
        ref = hmax if hmax > 0 else 1.0
        excess = (tmax - hmax) / ref
        if excess > worst:
            worst, where = float(excess), float(t[~head][np.argmax(v[~head])])
        if name == "norm_crit" and excess > 0:
            names.append("norm_crit peak in trailing window")
    holds = finite and worst <= tol and not names
    return InvariantReport(
        name="uniform_bound",
        holds=holds,
        worst_violation=worst if finite else math.inf,
        location_t=where,
        K0=_k0(series),
        tolerance=tol,
        detail="; ".join(names),
    )
