"""Exponent calculus for u_t - Δu = u^α (1 - σ ∫ u^β dx).

Every exponent appearing in the global-existence argument is evaluated here,
together with the flags that decide whether the argument closes.  Infinite
Sobolev exponents (n = 1) are handled by taking limits, never by plugging in
a large number.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    DomainError,
    InvalidParameterError,
    OutOfModelError,
    PreconditionError,
)

INF = math.inf
THRESHOLD_ATOL = 1e-12


def _recip(p):
    return 0.0 if math.isinf(p) else 1.0 / p


def _critical_shift(alpha, p):
    """p(α-1)/(p-2), with the p -> ∞ limit α - 1."""
    if math.isinf(p):
        return alpha - 1.0
    return p * (alpha - 1.0) / (p - 2.0)


def _low_k_bound(alpha, p):
    """2(α-1)/(p-2), with the p -> ∞ limit 0."""
    if math.isinf(p):
        return 0.0
    return 2.0 * (alpha - 1.0) / (p - 2.0)


def sobolev_exponent(n, p2=None):
    """Sobolev embedding exponent for H^1(R^n).

    Returns 2n/(n-2) for n >= 3 and ``inf`` for n = 1.  In two dimensions any
    finite p > 2 is admissible; the caller's ``p2`` is returned if given,
    otherwise ``None`` marks the exponent as free in (2, ∞).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"dimension must be an integer >= 1, got {n!r}")
    n = int(n)
    if n == 1:
        return INF
    if n == 2:
        if p2 is None:
            return None
        if not (2.0 < p2 < INF):
            raise InvalidParameterError(f"n=2 requires 2 < p < inf, got p={p2!r}")
        return float(p2)
    return 2.0 * n / (n - 2.0)


def existence_threshold(beta, p):
    """1 + (1 - 2/p) β."""
    return 1.0 + (1.0 - 2.0 * _recip(p)) * beta


@dataclass(frozen=True)
class RegimeReport:
    n: int
    alpha: float
    beta: float
    p: float
    threshold: float
    covered: bool
    fujita_exponent: float
    p_attained: bool = True

    def to_dict(self):
        d = asdict(self)
        if math.isinf(d["p"]):
            d["p"] = "inf"
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d["p"] == "inf":
            d["p"] = INF
        return cls(**d)


def _check_model(alpha, beta):
    if alpha < 1:
        raise OutOfModelError(f"alpha={alpha} < 1; the model assumes alpha, beta >= 1")
    if beta < 1:
        raise OutOfModelError(f"beta={beta} < 1; the model assumes alpha, beta >= 1")


def classify(n, alpha, beta, p2=None):
    """Place (n, α, β) relative to the global-existence threshold.

    For n = 2 without ``p2`` the supremal threshold 1 + β is reported with
    ``p_attained=False``: α < 1 + (1 - 2/p)β for some finite p iff α < 1 + β.
    The boundary α = threshold is not covered.
    """
    _check_model(alpha, beta)
    p = sobolev_exponent(n, p2)
    attained = True
    if p is None:
        p, attained = INF, False
    threshold = existence_threshold(beta, p)
    covered = alpha < threshold - THRESHOLD_ATOL
    return RegimeReport(
        n=int(n),
        alpha=float(alpha),
        beta=float(beta),
        p=p,
        threshold=threshold,
        covered=covered,
        fujita_exponent=1.0 + 2.0 / n,
        p_attained=attained,
    )


@dataclass(frozen=True)
class InterpolationExponents:
    r: float
    q: float
    p: float
    lam: float
    gamma: float
    valid: bool


def interpolation_exponents(r, q, p):
    """λ and γ of the Hölder-Sobolev-Young interpolation of ‖v‖_q^q.

    ``valid`` is the condition λq < 2 under which Young's inequality closes;
    when it fails γ is reported as NaN rather than raising.
    """
    if not (1.0 <= r < q < p):
        raise DomainError(f"need 1 <= r < q < p, got r={r}, q={q}, p={p}")
    lam = (1.0 / r - 1.0 / q) / (1.0 / r - _recip(p))
    valid = lam * q < 2.0
    gamma = 2.0 * (1.0 - lam) * q / (2.0 - lam * q) if valid else math.nan
    return InterpolationExponents(r=r, q=q, p=p, lam=lam, gamma=gamma, valid=valid)


def midpoint_exponent(k, alpha, beta):
    """(k + α - 1 + β)/2: the k' of the a priori step and the k_1 of the L^k step."""
    return 0.5 * (k + alpha - 1.0 + beta)


@dataclass(frozen=True)
class HolderExponents:
    k: float
    k_prime: float
    theta: float
    lam: float
    b: float
    ratio: float
    small_exponent: bool
    valid: bool
    feasible: bool
    # 1 - θ - θβ/(k+α-1); vanishes for the midpoint k'
    midpoint_defect: float


def holder_exponents(k, alpha, beta, p):
    """Exponents of the a priori L^k step with k' at the midpoint.

    ``ratio`` is bθ/(k+α-1); the nonlocal term absorbs the interpolation
    remainder iff it is < 1.  ``valid`` records λq < 2 (otherwise b is not
    a Young exponent and ``small_exponent`` is False).  ``feasible`` records
    k' > p(α-1)/(p-2), which is reported, not enforced.
    """
    _check_model(alpha, beta)
    lower = max(_low_k_bound(alpha, p), 1.0)
    if not k > lower:
        raise PreconditionError(
            f"k={k} must exceed max(2(alpha-1)/(p-2), 1) = {lower}"
        )
    big = k + alpha - 1.0
    if not big > beta:
        raise PreconditionError(
            f"k'=(k+alpha-1+beta)/2 must lie in (beta, k+alpha-1); "
            f"k+alpha-1={big} <= beta={beta}"
        )
    kp = midpoint_exponent(k, alpha, beta)
    # (1/β - 1/k')/(1/β - 1/K) with the reciprocals cleared
    theta = (kp - beta) * big / ((big - beta) * kp)
    lam = (k / (2.0 * kp) - k / (2.0 * big)) / (k / (2.0 * kp) - _recip(p))
    denom = 1.0 - lam * big / k
    valid = denom > 0.0
    b = (1.0 - lam) * big / denom if valid else INF
    ratio = b * theta / big
    small = valid and ratio < 1.0 - THRESHOLD_ATOL
    feasible = kp > max(_critical_shift(alpha, p), 1.0)
    return HolderExponents(
        k=k, k_prime=kp, theta=theta, lam=lam, b=b, ratio=ratio,
        small_exponent=small, valid=valid, feasible=feasible,
        midpoint_defect=1.0 - theta - theta * beta / big,
    )


@dataclass(frozen=True)
class MoserExponents:
    k_index: int
    q_k: float
    q_km1: float
    gamma1: float
    gamma2: float
    delta1: float
    d0: float
    gamma1_ok: bool
    gamma2_ok: bool


def moser_exponents(k_index, alpha, beta, p):
    _check_model(alpha, beta)
    if int(k_index) != k_index or k_index < 1:
        raise DomainError(f"k_index must be an integer >= 1, got {k_index!r}")
    k_index = int(k_index)
    base = beta + alpha - 1.0
    q_k = 2.0 ** k_index + base
    q_km1 = 0.5 * (q_k + base)
    gap = q_k + alpha - 1.0 - q_km1
    denom = q_km1 - _critical_shift(alpha, p)
    gamma1 = 1.0 + gap / denom if denom > 0.0 else INF
    gamma2 = q_k / q_km1
    delta1 = (q_k - 2.0 * q_km1 * _recip(p)) / gap
    d0 = delta1 / (delta1 - 1.0) if delta1 > 1.0 else INF
    return MoserExponents(
        k_index=k_index, q_k=q_k, q_km1=q_km1,
        gamma1=gamma1, gamma2=gamma2, delta1=delta1, d0=d0,
        gamma1_ok=gamma1 <= 2.0 + THRESHOLD_ATOL,
        gamma2_ok=gamma2 < 2.0,
    )


@dataclass
class SweepReport:
    samples: int
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.counterexamples


def sweep_equivalence(
    n_values=(1, 3, 4, 5, 10),
    alpha_range=(1.0, 4.0),
    beta_range=(1.0, 4.0),
    samples=10_000,
    k_span=10.0,
    max_k_index=12,
    seed=0,
):
    """Random sweep of both iff-statements tying exponents to the threshold.

    For each admissible (n, α, β, k) sample checks
    small_exponent <=> α < threshold and gamma1_ok <=> α <= threshold,
    collecting every disagreement with its full exponent dump.
    """
    rng = np.random.default_rng(seed)
    report = SweepReport(samples=int(samples))
    for _ in range(int(samples)):
        n = int(rng.choice(n_values))
        alpha = float(rng.uniform(*alpha_range))
        beta = float(rng.uniform(*beta_range))
        p = sobolev_exponent(n)
        lower = max(_low_k_bound(alpha, p), 1.0, beta - alpha + 1.0)
        k = lower + float(rng.uniform(0.0, k_span)) + 1e-9
        k_index = int(rng.integers(1, max_k_index + 1))
        thr = existence_threshold(beta, p)
        he = holder_exponents(k, alpha, beta, p)
        me = moser_exponents(k_index, alpha, beta, p)
        if he.small_exponent != (alpha < thr) or me.gamma1_ok != (alpha <= thr):
            report.counterexamples.append(
                {"n": n, "alpha": alpha, "beta": beta, "k": k, "p": p,
                 "threshold": thr, "holder": asdict(he), "moser": asdict(me)}
            )
    return report
