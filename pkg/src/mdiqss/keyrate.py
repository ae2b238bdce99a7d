"""Asymptotic secure key rate, comparison baselines, sweeps and distance limits."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .decoy import DEFAULT_Q111_CONVENTION, Q111Convention, build_gain_table, estimate_single_photon
from .params import SimParams, channel_transmittance
from .sync import MemoryChannel, SyncModel, memory_fidelity, sync_success

__all__ = [
    "BaselineModel",
    "NoCrossingError",
    "NoKeyAtZeroError",
    "RatePoint",
    "baseline_sync",
    "binary_entropy",
    "key_rate_rhs",
    "max_distance",
    "rate_point",
    "secure_key_rate",
    "sweep_rates",
    "tqm_threshold",
    "wcp_sync",
]


class BaselineModel(enum.Enum):
    QM_HSPS = "qm"
    HSPS_NOQM_NONIDEAL = "hsps-nonideal"
    HSPS_NOQM_IDEAL = "hsps-ideal"
    WCP_NOQM = "wcp"

    @classmethod
    def parse(cls, value) -> BaselineModel:
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for member in cls:
            if text in (member.value, member.name, member.name.lower()):
                return member
        raise ValueError(f"unknown variant {value!r}; choose from {[m.value for m in cls]}")

    @property
    def has_memory(self) -> bool:
        return self is BaselineModel.QM_HSPS


class NoKeyAtZeroError(RuntimeError):
    """No positive key rate even at zero distance."""


class NoCrossingError(RuntimeError):
    """The memory and WCP synchronization curves do not cross for T_QM in (0, 1)."""


def binary_entropy(x: float) -> float:
    """Shannon binary entropy in bits, with 0 log 0 = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary entropy needs x in [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def key_rate_rhs(Q111: float, e111_BZU: float, E_mu: float, Q_mu: float, K: int, f: float) -> float:
    """Right-hand side of the phase-post-selected key-rate bound (may be negative)."""
    return Q111 * (1.0 - binary_entropy(e111_BZU)) / K**2 - binary_entropy(E_mu) * f * Q_mu


def secure_key_rate(Q111: float, e111_BZU: float, E_mu: float, Q_mu: float, K: int, f: float) -> float:
    """Key rate per pulse triple, floored at zero."""
    return max(0.0, key_rate_rhs(Q111, e111_BZU, E_mu, Q_mu, K, f))


def wcp_sync(params: SimParams, L: float) -> float:
    """Three phase-randomized WCP arms each delivering one photon in the same slot."""
    per_arm = params.mu_wcp * math.exp(-params.mu_wcp) * channel_transmittance(params.alpha, L)
    return per_arm**3


def baseline_sync(variant, params: SimParams, L: float) -> float:
    """Three-photon synchronization probability of each protocol variant at arm length ``L``.

    The ideal heralded-source curve assumes perfect synchronization, so its
    value is 1; fiber loss for that variant enters through the per-arm
    efficiency instead (see :func:`arm_efficiency`).
    """
    variant = BaselineModel.parse(variant)
    if variant is BaselineModel.QM_HSPS:
        return float(sync_success(3, SyncModel.from_params(params, L_km=L)))
    if variant is BaselineModel.HSPS_NOQM_NONIDEAL:
        return float(sync_success(3, SyncModel.from_params(params, L_km=L, N=1, T_QM=1.0)))
    if variant is BaselineModel.HSPS_NOQM_IDEAL:
        return 1.0
    return wcp_sync(params, L)


def arm_efficiency(variant, params: SimParams, L: float, Ps3: float | None = None) -> float:
    variant = BaselineModel.parse(variant)
    if Ps3 is None:
        Ps3 = baseline_sync(variant, params, L)
    eta = float(params.eta_d * Ps3 ** (1.0 / 3.0))
    if variant is BaselineModel.HSPS_NOQM_IDEAL:
        eta *= channel_transmittance(params.alpha, L)
    return eta


def storage_fidelity(variant, params: SimParams) -> float:
    if BaselineModel.parse(variant).has_memory:
        return memory_fidelity(MemoryChannel(params.e_q, params.e_b))
    return 1.0


@dataclass(frozen=True)
class RatePoint:
    L_km: float
    variant: BaselineModel
    Ps3: float
    eta: float
    Q_X_mu: float
    E_X_mu: float
    Y111_XL: float
    Q111_XL: float
    e111_BZU: float
    R_raw: float
    R: float
    R_bits_per_s: float
    estimates_valid: bool


def rate_point(
    params: SimParams,
    L: float | None = None,
    variant=BaselineModel.QM_HSPS,
    convention=DEFAULT_Q111_CONVENTION,
) -> RatePoint:
    """Full pipeline at one arm length: synchronization, gains, decoy bounds, key rate."""
    variant = BaselineModel.parse(variant)
    convention = Q111Convention.parse(convention)
    L = params.L_km if L is None else L
    Ps3 = baseline_sync(variant, params, L)
    eta = arm_efficiency(variant, params, L, Ps3)
    table = build_gain_table(params, Ps3, storage_fidelity(variant, params), eta=eta)
    est = estimate_single_photon(table, convention)
    Q_mu, E_mu = table.Q("mmm"), table.E("mmm")
    raw = key_rate_rhs(est.Q111_XL, est.e111_BZU, E_mu, Q_mu, params.K, params.f_ec)
    R = max(0.0, raw)
    return RatePoint(
        L_km=L,
        variant=variant,
        Ps3=Ps3,
        eta=eta,
        Q_X_mu=Q_mu,
        E_X_mu=E_mu,
        Y111_XL=est.Y111_XL,
        Q111_XL=est.Q111_XL,
        e111_BZU=est.e111_BZU,
        R_raw=raw,
        R=R,
        R_bits_per_s=R * params.rep_rate_hz,
        estimates_valid=est.valid,
    )


def sweep_rates(params: SimParams, Ls, variant=BaselineModel.QM_HSPS, convention=DEFAULT_Q111_CONVENTION, workers: int = 1):
    """Rate points ordered by ``Ls`` regardless of evaluation order."""
    Ls = list(Ls)
    fn = lambda L: rate_point(params, L, variant, convention)  # noqa: E731
    if workers <= 1:
        return [fn(L) for L in Ls]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, Ls))


def max_distance(
    params: SimParams,
    variant=BaselineModel.QM_HSPS,
    convention=DEFAULT_Q111_CONVENTION,
    step: float = 1.0,
    resolution: float = 0.1,
    L_stop: float = 1000.0,
) -> float:
    """Largest arm length with a positive key rate.

    A grid scan from 0 km in ``step`` increments brackets the first
    non-positive point; bisection then narrows the bracket to ``resolution``
    and its lower (still positive) end is returned.

    Raises:
        NoKeyAtZeroError: if the rate is not positive at L = 0.
    """
    positive = lambda L: rate_point(params, L, variant, convention).R_raw > 0  # noqa: E731
    if not positive(0.0):
        raise NoKeyAtZeroError(f"no positive key rate at L=0 for {BaselineModel.parse(variant).value}")
    lo = 0.0
    hi = None
    for L in np.arange(step, L_stop + step / 2, step):
        if positive(float(L)):
            lo = float(L)
        else:
            hi = float(L)
            break
    if hi is None:
        return lo
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo


def tqm_threshold(params: SimParams, L_ref: float = 200.0, xtol: float = 1e-4) -> float:
    """Memory efficiency below which memory-assisted synchronization loses to WCP.

    Raises:
        NoCrossingError: when the two curves do not cross inside (0, 1).
    """
    target = wcp_sync(params, L_ref)

    def gap(t: float) -> float:
        return sync_success(3, SyncModel.from_params(params, L_km=L_ref, T_QM=t)) - target

    lo, hi = 1e-6, 1.0
    g_lo, g_hi = gap(lo), gap(hi)
    if not (g_lo < 0 < g_hi):
        raise NoCrossingError(
            f"no crossing of memory and WCP synchronization in (0, 1) at L={L_ref} km "
            f"(gap at T_QM->0: {g_lo:.3e}, at T_QM=1: {g_hi:.3e})"
        )
    return float(optimize.bisect(gap, lo, hi, xtol=xtol))
