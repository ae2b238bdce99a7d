"""Memory-assisted synchronization of heralded single-photon sources.

Each user's source is pumped once per time slot. A herald sends the signal
pulse through the fiber into a storage loop, replacing whatever the loop
held. Readout happens in the slot where the last of the ``M`` sources
heralds for the first time, and succeeds when every loop then holds exactly
one photon. A photon that entered in slot ``j'`` and is read in slot ``j``
has made ``j - j' + 1`` round trips.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .params import SimParams
from .sources import (
    herald_click_prob,
    herald_prob_per_slot,
    herald_prob_within,
    thermal_pmf,
    truncation_order,
)

__all__ = [
    "MemoryChannel",
    "SyncModel",
    "first_herald_single",
    "memory_fidelity",
    "per_arm_efficiency",
    "repeat_herald_single",
    "sync_success",
    "sync_success_three",
    "transit_survival",
]


def transit_survival(k_prime: int, k: int, j: int, j_prime: int, T_c: float, T_QM: float) -> float:
    """Probability that exactly ``k_prime`` of ``k`` photons survive fiber and storage."""
    if not (0 <= k_prime <= k):
        raise ValueError(f"need 0 <= k' <= k, got k'={k_prime}, k={k}")
    if not (1 <= j_prime <= j):
        raise ValueError(f"need 1 <= j' <= j, got j'={j_prime}, j={j}")
    s = T_c * T_QM ** (j - j_prime + 1)
    return math.comb(k, k_prime) * s**k_prime * (1.0 - s) ** (k - k_prime)


@dataclass(frozen=True)
class SyncModel:
    P_h1: float
    T_c: float
    T_QM: float
    N: int
    mu: float
    eta_D: float

    def __post_init__(self):
        for name in ("P_h1", "T_c", "T_QM", "eta_D"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")

    @classmethod
    def build(cls, mu: float, eta_D: float, T_c: float, T_QM: float, N: int) -> SyncModel:
        return cls(herald_prob_per_slot(mu, eta_D), T_c, T_QM, N, mu, eta_D)

    @classmethod
    def from_params(cls, params: SimParams, L_km: float | None = None, **overrides) -> SyncModel:
        """Model for one arm of length ``L_km`` (default ``params.L_km``)."""
        if L_km is not None:
            params = params.with_(L_km=L_km)
        if overrides:
            params = params.with_(**overrides)
        return cls.build(params.mu_src, params.eta_D, params.T_c, params.T_QM, params.N)

    @cached_property
    def _single_photon_weights(self) -> np.ndarray:
        """``S[d] = sum_k P(k) P_d(k) P_t(1|k, j, j-d)`` for storage offsets d = 0..N-1."""
        if self.mu == 0:
            return np.zeros(self.N)
        k = np.arange(1, truncation_order(self.mu) + 1, dtype=float)
        w = thermal_pmf(self.mu, k) * herald_click_prob(k, self.eta_D)
        d = np.arange(self.N, dtype=float)
        s = self.T_c * self.T_QM ** (d + 1.0)
        # k s (1-s)^(k-1); 0**0 must be 1 when s == 1 and k == 1.
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = np.where(k[None, :] == 1, 1.0, (1.0 - s[:, None]) ** (k[None, :] - 1))
        return (k[None, :] * s[:, None] * tail) @ w

    def herald_within(self, j: int) -> float:
        return herald_prob_within(j, self.P_h1)

    def first(self, j: int) -> float:
        self._check_slot(j)
        return (1.0 - self.herald_within(j - 1)) * self._single_photon_weights[0]

    def repeat(self, j: int) -> float:
        self._check_slot(j)
        S = self._single_photon_weights
        total = 0.0
        for jp in range(1, j):
            total += (1.0 - self.herald_within(j - 1 - jp)) * S[j - jp] * (1.0 - self.P_h1)
        return total + self.herald_within(j - 1) * S[0]

    def _check_slot(self, j: int):
        if not 1 <= j <= self.N:
            raise ValueError(f"slot j must lie in [1, {self.N}], got {j}")

    def success(self, M: int = 3) -> float:
        return sync_success(M, self)


def first_herald_single(j: int, model: SyncModel) -> float:
    """First herald in slot ``j`` delivering exactly one photon to the loop."""
    return model.first(j)


def repeat_herald_single(j: int, model: SyncModel) -> float:
    """Earlier herald(s), and the latest one leaves exactly one photon at slot ``j``."""
    return model.repeat(j)


def sync_success(M: int, model: SyncModel) -> float:
    """Probability that all ``M`` loops hold one photon at the common readout slot."""
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    total = model.first(1) ** M
    for j in range(2, model.N + 1):
        l, e = model.first(j), model.repeat(j)
        total += sum(math.comb(M, q) * l**q * e ** (M - q) for q in range(1, M + 1))
    return total


def sync_success_three(model: SyncModel) -> float:
    """Three-source success probability written out term by term."""
    total = model.first(1) ** 3
    for j in range(2, model.N + 1):
        l, e = model.first(j), model.repeat(j)
        total += 3 * l * e * e + 3 * l * l * e + l * l * l
    return total


@dataclass(frozen=True)
class MemoryChannel:
    e_q: float
    e_b: float = 0.0

    def __post_init__(self):
        for name in ("e_q", "e_b"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")


def memory_fidelity(ch: MemoryChannel) -> float:
    """Weight of the input polarization in the loop's output state."""
    return (1.0 - ch.e_b) * (1.0 - ch.e_q) + ch.e_b / 2.0


def per_arm_efficiency(eta_d: float, Ps3: float) -> float:
    """Overall per-user efficiency ``eta_d * Ps3**(1/3)`` used by the click model."""
    if not 0.0 <= eta_d <= 1.0:
        raise ValueError(f"eta_d must lie in [0, 1], got {eta_d}")
    if not 0.0 <= Ps3 <= 1.0:
        raise ValueError(f"Ps3 must lie in [0, 1], got {Ps3}")
    return eta_d * Ps3 ** (1.0 / 3.0)
