"""Thermal SPDC photon statistics and heralding by the trigger detector."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TAIL_TOL = 1e-15
K_CAP = 100_000


def thermal_pmf(mu: float, n):
    """Thermal photon-number distribution ``mu**n / (1+mu)**(n+1)``.

    Accepts a scalar or an array of photon numbers.
    """
    if mu < 0:
        raise ValueError(f"mu must be >= 0, got {mu}")
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("photon number must be >= 0")
    if mu == 0:
        out = np.where(n_arr == 0, 1.0, 0.0)
    else:
        out = np.exp(n_arr * math.log(mu) - (n_arr + 1) * math.log1p(mu))
    return float(out) if np.ndim(out) == 0 else out


def thermal_tail(mu: float, k: int) -> float:
    """Probability of more than ``k`` photons, ``(mu/(1+mu))**(k+1)``."""
    return (mu / (1.0 + mu)) ** (k + 1)


def truncation_order(mu: float, tol: float = TAIL_TOL) -> int:
    """Smallest ``k`` whose thermal tail beyond ``k`` is below ``tol``."""
    if mu <= 0:
        return 1
    ratio = mu / (1.0 + mu)
    # tail(k) = ratio**(k+1) < tol
    k = max(1, math.ceil(math.log(tol) / math.log(ratio)) - 1)
    while thermal_tail(mu, k) >= tol:
        k += 1
    if k > K_CAP:
        raise ValueError(f"mu={mu} needs more than {K_CAP} photon-number terms")
    return k


@dataclass(frozen=True)
class ThermalSource:
    mu: float
    k_max: int

    @classmethod
    def adaptive(cls, mu: float, tol: float = TAIL_TOL) -> ThermalSource:
        return cls(mu, truncation_order(mu, tol))

    def pmf(self) -> np.ndarray:
        """Probabilities for n = 0..k_max."""
        return thermal_pmf(self.mu, np.arange(self.k_max + 1))


def herald_click_prob(k, eta_D: float):
    """Probability that a threshold trigger detector fires on ``k`` photons.

    Equal to the binomial sum over at least one detected photon, which
    collapses to ``1 - (1-eta_D)**k``.
    """
    if not 0.0 <= eta_D <= 1.0:
        raise ValueError(f"eta_D must lie in [0, 1], got {eta_D}")
    k_arr = np.asarray(k)
    out = -np.expm1(k_arr * math.log1p(-eta_D)) if eta_D < 1 else np.where(k_arr > 0, 1.0, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def herald_prob_per_slot(mu: float, eta_D: float) -> float:
    """Probability that one pump pulse produces a herald, P_h(1)."""
    if mu == 0 or eta_D == 0:
        return 0.0
    k = np.arange(1, truncation_order(mu) + 1)
    return float(np.sum(thermal_pmf(mu, k) * herald_click_prob(k, eta_D)))


def herald_prob_within(j: int, P_h1: float) -> float:
    """Probability of at least one herald in ``j`` slots; zero for ``j == 0``."""
    if j < 0:
        raise ValueError(f"j must be >= 0, got {j}")
    if not 0.0 <= P_h1 <= 1.0:
        raise ValueError(f"P_h1 must lie in [0, 1], got {P_h1}")
    if j == 0:
        return 0.0
    return -math.expm1(j * math.log1p(-P_h1)) if P_h1 < 1 else 1.0
