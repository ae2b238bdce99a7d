"""Vacuum + weak decoy estimation of single-photon yield, error and gain.

Intensity labels: ``m`` is the signal level mu, ``w`` the decoy level omega
and ``o`` vacuum. A gain-table key such as ``"wwo"`` lists Alice, Bob and
Charlie in that order.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from types import MappingProxyType
from typing import Callable, Mapping

from .ghz import GainResult, gain_and_qber, gain_integrals
from .params import SimParams
from .sources import thermal_pmf
from .sync import per_arm_efficiency

__all__ = [
    "Bound",
    "DecoyError",
    "GainTable",
    "NoKeyError",
    "Q111Convention",
    "SinglePhotonEstimates",
    "build_gain_table",
    "error_upper_bound",
    "estimate_single_photon",
    "required_labels",
    "single_photon_gain",
    "yield_lower_bound",
]

Pmf = Callable[[float, int], float]


class DecoyError(ValueError):
    """Decoy estimation impossible for these intensities (degenerate system)."""


class NoKeyError(ArithmeticError):
    """The single-photon yield bound is not positive, so no key can be extracted."""


def required_labels() -> tuple[str, ...]:
    """Labels used by the yield/error bounds and the signal term of the key rate."""
    low = {"".join(t) for t in itertools.product("wo", repeat=3)}
    high = {"".join(t) for t in itertools.product("mo", repeat=3)}
    return tuple(sorted(low | high))


@dataclass(frozen=True)
class GainTable:
    mu: float
    omega: float
    entries: Mapping[str, GainResult]

    def __post_init__(self):
        missing = set(required_labels()) - set(self.entries)
        if missing:
            raise ValueError(f"gain table missing {sorted(missing)}")
        for label, g in self.entries.items():
            if g.Q_X < 0 or not 0.0 <= g.E_X <= 1.0:
                raise ValueError(f"entry {label} out of range: {g}")
        object.__setattr__(self, "entries", MappingProxyType(dict(self.entries)))

    def Q(self, label: str) -> float:
        return self.entries[label].Q_X

    def E(self, label: str) -> float:
        return self.entries[label].E_X

    def intensity(self, code: str) -> float:
        return {"m": self.mu, "w": self.omega, "o": 0.0}[code]

    @classmethod
    def from_values(cls, mu: float, omega: float, Q: Mapping[str, float], E: Mapping[str, float] | None = None):
        """Table from bare gains (and optional QBERs); split into right/error parts by E."""
        entries = {}
        for label, q in Q.items():
            e = 0.0 if E is None else E[label]
            entries[label] = GainResult(q * (1 - e), q * e, q, e)
        return cls(mu, omega, entries)


def build_gain_table(
    params: SimParams, Ps3: float, F: float, eta: float | None = None, labels=None
) -> GainTable:
    """Evaluate gain and QBER for every intensity combination the bounds need.

    All entries share ``eta = eta_d * Ps3**(1/3)`` unless ``eta`` is given.
    """
    if eta is None:
        eta = per_arm_efficiency(params.eta_d, Ps3)
    lv = {"m": params.mu, "w": params.omega, "o": 0.0}
    entries = {}
    for label in labels or required_labels():
        triple = tuple(lv[c] for c in label)
        gains = gain_integrals(triple, eta, params.p_d, params.K)
        entries[label] = gain_and_qber(triple, eta, params.p_d, params.K, params.e_d, F, gains=gains)
    return GainTable(params.mu, params.omega, entries)


@dataclass(frozen=True)
class Bound:
    """A decoy bound clamped into its admissible range; ``raw`` is kept for diagnostics."""

    value: float
    raw: float
    valid: bool


def _vacuum_corrected(values: Callable[[str], float], x: str, p0: float) -> float:
    """Inclusion-exclusion over vacuum arms for the all-``x`` triple."""
    ones = [x + "oo", "o" + x + "o", "oo" + x]
    twos = [x + x + "o", x + "o" + x, "o" + x + x]
    return (
        values(x * 3)
        - p0 * sum(values(k) for k in twos)
        + p0**2 * sum(values(k) for k in ones)
        - p0**3 * values("ooo")
    )


def yield_lower_bound(t: GainTable, mu: float | None = None, omega: float | None = None, pmf: Pmf = thermal_pmf) -> Bound:
    """Lower bound on the yield of single-photon triples.

    Raises:
        DecoyError: when the decoy system is degenerate (e.g. ``mu == omega``).
    """
    mu = t.mu if mu is None else mu
    omega = t.omega if omega is None else omega
    Pm = [pmf(mu, n) for n in range(3)]
    Pw = [pmf(omega, n) for n in range(3)]
    denom = Pm[1] ** 2 * Pw[1] ** 2 * (Pm[2] * Pw[1] - Pw[2] * Pm[1])
    if denom == 0.0:
        raise DecoyError(f"decoy system degenerate for mu={mu}, omega={omega}")
    # Gains are looked up by the labels m/w; mu/omega only set the weights.
    b_w = _vacuum_corrected(t.Q, "w", Pw[0])
    b_m = _vacuum_corrected(t.Q, "m", Pm[0])
    raw = (Pm[1] ** 2 * Pm[2] * b_w - Pw[1] ** 2 * Pw[2] * b_m) / denom
    return Bound(min(max(raw, 0.0), 1.0), raw, 0.0 <= raw <= 1.0)


def error_upper_bound(t: GainTable, Y111_XL: float, omega: float | None = None, pmf: Pmf = thermal_pmf) -> Bound:
    """Upper bound on the bit error rate of single-photon triples.

    Raises:
        NoKeyError: if ``Y111_XL <= 0``.
    """
    if not Y111_XL > 0:
        raise NoKeyError(f"single-photon yield bound {Y111_XL} is not positive")
    omega = t.omega if omega is None else omega
    p0, p1 = pmf(omega, 0), pmf(omega, 1)
    eq = _vacuum_corrected(lambda k: t.E(k) * t.Q(k), "w", p0)
    raw = eq / (p1**3 * Y111_XL)
    return Bound(min(max(raw, 0.0), 0.5), raw, 0.0 <= raw <= 0.5)


class Q111Convention(enum.Enum):
    LITERAL = "literal"  # mu / (1 + mu**2) * Y
    TRIPLE_THERMAL = "triple"  # (mu / (1+mu)**2)**3 * Y

    @classmethod
    def parse(cls, value) -> Q111Convention:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown Q111 convention {value!r}; use 'literal' or 'triple'") from None


DEFAULT_Q111_CONVENTION = Q111Convention.LITERAL


def single_photon_gain(Y111_XL: float, mu: float, convention=DEFAULT_Q111_CONVENTION) -> float:
    """Lower bound on the single-photon gain from the yield bound."""
    convention = Q111Convention.parse(convention)
    if convention is Q111Convention.LITERAL:
        return mu / (1.0 + mu**2) * Y111_XL
    return (mu / (1.0 + mu) ** 2) ** 3 * Y111_XL


@dataclass(frozen=True)
class SinglePhotonEstimates:
    Y111_XL: float
    e111_BXU: float
    Q111_XL: float
    e111_BZU: float
    Y111_raw: float
    e111_raw: float
    valid: bool


def estimate_single_photon(t: GainTable, convention=DEFAULT_Q111_CONVENTION, pmf: Pmf = thermal_pmf) -> SinglePhotonEstimates:
    """Yield, error and gain bounds; a non-positive yield gives all-zero gain with ``valid=False``."""
    y = yield_lower_bound(t, pmf=pmf)
    if y.raw <= 0:
        return SinglePhotonEstimates(0.0, 0.5, 0.0, 0.5, y.raw, float("nan"), False)
    e = error_upper_bound(t, y.value, pmf=pmf)
    q111 = single_photon_gain(y.value, t.mu, convention)
    return SinglePhotonEstimates(y.value, e.value, q111, e.value, y.raw, e.raw, y.valid and e.valid)
