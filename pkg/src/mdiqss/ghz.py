"""GHZ-state analysis: ideal click logic and the phase-averaged click model.

Detectors are indexed in the order D1H, D1V, D2H, D2V, D3H, D3V. Station 1
interferes arms (a, b), station 2 arms (b, c) and station 3 arms (a, c).

The printed input/outcome table repeats the row ``- + +`` and leaves out
``+ + -``. Outcome probabilities here come from projecting onto the GHZ
states directly, which assigns ``+ + -`` to Phi-minus.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

__all__ = [
    "DETECTORS",
    "ClickPattern",
    "GainResult",
    "GhzOutcome",
    "IntensityTriple",
    "Polarization",
    "QuadratureError",
    "SiftResult",
    "classify_clicks",
    "click_probs",
    "gain_and_qber",
    "gain_integrals",
    "gain_integrands",
    "ideal_projection_probs",
    "sift",
]

DETECTORS = ("D1H", "D1V", "D2H", "D2V", "D3H", "D3V")


class Polarization(enum.Enum):
    H = "H"
    V = "V"
    PLUS = "+"
    MINUS = "-"

    @property
    def basis(self) -> str:
        return "Z" if self in (Polarization.H, Polarization.V) else "X"

    @property
    def bit(self) -> int:
        return 0 if self in (Polarization.H, Polarization.PLUS) else 1

    @classmethod
    def encode(cls, basis: str, bit: int) -> Polarization:
        if basis == "Z":
            return cls.H if bit == 0 else cls.V
        if basis == "X":
            return cls.PLUS if bit == 0 else cls.MINUS
        raise ValueError(f"unknown basis {basis!r}")

    def amplitudes(self) -> np.ndarray:
        """Components on (|H>, |V>)."""
        r = 1 / math.sqrt(2)
        return {
            Polarization.H: np.array([1.0, 0.0]),
            Polarization.V: np.array([0.0, 1.0]),
            Polarization.PLUS: np.array([r, r]),
            Polarization.MINUS: np.array([r, -r]),
        }[self]


class GhzOutcome(enum.Enum):
    PHI_PLUS = "Phi+"
    PHI_MINUS = "Phi-"
    FAILURE = "failure"


class ClickPattern(NamedTuple):
    D1H: bool = False
    D1V: bool = False
    D2H: bool = False
    D2V: bool = False
    D3H: bool = False
    D3V: bool = False

    @classmethod
    def of(cls, *names: str) -> ClickPattern:
        unknown = set(names) - set(DETECTORS)
        if unknown:
            raise ValueError(f"unknown detectors {sorted(unknown)}")
        return cls(*(d in names for d in DETECTORS))

    def fired(self) -> tuple[str, ...]:
        return tuple(d for d, on in zip(DETECTORS, self) if on)


def classify_clicks(p: ClickPattern) -> GhzOutcome:
    """Map a six-detector pattern to Phi+, Phi- or failure.

    Success needs exactly one click per station; the number of V clicks
    then decides the sign (even: Phi+, odd: Phi-).
    """
    v_count = 0
    for h, v in ((p.D1H, p.D1V), (p.D2H, p.D2V), (p.D3H, p.D3V)):
        if h == v:
            return GhzOutcome.FAILURE
        v_count += v
    return GhzOutcome.PHI_PLUS if v_count % 2 == 0 else GhzOutcome.PHI_MINUS


@lru_cache(maxsize=None)
def _ghz_vectors() -> dict[GhzOutcome, np.ndarray]:
    hhh = np.zeros(8)
    vvv = np.zeros(8)
    hhh[0b000] = 1.0
    vvv[0b111] = 1.0
    return {
        GhzOutcome.PHI_PLUS: (hhh + vvv) / math.sqrt(2),
        GhzOutcome.PHI_MINUS: (hhh - vvv) / math.sqrt(2),
    }


def ideal_projection_probs(inputs, normalize: bool = True) -> dict[GhzOutcome, float]:
    """Outcome probabilities for three ideal single photons.

    With ``normalize`` (default) the Phi+/Phi- weights are conditioned on
    the projection landing in their span, which is how the input/outcome
    table is usually quoted; inputs with no overlap return zeros. With
    ``normalize=False`` the raw Born probabilities are returned.

    Raises:
        ValueError: if the three photons are not prepared in one basis.
    """
    inputs = tuple(Polarization(x) if not isinstance(x, Polarization) else x for x in inputs)
    if len(inputs) != 3:
        raise ValueError("need exactly three input polarizations")
    if len({x.basis for x in inputs}) != 1:
        raise ValueError("mixed-basis inputs are sifted out and have no defined outcome")
    state = np.kron(np.kron(inputs[0].amplitudes(), inputs[1].amplitudes()), inputs[2].amplitudes())
    born = {o: float(np.dot(vec, state) ** 2) for o, vec in _ghz_vectors().items()}
    if normalize:
        total = sum(born.values())
        if total < 1e-15:
            return {o: 0.0 for o in born}
        born = {o: p / total for o, p in born.items()}
    return born


@dataclass(frozen=True)
class SiftResult:
    kind: str  # "check", "key" or "discard"
    ok: bool | None = None  # check passed / parity satisfied


def sift(outcome: GhzOutcome, bases, bits) -> SiftResult:
    """Apply the basis-announcement rules to one successful measurement."""
    if outcome is GhzOutcome.FAILURE:
        raise ValueError("sifting needs a successful GHZ outcome")
    bases = tuple(bases)
    a, b, c = (int(x) for x in bits)
    if bases == ("Z", "Z", "Z"):
        return SiftResult("check", a == b == c)
    if bases == ("X", "X", "X"):
        expected = a if outcome is GhzOutcome.PHI_PLUS else a ^ 1
        return SiftResult("key", expected == (b ^ c))
    return SiftResult("discard")


class IntensityTriple(NamedTuple):
    mu_a: float
    mu_b: float
    mu_c: float


def _click(pair_mean, cross, p_d):
    # 1 - (1-p_d) exp(-x), kept accurate for x ~ 1e-12.
    x = pair_mean + cross
    x = np.maximum(x, 0.0)
    return p_d - (1.0 - p_d) * np.expm1(-x), (1.0 - p_d) * np.exp(-x)


def click_probs(phi, varphi, intensities, eta: float, p_d: float) -> dict[str, np.ndarray]:
    """Click probabilities of the six detectors for relative phases ``phi``, ``varphi``.

    ``phi`` is theta_a - theta_b and ``varphi`` is theta_a - theta_c. All
    three arms share the overall efficiency ``eta``.
    """
    probs, _ = _clicks_and_complements(phi, varphi, intensities, eta, p_d)
    return probs


def _clicks_and_complements(phi, varphi, intensities, eta, p_d):
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")
    ma, mb, mc = intensities
    if min(ma, mb, mc) < 0:
        raise ValueError("intensities must be >= 0")
    a, b, c = ma * eta, mb * eta, mc * eta
    phi = np.asarray(phi, dtype=float)
    varphi = np.asarray(varphi, dtype=float)
    stations = (
        ((a + b) / 4, math.sqrt(a * b) / 2 * np.cos(phi)),
        ((b + c) / 4, math.sqrt(b * c) / 2 * np.cos(varphi - phi)),
        ((a + c) / 4, math.sqrt(a * c) / 2 * np.cos(varphi)),
    )
    probs, comps = {}, {}
    for idx, (mean, cross) in enumerate(stations, start=1):
        probs[f"D{idx}H"], comps[f"D{idx}H"] = _click(mean, cross, p_d)
        probs[f"D{idx}V"], comps[f"D{idx}V"] = _click(mean, -cross, p_d)
    return probs, comps


# (H-or-V per station) patterns counted as right / error outcomes.
RIGHT_PATTERNS = ("HHH", "HVV", "VHV", "VVH")
ERROR_PATTERNS = ("HHV", "HVH", "VHH", "VVV")


def gain_integrands(phi, varphi, intensities, eta, p_d):
    """Right and error coincidence probabilities at fixed phases."""
    F, G = _clicks_and_complements(phi, varphi, intensities, eta, p_d)

    def pattern(code):
        term = 1.0
        for station, pol in enumerate(code, start=1):
            other = "V" if pol == "H" else "H"
            term = term * F[f"D{station}{pol}"] * G[f"D{station}{other}"]
        return term

    right = sum(pattern(c) for c in RIGHT_PATTERNS)
    error = sum(pattern(c) for c in ERROR_PATTERNS)
    return right, error


class QuadratureError(RuntimeError):
    """Tensor Gauss-Legendre rule failed to converge within the node cap."""


@lru_cache(maxsize=None)
def _legendre(n: int):
    return np.polynomial.legendre.leggauss(n)


def _tensor_rule(n: int, K: int, intensities, eta, p_d):
    x, w = _legendre(n)
    half = math.pi / (2 * K)
    nodes = half * (x + 1.0)
    weights = half * w
    PHI, VPHI = np.meshgrid(nodes, nodes, indexing="ij")
    W = np.outer(weights, weights)
    right, error = gain_integrands(PHI, VPHI, intensities, eta, p_d)
    scale = K / math.pi**2
    # Fixed-order reductions keep results bitwise reproducible.
    return scale * float(np.sum(W * right)), scale * float(np.sum(W * error))


def gain_integrals(
    intensities,
    eta: float,
    p_d: float,
    K: int,
    rtol: float = 1e-9,
    n_start: int = 32,
    n_cap: int = 512,
    return_nodes: bool = False,
):
    """Phase-post-selected right/error gains ``(Q_RX, Q_EX)``.

    Both are ``K/pi**2`` times the integral over ``[0, pi/K]**2`` of the
    summed right (error) coincidence products. Evaluated with a tensor
    Gauss-Legendre rule doubled from ``n_start`` nodes per axis until two
    successive rules agree to ``rtol``.

    Raises:
        QuadratureError: no convergence by ``n_cap`` nodes per axis.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    n = n_start
    prev = _tensor_rule(n, K, intensities, eta, p_d)
    while n < n_cap:
        n *= 2
        cur = _tensor_rule(n, K, intensities, eta, p_d)
        if all(_close(c, p, rtol) for c, p in zip(cur, prev)):
            return (cur, n) if return_nodes else cur
        prev = cur
    raise QuadratureError(
        f"gain integrals not converged to rtol={rtol} at {n_cap}x{n_cap} nodes "
        f"(intensities={tuple(intensities)}, eta={eta}, p_d={p_d}, K={K})"
    )


def _close(a: float, b: float, rtol: float) -> bool:
    scale = max(abs(a), abs(b))
    return scale == 0.0 or abs(a - b) <= rtol * scale


@dataclass(frozen=True)
class GainResult:
    Q_RX: float
    Q_EX: float
    Q_X: float
    E_X: float


def gain_and_qber(intensities, eta, p_d, K, e_d, F, gains=None) -> GainResult:
    """Overall X-basis gain and QBER including misalignment and memory fidelity.

    ``gains`` may carry precomputed ``(Q_RX, Q_EX)``.
    """
    for name, value in (("e_d", e_d), ("F", F)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    q_r, q_e = gains if gains is not None else gain_integrals(intensities, eta, p_d, K)
    q = q_r + q_e
    keep = (1.0 - e_d) * F
    e = ((1.0 - keep) * q_r + keep * q_e) / q if q > 0 else 0.0
    return GainResult(q_r, q_e, q, e)


def all_patterns():
    """All 64 click patterns."""
    return [ClickPattern(*bits) for bits in itertools.product((False, True), repeat=6)]
