"""Simulation parameters, the flat ``key = value`` config format, and fiber loss."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path

__all__ = [
    "ConfigError",
    "SimParams",
    "channel_transmittance",
    "load_config",
    "parse_config",
    "user_separation",
    "write_config",
]


class ConfigError(ValueError):
    """Raised for malformed or out-of-range parameter files."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


_PROBABILITIES = ("p_d", "e_q", "e_b", "e_d", "eta_D", "eta_d", "T_QM")
_INTEGERS = ("N", "K")


@dataclass(frozen=True)
class SimParams:
    """Physical and protocol constants for one evaluation.

    Defaults are the detector/memory/fiber values of the reference
    simulation (``p_d`` through ``alpha``) plus the protocol choices
    ``N=40``, ``K=8``, ``mu=0.005`` and ``omega=0.0005``.

    ``mu_src`` is the mean photon number per pump pulse of each SPDC pair
    source feeding the heralding/storage model, and ``mu_wcp`` the per-arm
    intensity of the weak-coherent-pulse baseline. Neither value is printed
    alongside the other constants; both defaults are calibrated so the
    synchronization probabilities at 200 km come out at 5.434e-12 (memory)
    and 1.928e-14 (WCP).
    """

    p_d: float = 1e-7
    e_q: float = 0.015
    e_b: float = 0.0
    e_d: float = 0.015
    eta_D: float = 0.93
    eta_d: float = 0.93
    f_ec: float = 1.16
    T_QM: float = 0.98
    alpha: float = 0.2
    N: int = 40
    K: int = 8
    mu: float = 0.005
    omega: float = 0.0005
    L_km: float = 0.0
    mu_src: float = 0.781
    mu_wcp: float = 0.4
    rep_rate_hz: float = 10e9

    def __post_init__(self):
        for name in _INTEGERS:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
            if value < 1:
                raise ConfigError(f"{name} must be >= 1, got {value}")
        for f in fields(self):
            if f.name in _INTEGERS:
                continue
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise ConfigError(f"{f.name} must be a number, got {value!r}")
            if not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite, got {value!r}")
        for name in _PROBABILITIES:
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.f_ec < 1.0:
            raise ConfigError(f"f_ec must be >= 1, got {self.f_ec}")
        for name in ("alpha", "L_km", "mu_src", "mu_wcp"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.rep_rate_hz <= 0:
            raise ConfigError(f"rep_rate_hz must be > 0, got {self.rep_rate_hz}")
        if not 0.0 <= self.omega < self.mu:
            raise ConfigError(
                f"need 0 <= omega < mu, got omega={self.omega}, mu={self.mu}"
            )

    def with_(self, **changes) -> SimParams:
        """Copy with some fields replaced (re-validated)."""
        return replace(self, **changes)

    @property
    def T_c(self) -> float:
        return channel_transmittance(self.alpha, self.L_km)


_FIELD_TYPES = {f.name: (int if f.name in _INTEGERS else float) for f in fields(SimParams)}


def parse_config(text: str) -> SimParams:
    """Parse config text; see :func:`load_config` for the format."""
    values: dict[str, int | float] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw!r}", lineno)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"unknown key {key!r}", lineno)
        if key in seen:
            raise ConfigError(f"duplicate key {key!r} (first on line {seen[key]})", lineno)
        kind = _FIELD_TYPES[key]
        try:
            parsed = kind(value)
        except ValueError:
            raise ConfigError(f"cannot parse {value!r} as {kind.__name__} for {key}", lineno) from None
        if kind is float and not math.isfinite(parsed):
            raise ConfigError(f"{key} must be finite, got {value!r}", lineno)
        values[key] = parsed
        seen[key] = lineno
    try:
        return SimParams(**values)
    except ConfigError as exc:
        # Attribute range errors to the line that set the offending key.
        for key, lineno in seen.items():
            if str(exc).startswith(f"{key} ") or f" {key}=" in str(exc):
                raise ConfigError(str(exc), lineno) from None
        raise


def load_config(path: str | Path) -> SimParams:
    """Read a UTF-8 ``key = value`` parameter file.

    Blank lines and lines starting with ``#`` are ignored. Keys are the
    :class:`SimParams` field names; missing keys keep their defaults and
    unknown keys are rejected. Errors carry the offending line number.
    """
    return parse_config(Path(path).read_text(encoding="utf-8"))


def write_config(params: SimParams, path: str | Path | None = None) -> str:
    """Serialize every field in declaration order; optionally write to ``path``."""
    lines = [f"{f.name} = {getattr(params, f.name)!r}" for f in fields(params)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def channel_transmittance(alpha: float, L_km: float) -> float:
    """Fiber transmittance ``10**(-alpha*L/10)`` for loss ``alpha`` in dB/km."""
    if alpha < 0 or L_km < 0:
        raise ValueError(f"alpha and L_km must be >= 0, got {alpha}, {L_km}")
    return 10.0 ** (-alpha * L_km / 10.0)


def user_separation(L_km: float) -> float:
    """User-to-user distance for three equal arms meeting at 120 degrees."""
    if L_km < 0:
        raise ValueError(f"L_km must be >= 0, got {L_km}")
    return math.sqrt(3.0) * L_km
