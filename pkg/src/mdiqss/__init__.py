"""Quantum-memory-assisted MDI quantum secret sharing: analytic model and Monte Carlo cross-check."""

from .params import SimParams, channel_transmittance, load_config, user_separation, write_config
from .keyrate import BaselineModel, max_distance, rate_point, tqm_threshold
from .sync import SyncModel, sync_success

__all__ = [
    "BaselineModel",
    "SimParams",
    "SyncModel",
    "channel_transmittance",
    "load_config",
    "max_distance",
    "rate_point",
    "sync_success",
    "tqm_threshold",
    "user_separation",
    "write_config",
]
