"""Discrete-event Monte Carlo for synchronization, the storage loop and sifting.

Trials are grouped in fixed-size blocks. Block ``i`` draws from its own
PCG64 stream seeded by ``SeedSequence(seed, spawn_key=(i,))``, so the first
``n`` trials are identical whatever the total trial count, and blocks can
run on separate workers with an order-independent (integer) reduction.

Only short arms are practical here: the success probability falls like the
cube of the fiber transmittance, and long-distance behaviour is left to the
analytic model.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ghz import GhzOutcome, Polarization, ideal_projection_probs, sift
from .params import SimParams

__all__ = [
    "LoopPhoton",
    "McConfig",
    "SiftStats",
    "SyncEstimate",
    "block_rng",
    "loop_trace",
    "simulate_sifting",
    "simulate_sync",
]

DEFAULT_BLOCK = 1 << 16


def block_rng(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, block))))


@dataclass(frozen=True)
class McConfig:
    seed: int
    trials: int
    params: SimParams = field(default_factory=SimParams)
    block_size: int = DEFAULT_BLOCK
    photon_source: str = "thermal"  # or "single": exactly one photon per pump pulse
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        if self.block_size < 1:
            raise ValueError("block_size must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.photon_source not in ("thermal", "single"):
            raise ValueError(f"unknown photon_source {self.photon_source!r}")

    def blocks(self):
        full, rest = divmod(self.trials, self.block_size)
        sizes = [self.block_size] * full + ([rest] if rest else [])
        return list(enumerate(sizes))


@dataclass(frozen=True)
class SyncEstimate:
    successes: int
    trials: int

    @property
    def p(self) -> float:
        return self.successes / self.trials

    @property
    def stderr(self) -> float:
        p = self.p
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.trials)

    def z_score(self, expected: float) -> float:
        """Standardized deviation using the binomial error of ``expected``."""
        sd = math.sqrt(max(expected * (1.0 - expected), 0.0) / self.trials)
        if sd == 0.0:
            return 0.0 if self.p == expected else math.inf
        return (self.p - expected) / sd


# Arm state per trial: stored photon count, and whether the source has heralded yet.
def _sync_block(args) -> int:
    seed, block, size, params, photon_source = args
    rng = block_rng(seed, block)
    T_c = params.T_c
    enter = T_c * params.T_QM
    geo_p = 1.0 / (1.0 + params.mu_src)
    stored = np.zeros((3, size), dtype=np.int64)
    heralded = np.zeros((3, size), dtype=bool)
    done = np.zeros(size, dtype=bool)
    success = np.zeros(size, dtype=bool)
    for _slot in range(params.N):
        # Photons already in the loop make another round trip.
        stored = rng.binomial(stored, params.T_QM)
        if photon_source == "single":
            k = np.ones((3, size), dtype=np.int64)
        else:
            k = rng.geometric(geo_p, size=(3, size)) - 1
        click = rng.random((3, size)) < -np.expm1(k * math.log1p(-params.eta_D)) if params.eta_D < 1 else k > 0
        fresh = rng.binomial(k, enter)
        # A new herald discards whatever the loop held.
        stored = np.where(click, fresh, stored)
        heralded |= click
        ready = heralded.all(axis=0) & ~done
        success |= ready & (stored == 1).all(axis=0)
        done |= ready
        if done.all():
            break
    return int(success.sum())


def simulate_sync(cfg: McConfig) -> SyncEstimate:
    """Estimate the three-source synchronization probability by direct simulation.

    In each slot every source draws a thermal photon number, the trigger
    fires with per-photon efficiency ``eta_D``, and on a herald the loop
    is refilled with the photons that survive the fiber and one round
    trip. Earlier contents then lose each photon with probability
    ``1 - T_QM`` per further slot. All heralds in a slot are applied before
    the readout check; readout happens in the first slot where every source
    has heralded, and succeeds if each loop holds exactly one photon.
    """
    p = cfg.params
    jobs = [(cfg.seed, b, size, p, cfg.photon_source) for b, size in cfg.blocks()]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            counts = list(pool.map(_sync_block, jobs))
    else:
        counts = [_sync_block(job) for job in jobs]
    return SyncEstimate(sum(counts), cfg.trials)


LOOP_POSITIONS = ("a1_in", "a2", "a3", "a4", "a1_out")


@dataclass(frozen=True)
class LoopPhoton:
    polarization: str  # "H" or "V"
    position: str = "a1_in"
    round_trips: int = 0
    path: tuple = ()

    def __post_init__(self):
        if self.polarization not in ("H", "V"):
            raise ValueError(f"polarization must be 'H' or 'V', got {self.polarization!r}")
        if self.position not in LOOP_POSITIONS:
            raise ValueError(f"unknown loop position {self.position!r}")


def _flip(pol: str) -> str:
    return "V" if pol == "H" else "H"


# PBS routing: (arriving from, polarization) -> leaving towards.
_PBS = {
    ("a1", "H"): "a2",
    ("a1", "V"): "a3",
    ("a4", "V"): "a2",
    ("a4", "H"): "a3",
    ("a3", "H"): "a4",
    ("a3", "V"): "a1_out",
    ("a2", "V"): "a4",
    ("a2", "H"): "a1_out",
}


def loop_trace(photon: LoopPhoton, rounds: int) -> LoopPhoton:
    """Replay a photon through the storage loop for ``rounds`` passes of the a4 arm.

    The EOM between modes a2 and a3 is off on the first and last pass and
    on in between; the double pass through the QWP at a4 flips the
    polarization. The returned photon carries the visited (element,
    polarization, mode) steps in ``path``.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    if photon.position != "a1_in":
        raise ValueError("photon must enter at a1_in")
    pol = photon.polarization
    path = [("in", pol, "a1_in")]
    pos = _PBS[("a1", pol)]
    path.append(("PBS", pol, pos))
    eom_passes = 0
    visits = 0
    while True:
        # Through the bidirectional EOM to the opposite loop mode.
        eom_on = 0 < eom_passes < rounds
        if eom_on:
            pol = _flip(pol)
        pos = "a3" if pos == "a2" else "a2"
        eom_passes += 1
        path.append(("EOM(ON)" if eom_on else "EOM(OFF)", pol, pos))
        pos = _PBS[(pos, pol)]
        path.append(("PBS", pol, pos))
        if pos == "a1_out":
            break
        if pos != "a4" or visits >= rounds:
            raise AssertionError(f"inconsistent loop routing at step {len(path)}: {path[-1]}")
        pol = _flip(pol)
        visits += 1
        path.append(("double QWP", pol, "a4"))
        pos = _PBS[("a4", pol)]
        path.append(("PBS", pol, pos))
    if visits != rounds:
        raise AssertionError(f"photon left after {visits} rounds, expected {rounds}")
    return LoopPhoton(pol, "a1_out", photon.round_trips + rounds, tuple(path))


@dataclass(frozen=True)
class SiftStats:
    trials: int
    discards: int  # mixed bases
    failures: int  # same basis, GHZ measurement failed
    z_pass: int
    z_fail: int
    x_parity_ok: int
    x_parity_bad: int

    @property
    def kept(self) -> int:
        return self.z_pass + self.z_fail + self.x_parity_ok + self.x_parity_bad

    @property
    def kept_fraction(self) -> float:
        return self.kept / self.trials

    @property
    def parity_rate(self) -> float:
        n = self.x_parity_ok + self.x_parity_bad
        return self.x_parity_ok / n if n else float("nan")


_BASES = ("Z", "X")


def _sift_tables():
    """Per (bases, bits) combination: outcome probabilities and sift category."""
    combos = list(itertools.product(itertools.product(_BASES, repeat=3), itertools.product((0, 1), repeat=3)))
    probs = np.zeros((len(combos), 3))  # Phi+, Phi-, failure
    category = np.zeros((len(combos), 2), dtype=np.int64)  # per outcome Phi+/Phi-
    # categories: 0 discard, 1 z pass, 2 z fail, 3 x ok, 4 x bad
    for idx, (bases, bits) in enumerate(combos):
        if len(set(bases)) > 1:
            probs[idx] = (0.0, 0.0, 1.0)
            continue
        pols = [Polarization.encode(b, x) for b, x in zip(bases, bits)]
        born = ideal_projection_probs(pols, normalize=False)
        pp, pm = born[GhzOutcome.PHI_PLUS], born[GhzOutcome.PHI_MINUS]
        probs[idx] = (pp, pm, max(0.0, 1.0 - pp - pm))
        for col, outcome in enumerate((GhzOutcome.PHI_PLUS, GhzOutcome.PHI_MINUS)):
            res = sift(outcome, bases, bits)
            if res.kind == "check":
                category[idx, col] = 1 if res.ok else 2
            else:
                category[idx, col] = 3 if res.ok else 4
    mixed = np.array([len(set(b)) > 1 for b, _ in combos])
    return combos, probs, category, mixed


def simulate_sifting(cfg: McConfig, trials: int | None = None, bases: str | None = None) -> SiftStats:
    """Sift ideal single-photon triples with random bits.

    ``bases`` may pin every party to ``"Z"`` or ``"X"``; by default each
    party picks a basis uniformly. GHZ outcomes are drawn from the Born
    probabilities of the noiseless projection.
    """
    trials = cfg.trials if trials is None else trials
    combos, probs, category, mixed = _sift_tables()
    if bases is None:
        allowed = np.arange(len(combos))
    else:
        allowed = np.array([i for i, (b, _) in enumerate(combos) if set(b) == {bases}])
    counts = np.zeros(6, dtype=np.int64)  # discard, z pass, z fail, x ok, x bad, failure
    cum = np.cumsum(probs, axis=1)
    done = 0
    block = 0
    while done < trials:
        size = min(cfg.block_size, trials - done)
        rng = block_rng(cfg.seed, block, stream=1)
        idx = allowed[rng.integers(0, len(allowed), size)]
        u = rng.random(size)
        outcome = (u[:, None] >= cum[idx]).sum(axis=1)  # 0 Phi+, 1 Phi-, 2 failure
        is_mixed = mixed[idx]
        failed = (outcome == 2) & ~is_mixed
        ok = (outcome < 2) & ~is_mixed
        cat = category[idx[ok], outcome[ok]]
        counts[0] += int(is_mixed.sum())
        counts[5] += int(failed.sum())
        counts[1:5] += np.bincount(cat, minlength=5)[1:5]
        done += size
        block += 1
    return SiftStats(
        trials=trials,
        discards=int(counts[0]),
        failures=int(counts[5]),
        z_pass=int(counts[1]),
        z_fail=int(counts[2]),
        x_parity_ok=int(counts[3]),
        x_parity_bad=int(counts[4]),
    )
