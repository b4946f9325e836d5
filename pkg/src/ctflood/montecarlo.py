"""Monte Carlo BER/PER experiments for one or two concurrent transmitters.

The kernel is vectorized over packets: per chunk it synthesizes every
packet of both transmitters from precomputed tone arrays, adds calibrated
noise, and runs the two-branch detector. Replica randomness is keyed by
(seed, grid index, chunk index) so chunks can be computed in any order,
or in parallel, with identical pooled results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .phy import ModulationParams, noise_variance_per_dim
from .linkmodel import LinkTable

CHUNK_PACKETS = 2000


@dataclass(frozen=True)
class PhyExperimentSpec:
    """One grid point (or sweep) of the two-transmitter packet experiment.

    power_delta is 20*log10(A1/A2) with transmitter 1 the stronger one;
    None means a single transmitter. The weaker transmitter stays at the
    reference amplitude that defines Eb/N0, the stronger one is boosted.
    time_delta is transmitter 2's delay in fractions of a symbol;
    beat_ratio is packet air time over beat period.
    """

    mod: ModulationParams
    packet_bits: int = 128
    ebn0_points: Tuple[float, ...] = (12.0,)
    power_delta: Optional[float] = 0.0
    time_delta: float = 0.0
    beat_ratio: float = 0.25
    same_data: bool = True
    replicas: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.packet_bits < 1:
            raise ValueError("packet_bits must be positive")
        if self.replicas < 100:
            raise ValueError("need at least 100 replicas per estimate")
        if self.power_delta is not None and self.power_delta < 0:
            raise ValueError("power_delta is defined as a non-negative dB value")
        if self.beat_ratio < 0 or self.time_delta < 0:
            raise ValueError("beat_ratio and time_delta must be non-negative")


@dataclass(frozen=True)
class EstimateWithCI:
    point: float
    ci_low: float
    ci_high: float
    n_trials: int

    def __post_init__(self):
        if not (0.0 <= self.ci_low <= self.point <= self.ci_high <= 1.0):
            raise ValueError("inconsistent estimate bounds")

    def overlaps(self, other: "EstimateWithCI") -> bool:
        return self.ci_low <= other.ci_high and other.ci_low <= self.ci_high

    @property
    def width(self) -> float:
        return self.ci_high - self.ci_low


def wilson_ci(k: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if not 0 <= k <= n or n < 1:
        raise ValueError("need 0 <= k <= n, n >= 1")
    z = NormalDist().inv_cdf(0.5 + confidence / 2.0)
    phat = k / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def _estimate(k: int, n: int, confidence: float) -> EstimateWithCI:
    lo, hi = wilson_ci(k, n, confidence)
    p = k / n
    return EstimateWithCI(min(max(p, lo), hi), lo, hi, n)


def _simulate_chunk(
    spec: PhyExperimentSpec, ebn0_db: float, n_packets: int, rng: np.random.Generator
) -> np.ndarray:
    """Bit-error count per packet for one chunk of replicas."""
    mod = spec.mod
    sps = mod.samples_per_symbol
    L = spec.packet_bits
    n = L * sps
    fs = mod.sample_rate
    tau = np.arange(n) / fs
    e_plus = np.exp(1j * 2 * np.pi * mod.freq_deviation * tau)
    e_minus = e_plus.conj()

    two_tx = spec.power_delta is not None
    if two_tx:
        t_packet = L * mod.symbol_period
        f_beat = spec.beat_ratio / t_packet
        a1 = 10.0 ** (spec.power_delta / 20.0)
        cfo1 = np.exp(1j * 2 * np.pi * (+f_beat / 2.0) * tau)
        cfo2 = np.exp(1j * 2 * np.pi * (-f_beat / 2.0) * tau)

    bits1 = rng.integers(0, 2, size=(n_packets, L), dtype=np.int8)
    rep1 = np.repeat(bits1.astype(bool), sps, axis=1)
    phase1 = np.exp(1j * rng.uniform(0.0, 2 * np.pi, n_packets))
    y = np.where(rep1, e_plus, e_minus)
    if two_tx:
        y = y * cfo1
        y *= a1 * phase1[:, None]
        bits2 = bits1 if spec.same_data else rng.integers(0, 2, size=(n_packets, L), dtype=np.int8)
        rep2 = np.repeat(bits2.astype(bool), sps, axis=1)
        phase2 = np.exp(1j * rng.uniform(0.0, 2 * np.pi, n_packets))
        sig2 = np.where(rep2, e_plus, e_minus) * cfo2
        sig2 *= phase2[:, None]
        off = int(round(spec.time_delta * sps))
        if off == 0:
            y += sig2
        else:
            y[:, off:] += sig2[:, : n - off]
    else:
        y = y * phase1[:, None]

    var = noise_variance_per_dim(ebn0_db, mod, ref_amplitude=1.0)
    if var > 0.0:
        sigma = math.sqrt(var)
        y += rng.normal(0.0, sigma, y.shape) + 1j * rng.normal(0.0, sigma, y.shape)

    # two-branch detector, symbol windows aligned with transmitter 1
    windows = y.reshape(n_packets, L, sps)
    ref = np.exp(-1j * 2 * np.pi * mod.freq_deviation * (np.arange(sps) / fs))
    c_plus = windows @ ref
    c_minus = windows @ ref.conj()
    decisions = (np.abs(c_plus) ** 2 > np.abs(c_minus) ** 2).astype(np.int8)
    return np.count_nonzero(decisions != bits1, axis=1)


def _run_point(spec: PhyExperimentSpec, ebn0_db: float, grid_index: int) -> np.ndarray:
    """Per-packet error counts for all replicas of one grid point."""
    counts = []
    done = 0
    chunk_index = 0
    while done < spec.replicas:
        m = min(CHUNK_PACKETS, spec.replicas - done)
        rng = np.random.default_rng([spec.seed, grid_index, chunk_index])
        counts.append(_simulate_chunk(spec, ebn0_db, m, rng))
        done += m
        chunk_index += 1
    return np.concatenate(counts)


def run_ber_point(
    spec: PhyExperimentSpec, ebn0_db: float, confidence: float = 0.99
) -> EstimateWithCI:
    """Estimate BER at one Eb/N0 point, averaged over all replica packets."""
    try:
        grid_index = spec.ebn0_points.index(ebn0_db)
    except ValueError:
        grid_index = hash(round(ebn0_db * 1000)) & 0xFFFF
    errors = _run_point(spec, ebn0_db, grid_index)
    n_bits = spec.replicas * spec.packet_bits
    return _estimate(int(errors.sum()), n_bits, confidence)


def run_per_sweep(
    spec: PhyExperimentSpec, confidence: float = 0.99
) -> List[Tuple[float, EstimateWithCI]]:
    """Packet error rate at every Eb/N0 point of the spec."""
    out = []
    for gi, ebn0 in enumerate(spec.ebn0_points):
        errors = _run_point(spec, ebn0, gi)
        failures = int(np.count_nonzero(errors))
        out.append((ebn0, _estimate(failures, spec.replicas, confidence)))
    return out


def run_per_point(
    spec: PhyExperimentSpec, ebn0_db: float, confidence: float = 0.99
) -> EstimateWithCI:
    sweep = run_per_sweep(replace(spec, ebn0_points=(ebn0_db,)), confidence)
    return sweep[0][1]


def calibrate_link_table(
    spec: PhyExperimentSpec,
    mode_name: str,
    dp_axis: Sequence[float],
    dt_axis: Sequence[float],
    br_axis: Sequence[float],
    ebn0_db: float = 12.0,
    both_payload_cases: bool = True,
) -> LinkTable:
    """Fill a LinkTable with 1-PER estimates from the packet experiment.

    The axes must be strictly increasing; every grid cell is simulated
    with its own deterministic replica stream derived from spec.seed.
    """
    dp_axis = list(dp_axis)
    dt_axis = list(dt_axis)
    br_axis = list(br_axis)
    if not dp_axis or not dt_axis or not br_axis:
        raise ValueError("empty calibration grid")
    cases = (True, False) if both_payload_cases else (True,)
    shape = (len(dp_axis), len(dt_axis), len(br_axis))
    tables = {(mode_name, same): np.zeros(shape) for same in cases}
    gi = 0
    for same in cases:
        for i, dp in enumerate(dp_axis):
            for j, dt in enumerate(dt_axis):
                for k, br in enumerate(br_axis):
                    cell = replace(
                        spec,
                        power_delta=dp,
                        time_delta=dt,
                        beat_ratio=br,
                        same_data=same,
                    )
                    errors = _run_point(cell, ebn0_db, gi)
                    per = np.count_nonzero(errors) / cell.replicas
                    tables[(mode_name, same)][i, j, k] = 1.0 - per
                    gi += 1
    return LinkTable(
        np.array(dp_axis),
        np.array(dt_axis),
        np.array(br_axis),
        tables,
        provenance={
            "source": "monte-carlo-calibration",
            "seed": str(spec.seed),
            "replicas": str(spec.replicas),
            "packet_bits": str(spec.packet_bits),
            "ebn0_db": str(ebn0_db),
        },
    )
