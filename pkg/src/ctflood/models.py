"""Closed-form link and scaling formulas used as planning tools and oracles."""

from __future__ import annotations

import math
from dataclasses import dataclass

_I0_SERIES_LIMIT = 15.0
_I0_RANGE_LIMIT = 50.0


@dataclass(frozen=True)
class Ebn0:
    """Per-bit SNR as a linear ratio, with dB helpers."""

    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("Eb/N0 ratio must be non-negative")

    @classmethod
    def from_db(cls, db: float) -> "Ebn0":
        return cls(10.0 ** (db / 10.0))

    def to_db(self) -> float:
        if self.value == 0:
            return float("-inf")
        return 10.0 * math.log10(self.value)


def _as_ratio(ebn0) -> float:
    if isinstance(ebn0, Ebn0):
        return ebn0.value
    x = float(ebn0)
    if x < 0:
        raise ValueError("Eb/N0 ratio must be non-negative")
    return x


def bessel_i0(x: float) -> float:
    """Modified Bessel function of the first kind, order zero.

    Ascending series for |x| <= 15, asymptotic expansion beyond; accurate
    to better than 1e-9 relative over the supported |x| <= 50 range.
    """
    x = float(x)
    if abs(x) > _I0_RANGE_LIMIT:
        raise ValueError("argument outside supported range |x| <= 50")
    return _i0_scaled(abs(x)) * math.exp(abs(x))


def _i0_scaled(ax: float) -> float:
    """exp(-|x|) * I0(x); keeps intermediate values small for products."""
    if ax <= _I0_SERIES_LIMIT:
        # sum of (x/2)^(2k) / (k!)^2
        term = 1.0
        total = 1.0
        q = ax * ax / 4.0
        for k in range(1, 60):
            term *= q / (k * k)
            total += term
            if term < total * 1e-17:
                break
        return total * math.exp(-ax)
    # asymptotic: I0(x) ~ e^x/sqrt(2 pi x) * sum c_k/(8x)^k, c_k = prod (2j-1)^2 / k!
    total = 1.0
    c = 1.0
    for k in range(1, 12):
        c *= (2 * k - 1) ** 2 / k
        total += c / (8.0 * ax) ** k
    return total / math.sqrt(2.0 * math.pi * ax)


def ber_bfsk(ebn0) -> float:
    """Bit error rate of non-coherent orthogonal BFSK in AWGN: exp(-x/2)/2."""
    return 0.5 * math.exp(-_as_ratio(ebn0) / 2.0)


def ber_2ct_equal(ebn0_single) -> float:
    """Beat-period average BER for two equal, aligned, same-data transmitters.

    Equals exp(-x) * I0(x) / 2 with x the single-transmitter Eb/N0 ratio;
    evaluated in scaled form so it stays finite for large x.
    """
    x = _as_ratio(ebn0_single)
    if x > _I0_RANGE_LIMIT:
        raise ValueError("Eb/N0 ratio outside supported range")
    return 0.5 * _i0_scaled(x)


def energy_2ct(t: float, eb0: float, f_beat: float):
    """Instantaneous per-bit energy of two beating unit-energy carriers."""
    import numpy as np

    return 4.0 * eb0 * np.cos(np.pi * f_beat * np.asarray(t, dtype=float)) ** 2


def per_from_ber(ber: float, length: int) -> float:
    """Packet error rate for independent bit errors: 1 - (1-BER)^L."""
    if not 0.0 <= ber <= 1.0:
        raise ValueError("ber must be a probability")
    if length < 1:
        raise ValueError("length must be at least 1 bit")
    return 1.0 - (1.0 - ber) ** length


def pdr_repeats(prr: float, n: int) -> float:
    """Delivery ratio after n independent repeats of per-try ratio prr."""
    if not 0.0 <= prr <= 1.0:
        raise ValueError("prr must be a probability")
    if n < 1:
        raise ValueError("n must be at least 1")
    return 1.0 - (1.0 - prr) ** n


def jitter_sigma(f_clock: float) -> float:
    """Slot-alignment jitter standard deviation of a clock: 1/(2 f_clock)."""
    if f_clock <= 0:
        raise ValueError("clock frequency must be positive")
    return 1.0 / (2.0 * f_clock)


def nmax_concurrent(f_clock: float, symbol_period: float) -> int:
    """How many aligned transmitters a symbol can tolerate: floor((T_S f/3)^2).

    Returns 0 for degenerate inputs where the budget is below one
    transmitter (f_clock * T_S < 3).
    """
    if f_clock <= 0 or symbol_period <= 0:
        raise ValueError("inputs must be positive")
    budget = f_clock * symbol_period
    if budget < 3.0:
        return 0
    return int(math.floor((budget / 3.0) ** 2))


def ber_crossover_ratio() -> float:
    """Linear Eb/N0 where the 2-CT curve crosses the single-TX curve.

    Root of exp(-x/2) * I0(x) = 1 for x > 0, found by bisection.
    """
    f = lambda x: math.exp(x / 2.0) * _i0_scaled(x) - 1.0
    lo, hi = 1.0, 5.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if f(mid) > 0.0:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2.0
