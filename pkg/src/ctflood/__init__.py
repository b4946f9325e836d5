"""Concurrent-transmission BFSK link models and a slotted flooding simulator."""

from .phy import (
    ModulationParams,
    SampleStream,
    TransmitterSpec,
    add_awgn,
    beat_frequency,
    envelope_analytic,
    measured_envelope,
    modulate,
    superpose,
)
from .rx import ReceiverConfig, count_bit_errors, demodulate
from .models import (
    Ebn0,
    ber_2ct_equal,
    ber_bfsk,
    bessel_i0,
    energy_2ct,
    nmax_concurrent,
    pdr_repeats,
    per_from_ber,
)
from .montecarlo import (
    EstimateWithCI,
    PhyExperimentSpec,
    calibrate_link_table,
    run_ber_point,
    run_per_sweep,
    wilson_ci,
)
from .linkmodel import (
    LinkQuery,
    LinkTable,
    classify_beating,
    paper_default_table,
    reception_probability,
)
from .airtime import (
    BeaconFrame,
    PhyMode,
    air_time,
    decode_beacon,
    encode_beacon,
    get_mode,
    slot_length,
    symbols_on_air,
)
from .node import NodePolicy, NodeState, channel_for, handle_reception, next_action
from .mesh import SimConfig, Summary, Topology, average_power, duty_cycle_est, run

__version__ = "0.1.0"
