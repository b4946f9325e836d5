"""Slot-level simulation of a flooding round over a radio topology.

Every slot, each node picks transmit/listen/sleep from its state machine.
Reception of a listener is resolved from the two strongest concurrent
arrivals: their received-power difference, their relative timing jitter,
and the beat period of their carrier offsets index the link table, and a
Bernoulli draw decides the outcome.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import node as nd
from .airtime import PhyMode, air_time, encode_beacon, get_mode, slot_length, DEFAULT_GUARD
from .linkmodel import LinkQuery, LinkTable, reception_probability
from .models import jitter_sigma

NEG_INF = float("-inf")


@dataclass
class Topology:
    """Directed link gains in dB (-inf = no link) plus per-node radio traits."""

    n_nodes: int
    gains: np.ndarray  # (n, n) dB
    cfo: np.ndarray  # (n,) Hz
    jitter_std: np.ndarray  # (n,) seconds
    initiator: int = 0

    def __post_init__(self):
        self.gains = np.asarray(self.gains, dtype=float)
        self.cfo = np.asarray(self.cfo, dtype=float)
        self.jitter_std = np.asarray(self.jitter_std, dtype=float)
        n = self.n_nodes
        if self.gains.shape != (n, n) or self.cfo.shape != (n,) or self.jitter_std.shape != (n,):
            raise ValueError("topology arrays do not match node count")
        if not 0 <= self.initiator < n:
            raise ValueError("initiator out of range")
        if np.any(np.isposinf(self.gains)):
            raise ValueError("gains must be finite or -inf")

    @classmethod
    def build(
        cls,
        edges: Sequence[Tuple[int, int, float]],
        n_nodes: int,
        cfo: Optional[Sequence[float]] = None,
        cfo_ppm_std: float = 10.0,
        carrier_hz: float = 2.4e9,
        f_clock: float = 16e6,
        initiator: int = 0,
        symmetric: bool = True,
        seed: int = 0,
    ) -> "Topology":
        """Assemble a topology from an edge list; CFOs drawn if not given."""
        gains = np.full((n_nodes, n_nodes), NEG_INF)
        for src, dst, g in edges:
            gains[src, dst] = g
            if symmetric:
                gains[dst, src] = g
        if cfo is None:
            rng = np.random.default_rng(seed)
            cfo = rng.normal(0.0, cfo_ppm_std * 1e-6 * carrier_hz, n_nodes)
        jitter = np.full(n_nodes, jitter_sigma(f_clock))
        return cls(n_nodes, gains, np.asarray(cfo, dtype=float), jitter, initiator)

    def hop_distances(self) -> np.ndarray:
        """Unweighted shortest-path distance from the initiator (BFS)."""
        dist = np.full(self.n_nodes, -1, dtype=int)
        dist[self.initiator] = 0
        frontier = [self.initiator]
        while frontier:
            nxt = []
            for u in frontier:
                for v in range(self.n_nodes):
                    if self.gains[u, v] > NEG_INF and dist[v] < 0:
                        dist[v] = dist[u] + 1
                        nxt.append(v)
            frontier = nxt
        return dist


@dataclass
class SimConfig:
    topology: Topology
    policy: nd.NodePolicy
    table: LinkTable
    mode: PhyMode = None
    pdu_len: int = 38
    rounds: int = 100
    seed: int = 0
    tx_power: Optional[np.ndarray] = None  # dBm per node
    fading_std: float = 1.0  # dB, per-slot gain perturbation
    channel_erasure: Optional[Dict[int, float]] = None
    guard: float = DEFAULT_GUARD
    start_synced: bool = True

    def __post_init__(self):
        if self.mode is None:
            self.mode = get_mode("2M")
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if self.tx_power is None:
            self.tx_power = np.zeros(self.topology.n_nodes)
        self.tx_power = np.asarray(self.tx_power, dtype=float)

    @property
    def air_time(self) -> float:
        return air_time(self.mode, self.pdu_len)

    @property
    def slot_length(self) -> float:
        return slot_length(self.mode, self.pdu_len, guard=self.guard)


@dataclass
class RoundMetrics:
    round_no: int
    received: Dict[int, bool]
    first_slot: Dict[int, Optional[int]]  # 1-based reception ordinal
    latency: Dict[int, Optional[float]]
    success: bool
    active_slots: int


@dataclass
class Summary:
    rounds: int
    end_to_end_per: float
    per_node_delivery: Dict[int, float]
    avg_hop: float
    avg_latency: float
    avg_radio_time: float
    duty_cycle: float


def resolve_slot(
    listener: int,
    transmitters: Sequence[int],
    topology: Topology,
    table: LinkTable,
    cfg: SimConfig,
    jitter: np.ndarray,
    rng: np.random.Generator,
    same_data: bool = True,
) -> bool:
    """Bernoulli reception outcome of one listener in one slot."""
    arrivals = []
    for t in transmitters:
        g = topology.gains[t, listener]
        if g == NEG_INF:
            continue
        p_rx = cfg.tx_power[t] + g
        if cfg.fading_std > 0:
            p_rx += rng.normal(0.0, cfg.fading_std)
        arrivals.append((p_rx, t))
    if not arrivals:
        return False
    arrivals.sort(reverse=True)
    t_packet = cfg.air_time
    if len(arrivals) == 1:
        # a lone transmitter behaves like an infinitely strong capture
        q = LinkQuery(cfg.mode, same_data, delta_p=float(table.dp_axis[-1]),
                      delta_t=0.0, t_packet=t_packet, t_beat=math.inf)
    else:
        (p1, t1), (p2, t2) = arrivals[0], arrivals[1]
        dcfo = abs(topology.cfo[t1] - topology.cfo[t2])
        t_beat = math.inf if dcfo == 0 else 1.0 / dcfo
        q = LinkQuery(cfg.mode, same_data, delta_p=p1 - p2,
                      delta_t=abs(jitter[t1] - jitter[t2]),
                      t_packet=t_packet, t_beat=t_beat)
    p = reception_probability(table, q)
    return bool(rng.random() < p)


def run(cfg: SimConfig) -> Tuple[Summary, List[RoundMetrics]]:
    """Simulate cfg.rounds flooding rounds; deterministic for a given seed."""
    topo = cfg.topology
    pol = cfg.policy
    n = topo.n_nodes
    init = topo.initiator
    rng = np.random.default_rng(cfg.seed)
    policies = {
        v: nd.NodePolicy(
            n_tx=pol.n_tx, diameter=pol.diameter, wait_slots=pol.wait_slots,
            is_initiator=(v == init), resync_threshold=pol.resync_threshold,
            channel_count=pol.channel_count, round_period=pol.round_period,
            hop_sequence=pol.hop_sequence,
        )
        for v in range(n)
    }
    states = {}
    for v in range(n):
        if cfg.start_synced or v == init:
            states[v] = nd.NodeState(phase=nd.PHASE_SYNCED)
        else:
            states[v] = nd.NodeState(
                phase=nd.PHASE_SCANNING,
                scan_channel=pol.hop_sequence[0],
                scan_periods_left=2 * pol.channel_count,
            )

    rounds_log: List[RoundMetrics] = []
    hop_depth = np.zeros(n, dtype=int)  # drives accumulated jitter variance

    for r in range(cfg.rounds):
        for v in range(n):
            states[v] = nd.start_round(states[v], r)
        hop_depth[:] = 0
        first_slot: Dict[int, Optional[int]] = {v: None for v in range(n) if v != init}
        active = 0

        for s in range(pol.slots_per_round):
            actions = {v: nd.next_action(states[v], policies[v], s) for v in range(n)}
            txers = [v for v, (kind, _c) in actions.items() if kind == nd.ACT_TX]
            active += sum(1 for kind, _c in actions.values() if kind != nd.ACT_SLEEP)

            # fresh per-slot timing jitter, widening with hop depth
            jitter = rng.normal(0.0, 1.0, n) * topo.jitter_std * np.sqrt(
                np.maximum(hop_depth, 0)
            )
            jitter[init] = 0.0
            frame = encode_beacon(r & 0xFFFF, s & 0xFFFF)

            for v, (kind, chan) in actions.items():
                if kind != nd.ACT_RX:
                    continue
                if cfg.channel_erasure and rng.random() < cfg.channel_erasure.get(chan, 0.0):
                    continue
                on_channel = [t for t in txers if actions[t][1] == chan]
                if not on_channel:
                    continue
                if resolve_slot(v, on_channel, topo, cfg.table, cfg, jitter, rng):
                    states[v] = nd.handle_reception(states[v], frame, policies[v], s)
                    if first_slot.get(v) is None:
                        first_slot[v] = s + 1
                        hop_depth[v] = s + 1

            for v in txers:
                states[v] = nd.after_transmit(states[v])

        for v in range(n):
            if states[v].phase == nd.PHASE_SCANNING:
                states[v] = nd.scan_step(states[v], policies[v], rng)
            states[v] = nd.round_end(states[v], policies[v])

        received = {v: first_slot[v] is not None for v in first_slot}
        latency = {
            v: (first_slot[v] * cfg.slot_length if first_slot[v] else None)
            for v in first_slot
        }
        rounds_log.append(
            RoundMetrics(r, received, dict(first_slot), latency,
                         success=all(received.values()), active_slots=active)
        )

    return summarize(cfg, rounds_log), rounds_log


def summarize(cfg: SimConfig, rounds_log: Sequence[RoundMetrics]) -> Summary:
    n_rounds = len(rounds_log)
    listeners = sorted(rounds_log[0].received)
    delivery = {
        v: sum(m.received[v] for m in rounds_log) / n_rounds for v in listeners
    }
    failures = sum(1 for m in rounds_log if not m.success)
    per = failures / n_rounds
    hops = [m.first_slot[v] for m in rounds_log for v in listeners if m.first_slot[v]]
    avg_hop = float(np.mean(hops)) if hops else 0.0
    lat = [m.latency[v] for m in rounds_log for v in listeners if m.latency[v]]
    avg_latency = float(np.mean(lat)) if lat else 0.0
    r_avg = avg_radio_time(avg_hop, cfg.guard, cfg.air_time, cfg.policy.n_tx)
    dc = duty_cycle_est(avg_hop, per, cfg.air_time, cfg.guard, cfg.policy.n_tx,
                        cfg.policy.wait_slots, cfg.policy.round_period)
    return Summary(n_rounds, per, delivery, avg_hop, avg_latency, r_avg, dc)


def avg_radio_time(avg_hop_count: float, guard: float, air: float, n_tx: int) -> float:
    """Mean radio-on time per successful round: listen guard per hop plus
    one reception and n_tx retransmissions at full air time."""
    return avg_hop_count * guard + (n_tx + 1) * air


def duty_cycle_est(
    avg_hop_count: float,
    per: float,
    air: float,
    guard: float,
    n_tx: int,
    wait_slots: int,
    round_period: float,
) -> float:
    """Radio duty cycle, conservative on failures: a failed round listens
    for wait_slots full-length packets before giving up."""
    r_avg = avg_radio_time(avg_hop_count, guard, air, n_tx)
    on_time = r_avg * (1.0 - per) + wait_slots * air * per
    return on_time / round_period


def duty_cycle(summary: Summary, cfg: SimConfig) -> float:
    return duty_cycle_est(summary.avg_hop, summary.end_to_end_per, cfg.air_time,
                          cfg.guard, cfg.policy.n_tx, cfg.policy.wait_slots,
                          cfg.policy.round_period)


def average_power(
    avg_hop_count: float, air: float, guard: float, n_tx: int,
    p_tx: float, p_rx: float,
) -> float:
    """Per-round energy proxy: listen share at p_rx, n_tx transmissions at p_tx."""
    return (avg_hop_count * guard + air) * p_rx + n_tx * air * p_tx


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------

def load_topology(edge_path, node_path) -> Topology:
    """Edge list CSV `src,dst,gain_db` plus node CSV `id,cfo_hz,is_initiator`."""
    nodes = []
    with open(node_path, newline="") as fh:
        for row in csv.DictReader(fh):
            nodes.append((int(row["id"]), float(row["cfo_hz"]),
                          int(row["is_initiator"])))
    if not nodes:
        raise ValueError("node table is empty")
    nodes.sort()
    ids = [i for i, _, _ in nodes]
    if ids != list(range(len(ids))):
        raise ValueError("node ids must be contiguous from 0")
    initiators = [i for i, _, is_init in nodes if is_init]
    if len(initiators) != 1:
        raise ValueError("exactly one initiator required")
    edges = []
    with open(edge_path, newline="") as fh:
        for row in csv.DictReader(fh):
            edges.append((int(row["src"]), int(row["dst"]), float(row["gain_db"])))
    return Topology.build(edges, len(ids), cfo=[c for _, c, _ in nodes],
                          initiator=initiators[0], symmetric=False)


def write_round_log(path, rounds_log: Sequence[RoundMetrics], header_lines=()):
    listeners = sorted(rounds_log[0].received)
    with open(path, "w", newline="") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(["round", "success", "active_slots"]
                   + [f"first_slot_{v}" for v in listeners])
        for m in rounds_log:
            w.writerow([m.round_no, int(m.success), m.active_slots]
                       + [m.first_slot[v] if m.first_slot[v] else "" for v in listeners])
