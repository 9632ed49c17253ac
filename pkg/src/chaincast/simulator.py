"""Deterministic discrete-event execution of chained transfers, plus
behavioural unicast and multicast latency models.

A chained transfer runs in four disjoint phases:

  1. cfg dispatch    -- the initiator serialises one config packet per
                        follower and injects them in parallel; follower f is
                        configured at hops(initiator, f) * hop_latency +
                        n_frames * cfg_frame_cycles. The phase ends when the
                        last config lands.
  2. grant           -- the tail answers its config with a Grant that walks
                        the chain backward; every chain node (tail included)
                        spends grant_proc_cycles before sending upstream.
  3. data            -- on Grant the initiator streams frames at
                        link_bandwidth; every non-tail follower cuts each
                        frame through to its successor after fwd_proc_cycles
                        while keeping a local copy.
  4. finish          -- the tail's Finish walks backward like the Grant with
                        finish_proc_cycles per node; the run ends when the
                        initiator receives it.

The engine keeps the phases disjoint: the tail's Grant is released only once
every config has landed, which makes the per-phase accounting exact and the
report's phase breakdown tile the total. The network is contention-free, so a
data stream is simulated as its first/last-frame envelope (the interior
frames cannot interact with anything); per-endpoint byte counters are settled
when the envelope closes.

Event processing is single-threaded and totally ordered by (cycle, insertion
sequence); identical inputs always produce identical reports and traces.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, NamedTuple

from .errors import ProtocolError
from .protocol import (
    AccessPattern,
    ChainNodeConfig,
    Role,
    build_chain_configs,
    encode_cfg,
    validate_chain,
)
from .scheduling import ChainOrder, DestinationSet
from .topology import MeshTopology, node_distance, node_to_coord


class Mechanism(str, Enum):
    UNICAST = "unicast"
    MULTICAST = "multicast"
    CHAINWRITE = "chainwrite"
    LOOPBACK = "loopback"


class Mode(str, Enum):
    LOOPBACK = "loopback"
    READ = "read"
    WRITE = "write"
    CHAINWRITE = "chainwrite"


class EndpointState(Enum):
    IDLE = "idle"
    CFG_RECEIVED = "cfg_received"
    AWAIT_GRANT = "await_grant"
    GRANTED = "granted"
    RECV_FWD_DATA = "recv_fwd_data"
    AWAIT_FINISH = "await_finish"
    DONE = "done"


class EventKind(str, Enum):
    CFG = "cfg"
    GRANT = "grant"
    DATA_START = "data_start"
    DATA_END = "data_end"
    FINISH = "finish"


class Event(NamedTuple):
    kind: EventKind
    node: int
    cfg: ChainNodeConfig | None = None


class Emission(NamedTuple):
    """An endpoint's reaction: send `kind` to `target` after `proc` cycles,
    not earlier than `not_before` (used when a busy node holds a Grant)."""

    kind: "EventKind | str"
    target: int | None
    proc: int
    not_before: int = 0


# Marker emission: the initiator starts streaming the payload into the chain.
_STREAM = "stream"


@dataclass(frozen=True)
class SimParams:
    """Timing model. The neutral defaults reproduce the measured setup cost
    of 82 cycles per added destination on neighbour chains (hop_latency +
    grant + forward + finish per destination plus the config hop); the
    bundled efficiency study overrides the per-node costs downward (see
    experiments.EFFICIENCY_PARAMS) because it models a handshake-limited
    system instead."""

    hop_latency: int = 1
    link_bandwidth: int = 64
    cfg_frame_cycles: int = 1
    grant_proc_cycles: int = 26
    fwd_proc_cycles: int = 26
    finish_proc_cycles: int = 26
    unicast_setup_cycles: int = 16
    multicast_setup_base: int = 8
    multicast_setup_per_dst: int = 10
    node_busy_until: Mapping[int, int] = field(default_factory=dict)

    def __post_init__(self):
        numeric = (
            self.hop_latency,
            self.cfg_frame_cycles,
            self.grant_proc_cycles,
            self.fwd_proc_cycles,
            self.finish_proc_cycles,
            self.unicast_setup_cycles,
            self.multicast_setup_base,
            self.multicast_setup_per_dst,
        )
        if any(v < 0 for v in numeric):
            raise ValueError("timing parameters must be non-negative")
        if self.link_bandwidth <= 0:
            raise ValueError("link_bandwidth must be positive")

    @classmethod
    def from_mesh(cls, mesh: MeshTopology, **overrides) -> "SimParams":
        base = cls(hop_latency=mesh.hop_latency, link_bandwidth=mesh.link_bandwidth)
        return replace(base, **overrides) if overrides else base


@dataclass(frozen=True)
class TransferTask:
    initiator: int
    destinations: DestinationSet | None
    transfer_bytes: int
    mechanism: Mechanism
    order: ChainOrder | None = None
    pattern: AccessPattern | None = None
    task_id: int = 0

    def __post_init__(self):
        if self.transfer_bytes <= 0:
            raise ValueError("transfer_bytes must be positive")
        if self.mechanism is Mechanism.CHAINWRITE:
            if self.order is None:
                raise ValueError("chainwrite requires a chain order")
            if self.destinations is None:
                # Degenerate local-loopback chain: no remote participants.
                if self.order.visit:
                    raise ValueError("chain order given without a destination set")
            elif sorted(self.order.visit) != self.destinations.sorted_destinations():
                raise ValueError("order is not a permutation of the destinations")
        elif self.mechanism is not Mechanism.LOOPBACK and self.destinations is None:
            raise ValueError(f"{self.mechanism.value} requires a destination set")
        if self.destinations is not None and self.destinations.initiator != self.initiator:
            raise ValueError("task initiator differs from the destination set's")


class PhaseCycles(NamedTuple):
    cfg: int
    grant: int
    data: int
    finish: int


class TraceEntry(NamedTuple):
    cycle: int
    node: int
    event: str


@dataclass(frozen=True)
class LatencyReport:
    mechanism: Mechanism
    total_cycles: int
    phase_cycles: PhaseCycles
    per_dest_delivery: dict[int, int]
    trace: tuple[TraceEntry, ...] = ()


@dataclass
class Endpoint:
    """Protocol automaton of one chain participant."""

    node: int
    mode: Mode = Mode.CHAINWRITE
    state: EndpointState = EndpointState.IDLE
    cfg: ChainNodeConfig | None = None
    bytes_received: int = 0
    bytes_forwarded: int = 0
    ready_at: int = 0


def step_endpoint(
    ep: Endpoint, event: Event, now: int, params: SimParams
) -> list[Emission]:
    """Advance one endpoint's state machine; returns what it emits.

    Raises ProtocolError when the event is illegal in the current state.
    """
    kind = event.kind
    state = ep.state
    role = ep.cfg.role if ep.cfg is not None else None

    if kind is EventKind.CFG:
        if state is not EndpointState.IDLE:
            raise ProtocolError(f"node {ep.node}: cfg while {state.value}")
        ep.cfg = event.cfg
        ep.state = EndpointState.CFG_RECEIVED
        if ep.cfg.role is Role.TAIL:
            # The tail needs nothing further before granting.
            ep.state = EndpointState.GRANTED
            hold = max(0, ep.ready_at - now)
            return [Emission(EventKind.GRANT, ep.cfg.prev, params.grant_proc_cycles, now + hold)]
        ep.state = EndpointState.AWAIT_GRANT
        return []

    if kind is EventKind.GRANT:
        if state is not EndpointState.AWAIT_GRANT:
            raise ProtocolError(f"node {ep.node}: grant while {state.value}")
        if role is Role.INITIATOR:
            ep.state = EndpointState.AWAIT_FINISH
            return [Emission(_STREAM, ep.cfg.next, 0)]
        # A busy middle node holds the Grant until it is ready.
        ep.state = EndpointState.GRANTED
        hold = max(0, ep.ready_at - now)
        return [Emission(EventKind.GRANT, ep.cfg.prev, params.grant_proc_cycles, now + hold)]

    if kind is EventKind.DATA_START:
        if state is not EndpointState.GRANTED:
            raise ProtocolError(f"node {ep.node}: data while {state.value}")
        ep.state = EndpointState.RECV_FWD_DATA
        if role is Role.MIDDLE:
            return [Emission(EventKind.DATA_START, ep.cfg.next, params.fwd_proc_cycles)]
        return []

    if kind is EventKind.DATA_END:
        if state is not EndpointState.RECV_FWD_DATA:
            raise ProtocolError(f"node {ep.node}: data end while {state.value}")
        ep.bytes_received = ep.cfg.transfer_bytes
        if role is Role.MIDDLE:
            # On-the-fly duplication: everything received is already forwarded.
            ep.bytes_forwarded = ep.bytes_received
            ep.state = EndpointState.AWAIT_FINISH
            return [Emission(EventKind.DATA_END, ep.cfg.next, params.fwd_proc_cycles)]
        ep.state = EndpointState.DONE
        return [Emission(EventKind.FINISH, ep.cfg.prev, params.finish_proc_cycles)]

    if kind is EventKind.FINISH:
        if state is not EndpointState.AWAIT_FINISH:
            raise ProtocolError(f"node {ep.node}: finish while {state.value}")
        ep.state = EndpointState.DONE
        if role is Role.MIDDLE:
            return [Emission(EventKind.FINISH, ep.cfg.prev, params.finish_proc_cycles)]
        return []

    raise ProtocolError(f"node {ep.node}: unknown event {kind}")


def _frames_for(n_bytes: int, bandwidth: int) -> int:
    return -(-n_bytes // bandwidth)


def _loopback_report(task: TransferTask, params: SimParams, mechanism: Mechanism) -> LatencyReport:
    data = _frames_for(task.transfer_bytes, params.link_bandwidth)
    return LatencyReport(mechanism, data, PhaseCycles(0, 0, data, 0), {})


def run_chainwrite_detailed(
    task: TransferTask,
    mesh: MeshTopology,
    params: SimParams,
    trace: bool = False,
) -> tuple[LatencyReport, dict[int, Endpoint]]:
    """Event-driven chained transfer; also returns the final endpoints."""
    if task.mechanism is not Mechanism.CHAINWRITE:
        raise ValueError("task mechanism must be chainwrite")
    if task.destinations is None or not task.order.visit:
        return _loopback_report(task, params, Mechanism.CHAINWRITE), {}
    task.destinations.validate_for(mesh)

    pattern = task.pattern or AccessPattern.contiguous(task.transfer_bytes)
    configs = build_chain_configs(
        task.destinations, task.order, task.transfer_bytes, pattern, task.task_id
    )
    validate_chain(configs)
    order = list(task.order.visit)
    n_frames = len(encode_cfg(configs[1], link_width_bits=params.link_bandwidth * 8).frames)

    hl = params.hop_latency
    arrivals = {
        cfg.node: node_distance(task.initiator, cfg.node, mesh) * hl
        + n_frames * params.cfg_frame_cycles
        for cfg in configs[1:]
    }
    cfg_end = max(arrivals.values())

    endpoints = {cfg.node: Endpoint(node=cfg.node) for cfg in configs}
    for ep in endpoints.values():
        ep.ready_at = params.node_busy_until.get(ep.node, 0)
    initiator = endpoints[task.initiator]
    initiator.cfg = configs[0]
    initiator.state = EndpointState.AWAIT_GRANT  # local dispatch at cycle 0

    queue: list[tuple[int, int, Event]] = []
    seq = 0

    def schedule(time: int, event: Event) -> None:
        nonlocal seq
        heapq.heappush(queue, (time, seq, event))
        seq += 1

    cfg_by_node = {cfg.node: cfg for cfg in configs}
    for node in order:
        schedule(arrivals[node], Event(EventKind.CFG, node, cfg_by_node[node]))

    data_frames = _frames_for(task.transfer_bytes, params.link_bandwidth)
    tail_node = order[-1]
    trace_log: list[TraceEntry] = []
    grant_time = data_end = total = None
    deliveries: dict[int, int] = {}

    while queue:
        now, _, event = heapq.heappop(queue)
        if trace:
            trace_log.append(TraceEntry(now, event.node, event.kind.value))
        ep = endpoints[event.node]
        emissions = step_endpoint(ep, event, now, params)

        if event.kind is EventKind.DATA_END:
            deliveries[event.node] = now
            if event.node == tail_node:
                data_end = now
        elif event.kind is EventKind.GRANT and event.node == task.initiator:
            grant_time = now
        elif event.kind is EventKind.FINISH and event.node == task.initiator:
            total = now

        for em in emissions:
            if em.kind == _STREAM:
                # Frame f leaves the initiator at now + f; simulate the
                # envelope of the stream toward the first chain node.
                seg = node_distance(task.initiator, em.target, mesh) * hl
                schedule(now + 1 + seg, Event(EventKind.DATA_START, em.target))
                schedule(now + data_frames + seg, Event(EventKind.DATA_END, em.target))
                continue
            release = max(now, em.not_before)
            if em.kind is EventKind.GRANT and ep.cfg.role is Role.TAIL:
                # Phase barrier: the first backward signal waits for the
                # config dispatch to quiesce.
                release = max(release, cfg_end)
            send = release + em.proc
            flight = node_distance(ep.node, em.target, mesh) * hl
            schedule(send + flight, Event(em.kind, em.target))

    if total is None or any(ep.state is not EndpointState.DONE for ep in endpoints.values()):
        raise AssertionError("simulation deadlocked: event queue drained before completion")

    phases = PhaseCycles(
        cfg=cfg_end,
        grant=grant_time - cfg_end,
        data=data_end - grant_time,
        finish=total - data_end,
    )
    report = LatencyReport(
        Mechanism.CHAINWRITE, total, phases, deliveries, tuple(trace_log)
    )
    return report, endpoints


def run_chainwrite(
    task: TransferTask, mesh: MeshTopology, params: SimParams, trace: bool = False
) -> LatencyReport:
    report, _ = run_chainwrite_detailed(task, mesh, params, trace)
    return report


def run_unicast(task: TransferTask, mesh: MeshTopology, params: SimParams) -> LatencyReport:
    """Repeated point-to-point copies, fully serialised at the source."""
    if task.mechanism is not Mechanism.UNICAST:
        raise ValueError("task mechanism must be unicast")
    task.destinations.validate_for(mesh)
    frames = _frames_for(task.transfer_bytes, params.link_bandwidth)
    now = 0
    deliveries = {}
    for dest in task.destinations.sorted_destinations():
        now += (
            params.unicast_setup_cycles
            + frames
            + node_distance(task.initiator, dest, mesh) * params.hop_latency
        )
        deliveries[dest] = now
    n = task.destinations.n_dst
    setup = n * params.unicast_setup_cycles
    return LatencyReport(
        Mechanism.UNICAST, now, PhaseCycles(setup, 0, now - setup, 0), deliveries
    )


def run_multicast(task: TransferTask, mesh: MeshTopology, params: SimParams) -> LatencyReport:
    """Router-replicated transfer: one stream, forked along the XY tree."""
    if task.mechanism is not Mechanism.MULTICAST:
        raise ValueError("task mechanism must be multicast")
    task.destinations.validate_for(mesh)
    frames = _frames_for(task.transfer_bytes, params.link_bandwidth)
    n = task.destinations.n_dst
    setup = params.multicast_setup_base + params.multicast_setup_per_dst * n
    deliveries = {
        dest: setup
        + frames
        + node_distance(task.initiator, dest, mesh) * params.hop_latency
        for dest in task.destinations.sorted_destinations()
    }
    total = max(deliveries.values())
    return LatencyReport(
        Mechanism.MULTICAST, total, PhaseCycles(setup, 0, total - setup, 0), deliveries
    )


def run_transfer(
    task: TransferTask, mesh: MeshTopology, params: SimParams, trace: bool = False
) -> LatencyReport:
    """Dispatch a task to the model matching its mechanism."""
    if task.mechanism is Mechanism.CHAINWRITE:
        return run_chainwrite(task, mesh, params, trace)
    if task.mechanism is Mechanism.UNICAST:
        return run_unicast(task, mesh, params)
    if task.mechanism is Mechanism.MULTICAST:
        return run_multicast(task, mesh, params)
    if task.mechanism is Mechanism.LOOPBACK:
        node_to_coord(task.initiator, mesh)
        return _loopback_report(task, params, Mechanism.LOOPBACK)
    raise ValueError(f"unknown mechanism {task.mechanism}")
