"""Hop-count models of network-layer multicast and repeated unicast.

A multicast packet follows XY routes and is split only where routes to
different destinations diverge, so its footprint is the set-union of the
per-destination XY routes and each tree link is charged exactly once.
Unicast charges every destination its full Manhattan distance.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .scheduling import (
    ChainOrder,
    DestinationSet,
    chain_hops,
    greedy_order,
    naive_order,
    tsp_order,
)
from .topology import DirectedLink, MeshTopology, node_distance, xy_route


class HopMechanism(str, Enum):
    UNICAST = "unicast"
    MULTICAST = "multicast"
    CHAIN_NAIVE = "chain_naive"
    CHAIN_GREEDY = "chain_greedy"
    CHAIN_TSP = "chain_tsp"


@dataclass(frozen=True)
class MulticastTree:
    links: frozenset[DirectedLink]
    root: int
    leaves: frozenset[int]

    @property
    def total_hops(self) -> int:
        return len(self.links)


@dataclass(frozen=True)
class HopReport:
    mechanism: HopMechanism
    total_hops: int
    n_dst: int
    avg_hops_per_dest: float


def multicast_tree(task: DestinationSet, mesh: MeshTopology) -> MulticastTree:
    """Union of the XY routes from the initiator to every destination."""
    task.validate_for(mesh)
    links: set[DirectedLink] = set()
    for dest in task.sorted_destinations():
        links.update(xy_route(task.initiator, dest, mesh))
    return MulticastTree(frozenset(links), task.initiator, frozenset(task.destinations))


def unicast_hops(task: DestinationSet, mesh: MeshTopology) -> int:
    """Sum of Manhattan distances from the initiator to each destination."""
    task.validate_for(mesh)
    return sum(node_distance(task.initiator, d, mesh) for d in task.destinations)


def hop_report(
    task: DestinationSet,
    mesh: MeshTopology,
    mechanism: HopMechanism | str,
    order: ChainOrder | None = None,
) -> HopReport:
    """Total and per-destination hop counts for one transfer mechanism.

    Chain mechanisms compute their visit order internally (chain_tsp uses the
    heuristic solver, which scales to full-mesh destination sets); pass
    `order` to price a precomputed chain instead.
    """
    mechanism = HopMechanism(mechanism)
    if mechanism is HopMechanism.UNICAST:
        total = unicast_hops(task, mesh)
    elif mechanism is HopMechanism.MULTICAST:
        total = multicast_tree(task, mesh).total_hops
    else:
        if order is None:
            if mechanism is HopMechanism.CHAIN_NAIVE:
                order = naive_order(task)
            elif mechanism is HopMechanism.CHAIN_GREEDY:
                order = greedy_order(task, mesh)
            else:
                order = tsp_order(task, mesh, mode="heuristic")
        total = chain_hops(order, task.initiator, mesh)
    return HopReport(mechanism, total, task.n_dst, total / task.n_dst)
