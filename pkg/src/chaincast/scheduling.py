"""Chain-order scheduling for point-to-multipoint transfers.

Three strategies produce the order in which a chained transfer visits its
destinations:

* naive      -- ascending node id.
* greedy     -- incremental construction that prefers the shortest next leg
                whose XY path reuses no already-traversed directed link,
                falling back to the plain shortest leg when every candidate
                overlaps.
* tsp        -- open-path travelling-salesman over the XY hop-distance matrix:
                the start is pinned at the initiator, the end is free.
                "exact" mode is Held-Karp dynamic programming and is globally
                optimal up to EXACT_TSP_MAX destinations; "heuristic" mode is
                nearest-neighbour construction followed by first-improvement
                2-opt and never returns a worse order than nearest-neighbour
                alone.

All strategies are deterministic: ties are broken toward the lowest node id.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import inf

from .errors import CapacityError
from .topology import MeshTopology, node_distance, node_to_coord

# Held-Karp table size grows as 2^n * n^2; 16 destinations is the practical
# ceiling for an interactive tool.
EXACT_TSP_MAX = 16


@dataclass(frozen=True)
class DestinationSet:
    """A P2MP job: one initiator node and a non-empty set of target nodes."""

    initiator: int
    destinations: frozenset[int]

    def __post_init__(self):
        object.__setattr__(self, "destinations", frozenset(self.destinations))
        if not self.destinations:
            raise ValueError("destination set must not be empty")
        if self.initiator in self.destinations:
            raise ValueError("initiator cannot be one of its own destinations")

    @property
    def n_dst(self) -> int:
        return len(self.destinations)

    def sorted_destinations(self) -> list[int]:
        return sorted(self.destinations)

    def validate_for(self, mesh: MeshTopology) -> None:
        for node in (self.initiator, *self.destinations):
            node_to_coord(node, mesh)  # raises InvalidNodeError


@dataclass(frozen=True)
class ChainOrder:
    """A visit order over a destination set."""

    visit: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "visit", tuple(self.visit))

    def __iter__(self):
        return iter(self.visit)

    def __len__(self):
        return len(self.visit)


@dataclass(frozen=True)
class GreedyStep:
    """One greedy selection: the node chosen, its leg length, and whether the
    leg was overlap-free or taken via the shortest-path fallback."""

    node: int
    hops: int
    fallback: bool
    overlap_free: bool


@dataclass(frozen=True)
class GreedySchedule:
    order: ChainOrder
    steps: tuple[GreedyStep, ...]


def distance_matrix(nodes: list[int], mesh: MeshTopology) -> list[list[int]]:
    """Pairwise XY hop counts. XY routes are minimal, so entries equal the
    Manhattan distance and no path is ever materialised here."""
    coords = [node_to_coord(n, mesh) for n in nodes]
    return [
        [abs(a.x - b.x) + abs(a.y - b.y) for b in coords]
        for a in coords
    ]


def chain_hops(order: ChainOrder, initiator: int, mesh: MeshTopology) -> int:
    """Total hops of the chain initiator -> v1 -> ... -> vN."""
    total = 0
    prev = initiator
    for node in order:
        total += node_distance(prev, node, mesh)
        prev = node
    return total


def naive_order(task: DestinationSet) -> ChainOrder:
    """Destinations in ascending node-id order."""
    return ChainOrder(tuple(task.sorted_destinations()))


def _xy_links(src: int, dst: int, x_dim: int) -> list[tuple[int, int]]:
    # Hot-path twin of topology.xy_route over raw node ids; the (src, dst)
    # tuples compare equal to DirectedLink instances.
    links = []
    sx, sy = src % x_dim, src // x_dim
    dx, dy = dst % x_dim, dst // x_dim
    cur = src
    step = 1 if dx > sx else -1
    for _ in range(abs(dx - sx)):
        nxt = cur + step
        links.append((cur, nxt))
        cur = nxt
    step = x_dim if dy > sy else -x_dim
    for _ in range(abs(dy - sy)):
        nxt = cur + step
        links.append((cur, nxt))
        cur = nxt
    return links


def greedy_schedule(
    task: DestinationSet, mesh: MeshTopology, start_rule: str = "min_id"
) -> GreedySchedule:
    """Greedy chain construction with per-step selection metadata.

    The first chain node is the destination with the minimum id ("min_id");
    pass start_rule="nearest" to start from the destination closest to the
    initiator instead. Each later step scans the remaining destinations in
    ascending id and picks the shortest XY leg from the current chain tail
    that shares no directed link with the union of all previously traversed
    legs (including the initiator's leg to the first node). When every
    candidate overlaps, the step falls back to the plain shortest leg.
    """
    task.validate_for(mesh)
    x_dim = mesh.x_dim
    dests = task.sorted_destinations()
    if start_rule == "min_id":
        start = dests[0]
    elif start_rule == "nearest":
        start = min(dests, key=lambda d: (node_distance(task.initiator, d, mesh), d))
    else:
        raise ValueError(f"unknown start_rule {start_rule!r}")

    first_leg = _xy_links(task.initiator, start, x_dim)
    order = [start]
    steps = [GreedyStep(start, len(first_leg), fallback=False, overlap_free=True)]
    used: set[tuple[int, int]] = set(first_leg)
    remaining = [d for d in dests if d != start]
    tail = start
    hop_bound = mesh.x_dim + mesh.y_dim

    while remaining:
        best = None
        best_hops = hop_bound
        best_path = None
        for cand in remaining:
            path = _xy_links(tail, cand, x_dim)
            if len(path) < best_hops and not any(l in used for l in path):
                best, best_hops, best_path = cand, len(path), path
        fallback = best is None
        if fallback:
            best = min(remaining, key=lambda c: (node_distance(tail, c, mesh), c))
            best_path = _xy_links(tail, best, x_dim)
        overlap_free = not any(l in used for l in best_path)
        steps.append(GreedyStep(best, len(best_path), fallback, overlap_free))
        used.update(best_path)
        remaining.remove(best)
        order.append(best)
        tail = best

    return GreedySchedule(ChainOrder(tuple(order)), tuple(steps))


def greedy_order(
    task: DestinationSet, mesh: MeshTopology, start_rule: str = "min_id"
) -> ChainOrder:
    return greedy_schedule(task, mesh, start_rule).order


def _route_cost(route: list[int], dist: list[list[int]]) -> int:
    total = 0
    cur = 0
    for pos in route:
        total += dist[cur][pos]
        cur = pos
    return total


def _nearest_neighbor(dist: list[list[int]], n: int) -> list[int]:
    unvisited = list(range(1, n + 1))
    route = []
    cur = 0
    while unvisited:
        nxt = min(unvisited, key=lambda p: (dist[cur][p], p))
        route.append(nxt)
        unvisited.remove(nxt)
        cur = nxt
    return route


def _two_opt(route: list[int], dist: list[list[int]]) -> list[int]:
    # First-improvement 2-opt on the open path (position 0 = initiator, end
    # free). Reversing a suffix only rewires the edge entering it. Costs are
    # integers and strictly decrease, so the loop terminates.
    route = list(route)
    n = len(route)
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            prev = route[i - 1] if i else 0
            a = route[i]
            for j in range(i + 1, n):
                b = route[j]
                delta = dist[prev][b] - dist[prev][a]
                if j + 1 < n:
                    q = route[j + 1]
                    delta += dist[a][q] - dist[b][q]
                if delta < 0:
                    route[i : j + 1] = reversed(route[i : j + 1])
                    improved = True
                    break
            if improved:
                break
    return route


def _held_karp(dist: list[list[int]], n: int) -> list[int]:
    # Open-path Held-Karp: cost[mask][j] = cheapest walk from the initiator
    # through exactly the destinations in mask, ending at destination j.
    size = 1 << n
    full = size - 1
    cost = [[inf] * n for _ in range(size)]
    parent = [[-1] * n for _ in range(size)]
    for j in range(n):
        cost[1 << j][j] = dist[0][j + 1]
    for mask in range(1, size):
        crow = cost[mask]
        for last in range(n):
            c = crow[last]
            if c is inf or not (mask >> last) & 1:
                continue
            drow = dist[last + 1]
            rem = full & ~mask
            while rem:
                kb = rem & -rem
                k = kb.bit_length() - 1
                nm = mask | kb
                nc = c + drow[k + 1]
                if nc < cost[nm][k]:
                    cost[nm][k] = nc
                    parent[nm][k] = last
                rem ^= kb
    best_last = min(range(n), key=lambda j: (cost[full][j], j))
    route = []
    mask, j = full, best_last
    while True:
        route.append(j)
        if mask == 1 << j:
            break
        pj = parent[mask][j]
        mask ^= 1 << j
        j = pj
    route.reverse()
    return [p + 1 for p in route]


def nearest_neighbor_order(task: DestinationSet, mesh: MeshTopology) -> ChainOrder:
    """The plain nearest-neighbour construction (the 2-opt starting point)."""
    task.validate_for(mesh)
    nodes = [task.initiator] + task.sorted_destinations()
    dist = distance_matrix(nodes, mesh)
    route = _nearest_neighbor(dist, len(nodes) - 1)
    return ChainOrder(tuple(nodes[p] for p in route))


def tsp_order(task: DestinationSet, mesh: MeshTopology, mode: str = "exact") -> ChainOrder:
    """Open-path TSP order: minimise total hops of initiator -> v1 -> ... -> vN.

    mode="exact" solves to global optimality (up to EXACT_TSP_MAX
    destinations); mode="heuristic" runs nearest-neighbour plus 2-opt.
    """
    task.validate_for(mesh)
    nodes = [task.initiator] + task.sorted_destinations()
    dist = distance_matrix(nodes, mesh)
    n = len(nodes) - 1
    if mode == "exact":
        if n > EXACT_TSP_MAX:
            raise CapacityError(
                f"exact TSP supports at most {EXACT_TSP_MAX} destinations "
                f"(got {n}); use mode='heuristic'"
            )
        route = _held_karp(dist, n)
    elif mode == "heuristic":
        route = _two_opt(_nearest_neighbor(dist, n), dist)
    else:
        raise ValueError(f"unknown tsp mode {mode!r}")
    return ChainOrder(tuple(nodes[p] for p in route))
