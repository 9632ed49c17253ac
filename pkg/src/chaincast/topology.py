"""2D-mesh topology, node addressing, and deterministic XY routing.

Node ids are row-major: id = y * x_dim + x, so node 0 sits at (0, 0) and the
highest id at the far corner. Links are directed; the reverse traversal of a
link is a distinct link.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

from .errors import InvalidNodeError


class Coord(NamedTuple):
    x: int
    y: int


class DirectedLink(NamedTuple):
    src: int
    dst: int


# An XY route: contiguous directed links, X-dimension hops before Y-dimension hops.
RoutePath = tuple[DirectedLink, ...]


@dataclass(frozen=True)
class MeshTopology:
    """An x_dim-by-y_dim mesh of clusters joined by unidirectional links."""

    x_dim: int
    y_dim: int
    link_bandwidth: int = 64  # bytes per cycle
    hop_latency: int = 1      # cycles per link traversal

    def __post_init__(self):
        if self.x_dim < 1 or self.y_dim < 1:
            raise ValueError("mesh dimensions must be >= 1")
        if self.link_bandwidth <= 0:
            raise ValueError("link_bandwidth must be positive")
        if self.hop_latency < 1:
            raise ValueError("hop_latency must be >= 1")

    @property
    def n_nodes(self) -> int:
        return self.x_dim * self.y_dim

    def contains(self, node: int) -> bool:
        return 0 <= node < self.n_nodes


def node_to_coord(node: int, mesh: MeshTopology) -> Coord:
    """Map a row-major node id to its mesh coordinate."""
    if not mesh.contains(node):
        raise InvalidNodeError(f"node {node} out of range for {mesh.x_dim}x{mesh.y_dim} mesh")
    return Coord(node % mesh.x_dim, node // mesh.x_dim)


def coord_to_node(coord: Coord, mesh: MeshTopology) -> int:
    """Inverse of node_to_coord."""
    x, y = coord
    if not (0 <= x < mesh.x_dim and 0 <= y < mesh.y_dim):
        raise InvalidNodeError(f"coordinate {coord} out of range for {mesh.x_dim}x{mesh.y_dim} mesh")
    return y * mesh.x_dim + x


def manhattan_distance(a: Coord, b: Coord) -> int:
    return abs(a.x - b.x) + abs(a.y - b.y)


def node_distance(a: int, b: int, mesh: MeshTopology) -> int:
    """Manhattan distance between two node ids; equals minimal hop count."""
    return manhattan_distance(node_to_coord(a, mesh), node_to_coord(b, mesh))


def xy_route(src: int, dst: int, mesh: MeshTopology) -> RoutePath:
    """Deterministic XY route: walk the X dimension to dst's column, then Y.

    The route is minimal (length equals the Manhattan distance) and empty when
    src == dst.
    """
    sx, sy = node_to_coord(src, mesh)
    dx, dy = node_to_coord(dst, mesh)
    links: list[DirectedLink] = []
    cur = src
    step = 1 if dx > sx else -1
    for _ in range(abs(dx - sx)):
        nxt = cur + step
        links.append(DirectedLink(cur, nxt))
        cur = nxt
    step = mesh.x_dim if dy > sy else -mesh.x_dim
    for _ in range(abs(dy - sy)):
        nxt = cur + step
        links.append(DirectedLink(cur, nxt))
        cur = nxt
    return tuple(links)
