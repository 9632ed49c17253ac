import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chaincast import (
    DestinationSet,
    DirectedLink,
    MeshTopology,
    hop_report,
    multicast_tree,
    node_distance,
    unicast_hops,
    xy_route,
)

MESH_4 = MeshTopology(4, 4)
MESH_8 = MeshTopology(8, 8)

tasks = st.builds(
    lambda init, rest: DestinationSet(
        init, frozenset(d for d in rest if d != init) or frozenset({(init + 1) % 64})
    ),
    st.integers(0, 63),
    st.sets(st.integers(0, 63), min_size=1, max_size=16),
)


def test_multicast_tree_worked_example():
    task = DestinationSet(0, frozenset({3, 12, 15}))
    tree = multicast_tree(task, MESH_4)
    assert tree.total_hops == 9
    row = {DirectedLink(i, i + 1) for i in range(3)}
    col3 = {DirectedLink(3 + 4 * i, 3 + 4 * (i + 1)) for i in range(3)}
    col0 = {DirectedLink(4 * i, 4 * (i + 1)) for i in range(3)}
    assert tree.links == frozenset(row | col3 | col0)
    assert tree.root == 0
    assert tree.leaves == frozenset({3, 12, 15})


def test_multicast_single_destination():
    task = DestinationSet(0, frozenset({10}))
    assert multicast_tree(task, MESH_4).total_hops == node_distance(0, 10, MESH_4)


def test_multicast_full_grid():
    task = DestinationSet(0, frozenset(range(1, 64)))
    tree = multicast_tree(task, MESH_8)
    assert tree.total_hops == 63
    assert tree.total_hops / task.n_dst == 1.0


@given(tasks)
@settings(max_examples=80)
def test_multicast_bounds(task):
    tree = multicast_tree(task, MESH_8)
    uni = unicast_hops(task, MESH_8)
    # union of routes never exceeds their sum, and must reach the farthest leaf
    assert tree.total_hops <= uni
    assert tree.total_hops >= max(
        node_distance(task.initiator, d, MESH_8) for d in task.destinations
    )
    route_union = set()
    for d in task.destinations:
        route_union.update(xy_route(task.initiator, d, MESH_8))
    assert tree.links == frozenset(route_union)


def test_all_other_nodes_tree_is_exact():
    for x, y in ((3, 3), (4, 5), (8, 8), (2, 7)):
        mesh = MeshTopology(x, y)
        task = DestinationSet(0, frozenset(range(1, mesh.n_nodes)))
        assert multicast_tree(task, mesh).total_hops == mesh.n_nodes - 1


def test_unicast_examples():
    task = DestinationSet(0, frozenset({3, 12, 15}))
    assert unicast_hops(task, MESH_4) == 12
    assert unicast_hops(DestinationSet(0, frozenset({1})), MESH_4) == 1
    full = DestinationSet(0, frozenset(range(1, 64)))
    assert unicast_hops(full, MESH_8) == 448


def test_hop_report_examples():
    task = DestinationSet(0, frozenset({3, 12, 15}))
    assert hop_report(task, MESH_4, "multicast").avg_hops_per_dest == 3.0
    assert hop_report(task, MESH_4, "unicast").avg_hops_per_dest == 4.0
    assert hop_report(task, MESH_4, "chain_tsp").avg_hops_per_dest == 3.0


def test_hop_report_consistency():
    task = DestinationSet(0, frozenset({3, 12, 15}))
    rep = hop_report(task, MESH_4, "chain_greedy")
    assert rep.total_hops == 9
    assert rep.n_dst == 3
    assert rep.avg_hops_per_dest == rep.total_hops / rep.n_dst


def test_hop_report_unknown_mechanism():
    task = DestinationSet(0, frozenset({3}))
    with pytest.raises(ValueError):
        hop_report(task, MESH_4, "teleport")
