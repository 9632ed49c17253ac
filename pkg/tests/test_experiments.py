import dataclasses

import pytest

from chaincast import (
    ConfigError,
    MeshTopology,
    SimParams,
    default_config,
    default_efficiency_config,
    default_hops_config,
    default_overhead_config,
    parse_config,
    run_efficiency_experiment,
    run_hops_experiment,
    run_overhead_experiment,
    sample_destinations,
    serpentine_nodes,
)
from chaincast.experiments import config_to_text
import random


def small_hops_config(tmp_path, **kw):
    base = dict(repeats=4, n_dst_groups=(4, 63), out_dir=str(tmp_path))
    base.update(kw)
    return dataclasses.replace(default_hops_config(), **base)


def test_config_text_roundtrip():
    cfg = default_efficiency_config()
    assert parse_config(config_to_text(cfg)) == cfg


def test_parse_config_overrides():
    cfg = parse_config(
        """
        experiment = hops
        seed = 9
        mesh_x = 4
        mesh_y = 4   # comment survives
        n_dst_groups = 2,3
        repeats = 2
        hop_latency = 3
        """
    )
    assert cfg.seed == 9
    assert cfg.mesh() == MeshTopology(4, 4, hop_latency=3)
    assert cfg.n_dst_groups == (2, 3)
    assert cfg.params.hop_latency == 3


def test_parse_config_rejects_unknown_keys():
    with pytest.raises(ConfigError):
        parse_config("experiment = hops\nwarp_speed = 9")
    with pytest.raises(ConfigError):
        parse_config("experiment = teleport")
    with pytest.raises(ConfigError):
        parse_config("experiment = hops\nseed = banana")


def test_sample_destinations_is_a_prefix_shuffle():
    pool = list(range(1, 64))
    rng = random.Random("x")
    picked = sample_destinations(rng, pool, 8)
    assert len(picked) == len(set(picked)) == 8
    assert set(picked) <= set(pool)
    # same seed, same draw
    assert picked == sample_destinations(random.Random("x"), pool, 8)


def test_serpentine_nodes_are_neighbour_chain():
    mesh = MeshTopology(4, 5)
    walk = serpentine_nodes(mesh)
    assert sorted(walk) == list(range(20))
    assert walk[0] == 0
    for a, b in zip(walk, walk[1:]):
        ax, ay = a % 4, a // 4
        bx, by = b % 4, b // 4
        assert abs(ax - bx) + abs(ay - by) == 1


def test_hops_experiment_reproducible(tmp_path):
    cfg = small_hops_config(tmp_path / "a")
    res1 = run_hops_experiment(cfg)
    first = res1.csv_path.read_bytes()
    res2 = run_hops_experiment(cfg)
    assert res2.csv_path.read_bytes() == first
    header = first.decode().splitlines()[0]
    assert header == "experiment,seed,trial,mechanism,n_dst,bytes,total_hops,avg_hops,total_cycles,eta"
    # 2 groups x 4 trials x 5 mechanisms rows
    assert len(first.decode().splitlines()) == 1 + 2 * 4 * 5


def test_hops_forced_group_is_constant(tmp_path):
    res = run_hops_experiment(small_hops_config(tmp_path))
    full = [t for t in res.trials if t.group == 63]
    assert len(full) == 4
    for mech in full[0].reports:
        vals = {t.reports[mech].avg_hops_per_dest for t in full}
        assert len(vals) == 1
    assert res.group_means[("chain_tsp", 63)] == 1.0
    assert res.group_means[("multicast", 63)] == 1.0


def test_hops_group_too_large_rejected(tmp_path):
    with pytest.raises(ConfigError):
        run_hops_experiment(small_hops_config(tmp_path, n_dst_groups=(64,)))


def test_efficiency_experiment_small(tmp_path):
    cfg = dataclasses.replace(
        default_efficiency_config(),
        n_dst_groups=(2, 5),
        sizes_bytes=(1024, 131072),
        out_dir=str(tmp_path),
    )
    res = run_efficiency_experiment(cfg)
    assert len(res.points) == 2 * 2 * 3
    for p in res.points:
        if p.mechanism == "unicast":
            assert p.eta <= 1.0
    big = {p.n_dst: p.eta for p in res.points if p.mechanism == "chainwrite" and p.n_bytes == 131072}
    small = {p.n_dst: p.eta for p in res.points if p.mechanism == "chainwrite" and p.n_bytes == 1024}
    for n in (2, 5):
        assert small[n] < big[n]  # control overhead amortises with size
    text = res.csv_path.read_text()
    assert "chainwrite" in text and "131072" in text


def test_efficiency_rejects_oversized_group(tmp_path):
    cfg = dataclasses.replace(
        default_efficiency_config(), n_dst_groups=(20,), out_dir=str(tmp_path)
    )
    with pytest.raises(ConfigError):
        run_efficiency_experiment(cfg)


def test_overhead_experiment_defaults(tmp_path):
    cfg = dataclasses.replace(default_overhead_config(), out_dir=str(tmp_path))
    res = run_overhead_experiment(cfg)
    assert res.fit.slope == pytest.approx(82.0, abs=1e-9)
    assert res.fit.r_squared == pytest.approx(1.0, abs=1e-12)
    assert [n for n, _ in res.rows] == list(range(1, 9))
    # the fitted slope is exactly the per-destination latency increment
    deltas = {b[1] - a[1] for a, b in zip(res.rows, res.rows[1:])}
    assert deltas == {82}
    # degenerate single-destination chain equals the P2P closed form
    p = cfg.params
    expected_p2p = (
        (p.hop_latency + p.cfg_frame_cycles)
        + (p.hop_latency + p.grant_proc_cycles)
        + (65536 // p.link_bandwidth + p.hop_latency)
        + (p.hop_latency + p.finish_proc_cycles)
    )
    assert res.rows[0][1] == expected_p2p


def test_overhead_summary_mentions_slope(tmp_path):
    cfg = dataclasses.replace(default_overhead_config(), out_dir=str(tmp_path))
    res = run_overhead_experiment(cfg)
    assert "82.000" in res.summary()


def test_default_config_lookup():
    assert default_config("hops") == default_hops_config()
    assert default_config("overhead").params == SimParams()
    with pytest.raises(ConfigError):
        default_config("nope")


def test_config_sidecar_written(tmp_path):
    cfg = small_hops_config(tmp_path)
    run_hops_experiment(cfg)
    sidecar = (tmp_path / "hops_config.txt").read_text()
    assert "seed = " in sidecar and "mesh_x = 8" in sidecar
