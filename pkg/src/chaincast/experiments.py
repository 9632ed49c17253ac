"""Seeded, reproducible studies: hop counts, P2MP efficiency, setup overhead.

Three bundled studies mirror the evaluation questions the toolkit answers:

* hops       -- average traversed links per destination for unicast,
                multicast, and the three chain orderings, on an 8x8 mesh with
                randomly drawn destination groups.
* efficiency -- measured P2MP efficiency (eta) of unicast, multicast, and
                chained transfers across transfer sizes and destination
                counts on a 4x5 mesh.
* overhead   -- total latency of a fixed-size chained transfer versus chain
                length on a neighbour chain, with a least-squares fit of the
                per-destination setup cost.

Every study takes an ExperimentConfig, draws destinations with a string-seeded
Mersenne Twister via a Fisher-Yates prefix, writes one CSV (plus a config
sidecar) under the configured output directory, and is byte-reproducible for
a fixed config. Rows are emitted in deterministic trial order.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from statistics import fmean

from .errors import ConfigError
from .metrics import EfficiencyPoint, RegressionFit, eta_p2mp, fit_linear
from .multicast import HopMechanism, HopReport, hop_report
from .scheduling import ChainOrder, DestinationSet, tsp_order
from .simulator import Mechanism, SimParams, TransferTask, run_transfer
from .topology import MeshTopology

CSV_COLUMNS = (
    "experiment",
    "seed",
    "trial",
    "mechanism",
    "n_dst",
    "bytes",
    "total_hops",
    "avg_hops",
    "total_cycles",
    "eta",
)

HOP_MECHANISMS = (
    HopMechanism.UNICAST,
    HopMechanism.MULTICAST,
    HopMechanism.CHAIN_NAIVE,
    HopMechanism.CHAIN_GREEDY,
    HopMechanism.CHAIN_TSP,
)

# Per-node handshake costs used by the efficiency study; see SimParams for
# why these differ from the neutral defaults.
EFFICIENCY_PARAMS = SimParams(
    grant_proc_cycles=2, fwd_proc_cycles=2, finish_proc_cycles=2
)

DEFAULT_SEED = 2024


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    mesh_x: int
    mesh_y: int
    seed: int = DEFAULT_SEED
    repeats: int = 1
    n_dst_groups: tuple[int, ...] = ()
    sizes_bytes: tuple[int, ...] = ()
    initiator: int = 0
    params: SimParams = field(default_factory=SimParams)
    out_dir: str = "out"

    def __post_init__(self):
        if self.repeats < 1:
            raise ConfigError("repeats must be >= 1")

    def mesh(self) -> MeshTopology:
        return MeshTopology(
            self.mesh_x,
            self.mesh_y,
            link_bandwidth=self.params.link_bandwidth,
            hop_latency=max(1, self.params.hop_latency),
        )


def default_hops_config() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="hops",
        mesh_x=8,
        mesh_y=8,
        repeats=128,
        n_dst_groups=(4, 8, 16, 24, 32, 40, 48, 63),
    )


def default_efficiency_config() -> ExperimentConfig:
    return ExperimentConfig(
        experiment="efficiency",
        mesh_x=4,
        mesh_y=5,
        n_dst_groups=tuple(range(2, 17)),
        sizes_bytes=tuple(1024 * (1 << i) for i in range(8)),
        params=EFFICIENCY_PARAMS,
    )


def default_overhead_config() -> ExperimentConfig:
    # A single row of nodes keeps every added destination geometrically
    # identical (one new hop in each phase), so latency is exactly affine in
    # the chain length.
    return ExperimentConfig(
        experiment="overhead",
        mesh_x=9,
        mesh_y=1,
        n_dst_groups=tuple(range(1, 9)),
        sizes_bytes=(65536,),
    )


_DEFAULTS = {
    "hops": default_hops_config,
    "efficiency": default_efficiency_config,
    "overhead": default_overhead_config,
}

_INT_KEYS = {"mesh_x", "mesh_y", "seed", "repeats", "initiator"}
_LIST_KEYS = {"n_dst_groups", "sizes_bytes"}
_PARAM_KEYS = {f.name for f in fields(SimParams)} - {"node_busy_until"}
_STR_KEYS = {"experiment", "out_dir"}


def default_config(experiment: str) -> ExperimentConfig:
    try:
        return _DEFAULTS[experiment]()
    except KeyError:
        raise ConfigError(f"unknown experiment {experiment!r}") from None


def parse_config(text: str, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse the flat key=value config format, overriding `base` (or the
    defaults of the experiment the text names)."""
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    if base is None:
        base = default_config(entries.get("experiment", ""))
    cfg_updates: dict[str, object] = {}
    param_updates: dict[str, int] = {}
    for key, value in entries.items():
        try:
            if key in _INT_KEYS:
                cfg_updates[key] = int(value)
            elif key in _LIST_KEYS:
                cfg_updates[key] = tuple(int(v) for v in value.split(",") if v.strip())
            elif key in _PARAM_KEYS:
                param_updates[key] = int(value)
            elif key in _STR_KEYS:
                cfg_updates[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    if param_updates:
        cfg_updates["params"] = replace(base.params, **param_updates)
    return replace(base, **cfg_updates)


def load_config(path: str | Path, experiment: str | None = None) -> ExperimentConfig:
    base = default_config(experiment) if experiment else None
    cfg = parse_config(Path(path).read_text(), base)
    if experiment and cfg.experiment != experiment:
        raise ConfigError(
            f"config file is for experiment {cfg.experiment!r}, expected {experiment!r}"
        )
    return cfg


def config_to_text(cfg: ExperimentConfig) -> str:
    lines = [
        f"experiment = {cfg.experiment}",
        f"mesh_x = {cfg.mesh_x}",
        f"mesh_y = {cfg.mesh_y}",
        f"seed = {cfg.seed}",
        f"repeats = {cfg.repeats}",
        f"initiator = {cfg.initiator}",
        f"n_dst_groups = {','.join(map(str, cfg.n_dst_groups))}",
        f"sizes_bytes = {','.join(map(str, cfg.sizes_bytes))}",
        f"out_dir = {cfg.out_dir}",
    ]
    for name in sorted(_PARAM_KEYS):
        lines.append(f"{name} = {getattr(cfg.params, name)}")
    return "\n".join(lines) + "\n"


def sample_destinations(rng: random.Random, pool: list[int], k: int) -> list[int]:
    """First k entries of a seeded Fisher-Yates shuffle of the pool."""
    pool = list(pool)
    n = len(pool)
    for i in range(k):
        j = rng.randrange(i, n)
        pool[i], pool[j] = pool[j], pool[i]
    return pool[:k]


def serpentine_nodes(mesh: MeshTopology) -> list[int]:
    """Boustrophedon walk over the whole mesh starting at node 0; consecutive
    entries are always lattice neighbours."""
    out = []
    for y in range(mesh.y_dim):
        xs = range(mesh.x_dim) if y % 2 == 0 else range(mesh.x_dim - 1, -1, -1)
        out.extend(y * mesh.x_dim + x for x in xs)
    return out


def _fmt(value) -> str:
    return "" if value is None else str(value)


def _write_csv(path: Path, rows: list[dict]) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt(row.get(col)) for col in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def _prepare_out(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{cfg.experiment}_config.txt").write_text(config_to_text(cfg))
    return out


@dataclass(frozen=True)
class HopsTrial:
    group: int
    trial: int
    reports: dict[HopMechanism, HopReport]


@dataclass(frozen=True)
class HopsResult:
    config: ExperimentConfig
    trials: list[HopsTrial]
    group_means: dict[tuple[str, int], float]
    csv_path: Path

    def summary(self) -> str:
        groups = list(self.config.n_dst_groups)
        header = "mechanism    " + "".join(f"{f'n={g}':>9}" for g in groups)
        lines = [header]
        for mech in HOP_MECHANISMS:
            cells = "".join(
                f"{self.group_means[(mech.value, g)]:>9.3f}" for g in groups
            )
            lines.append(f"{mech.value:<13}{cells}")
        return "\n".join(lines)


def run_hops_experiment(cfg: ExperimentConfig) -> HopsResult:
    """Average hops per destination for all five mechanisms, 128 seeded
    draws per destination-count group by default."""
    mesh = cfg.mesh()
    pool = [n for n in range(mesh.n_nodes) if n != cfg.initiator]
    for group in cfg.n_dst_groups:
        if not 1 <= group <= len(pool):
            raise ConfigError(f"group size {group} exceeds the {len(pool)} available nodes")

    out = _prepare_out(cfg)
    trials: list[HopsTrial] = []
    rows: list[dict] = []
    for group in cfg.n_dst_groups:
        forced = group == len(pool)
        forced_reports = None
        if forced:
            task = DestinationSet(cfg.initiator, frozenset(pool))
            forced_reports = {m: hop_report(task, mesh, m) for m in HOP_MECHANISMS}
        for trial in range(cfg.repeats):
            if forced:
                reports = forced_reports
            else:
                rng = random.Random(f"hops:{cfg.seed}:{group}:{trial}")
                dests = sample_destinations(rng, pool, group)
                task = DestinationSet(cfg.initiator, frozenset(dests))
                reports = {m: hop_report(task, mesh, m) for m in HOP_MECHANISMS}
            trials.append(HopsTrial(group, trial, reports))
            for mech in HOP_MECHANISMS:
                rep = reports[mech]
                rows.append(
                    {
                        "experiment": cfg.experiment,
                        "seed": cfg.seed,
                        "trial": trial,
                        "mechanism": mech.value,
                        "n_dst": group,
                        "total_hops": rep.total_hops,
                        "avg_hops": rep.avg_hops_per_dest,
                    }
                )

    csv_path = out / "hops.csv"
    _write_csv(csv_path, rows)

    group_means = {}
    for group in cfg.n_dst_groups:
        for mech in HOP_MECHANISMS:
            vals = [
                t.reports[mech].avg_hops_per_dest for t in trials if t.group == group
            ]
            group_means[(mech.value, group)] = fmean(vals)
    return HopsResult(cfg, trials, group_means, csv_path)


@dataclass(frozen=True)
class EfficiencyResult:
    config: ExperimentConfig
    points: list[EfficiencyPoint]
    csv_path: Path

    def summary(self) -> str:
        biggest = max(self.config.sizes_bytes)
        groups = list(self.config.n_dst_groups)
        header = f"eta at {biggest} B".ljust(13) + "".join(f"{f'n={g}':>8}" for g in groups)
        lines = [header]
        for mech in (Mechanism.UNICAST, Mechanism.MULTICAST, Mechanism.CHAINWRITE):
            by_n = {
                p.n_dst: p.eta
                for p in self.points
                if p.mechanism == mech.value and p.n_bytes == biggest
            }
            lines.append(
                f"{mech.value:<13}" + "".join(f"{by_n[g]:>8.2f}" for g in groups)
            )
        return "\n".join(lines)


def run_efficiency_experiment(cfg: ExperimentConfig) -> EfficiencyResult:
    """Measured eta for unicast, multicast, and chained transfers over the
    size x destination-count grid. One destination draw per count, reused
    across sizes so the size effect is isolated; chains use the exact TSP
    order."""
    mesh = cfg.mesh()
    pool = [n for n in range(mesh.n_nodes) if n != cfg.initiator]
    for group in cfg.n_dst_groups:
        if not 1 <= group <= len(pool):
            raise ConfigError(f"n_dst {group} exceeds the {len(pool)} available nodes")
    if not cfg.sizes_bytes:
        raise ConfigError("efficiency experiment needs sizes_bytes")

    out = _prepare_out(cfg)
    points: list[EfficiencyPoint] = []
    rows: list[dict] = []
    for n_dst in cfg.n_dst_groups:
        rng = random.Random(f"efficiency:{cfg.seed}:{n_dst}")
        dests = sample_destinations(rng, pool, n_dst)
        task_set = DestinationSet(cfg.initiator, frozenset(dests))
        order = tsp_order(task_set, mesh, mode="exact")
        for size in cfg.sizes_bytes:
            for mech in (Mechanism.UNICAST, Mechanism.MULTICAST, Mechanism.CHAINWRITE):
                task = TransferTask(
                    initiator=cfg.initiator,
                    destinations=task_set,
                    transfer_bytes=size,
                    mechanism=mech,
                    order=order if mech is Mechanism.CHAINWRITE else None,
                )
                report = run_transfer(task, mesh, cfg.params)
                eta = eta_p2mp(size, n_dst, report.total_cycles)
                points.append(
                    EfficiencyPoint(mech.value, size, n_dst, report.total_cycles, eta)
                )
                rows.append(
                    {
                        "experiment": cfg.experiment,
                        "seed": cfg.seed,
                        "trial": 0,
                        "mechanism": mech.value,
                        "n_dst": n_dst,
                        "bytes": size,
                        "total_cycles": report.total_cycles,
                        "eta": eta,
                    }
                )

    csv_path = out / "efficiency.csv"
    _write_csv(csv_path, rows)
    return EfficiencyResult(cfg, points, csv_path)


@dataclass(frozen=True)
class OverheadResult:
    config: ExperimentConfig
    rows: list[tuple[int, int]]  # (n_dst, total_cycles)
    fit: RegressionFit
    csv_path: Path

    def summary(self) -> str:
        lines = [f"n_dst={n}: {cycles} cycles" for n, cycles in self.rows]
        lines.append(
            f"fitted slope: {self.fit.slope:.3f} cycles/destination, "
            f"intercept {self.fit.intercept:.3f}, r^2 {self.fit.r_squared:.6f}"
        )
        return "\n".join(lines)


def run_overhead_experiment(cfg: ExperimentConfig) -> OverheadResult:
    """Latency of one fixed-size chained transfer versus chain length on a
    neighbour chain, with the per-destination cost fitted by least squares."""
    mesh = cfg.mesh()
    if not cfg.sizes_bytes:
        raise ConfigError("overhead experiment needs sizes_bytes")
    size = cfg.sizes_bytes[0]
    walk = serpentine_nodes(mesh)
    if cfg.initiator != walk[0]:
        raise ConfigError("overhead experiment expects the initiator at node 0")
    max_n = max(cfg.n_dst_groups)
    if max_n >= mesh.n_nodes:
        raise ConfigError(f"chain of {max_n} destinations exceeds the mesh")

    out = _prepare_out(cfg)
    measured: list[tuple[int, int]] = []
    rows: list[dict] = []
    for n_dst in cfg.n_dst_groups:
        dests = walk[1 : n_dst + 1]
        task_set = DestinationSet(cfg.initiator, frozenset(dests))
        task = TransferTask(
            initiator=cfg.initiator,
            destinations=task_set,
            transfer_bytes=size,
            mechanism=Mechanism.CHAINWRITE,
            order=ChainOrder(tuple(dests)),
        )
        report = run_transfer(task, mesh, cfg.params)
        measured.append((n_dst, report.total_cycles))
        rows.append(
            {
                "experiment": cfg.experiment,
                "seed": cfg.seed,
                "trial": 0,
                "mechanism": Mechanism.CHAINWRITE.value,
                "n_dst": n_dst,
                "bytes": size,
                "total_cycles": report.total_cycles,
                "eta": eta_p2mp(size, n_dst, report.total_cycles),
            }
        )

    csv_path = out / "overhead.csv"
    _write_csv(csv_path, rows)
    fit = fit_linear(measured)
    return OverheadResult(cfg, measured, fit, csv_path)


def run_experiment(cfg: ExperimentConfig):
    runners = {
        "hops": run_hops_experiment,
        "efficiency": run_efficiency_experiment,
        "overhead": run_overhead_experiment,
    }
    try:
        runner = runners[cfg.experiment]
    except KeyError:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}") from None
    return runner(cfg)
