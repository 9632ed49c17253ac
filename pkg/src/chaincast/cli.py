"""Command-line front end.

Subcommands: route, schedule, codec-dump, simulate, experiment.
Exit codes: 0 success, 1 usage error, 2 runtime or configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from .errors import ChaincastError
from .experiments import (
    ExperimentConfig,
    default_config,
    load_config,
    parse_config,
    run_experiment,
)
from .metrics import eta_p2mp
from .protocol import (
    AccessPattern,
    CfgPacket,
    ChainNodeConfig,
    Role,
    describe_packet,
    encode_cfg,
)
from .scheduling import (
    ChainOrder,
    DestinationSet,
    chain_hops,
    greedy_order,
    naive_order,
    tsp_order,
)
from .simulator import Mechanism, TransferTask, run_transfer
from .topology import MeshTopology, node_to_coord, xy_route

CONFIG_ENV_VAR = "CHAINCAST_CONFIG"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors by default; this tool reserves 2 for
    # runtime failures.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _mesh(value: str) -> tuple[int, int]:
    try:
        x, y = value.lower().split("x")
        return int(x), int(y)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an XxY mesh size, got {value!r}")


def _int_list(value: str) -> list[int]:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ids, got {value!r}")


def _optional_node(value: str) -> int | None:
    if value.lower() in ("none", "-"):
        return None
    return int(value)


def _order_for(strategy: str, task: DestinationSet, mesh: MeshTopology) -> ChainOrder:
    if strategy == "naive":
        return naive_order(task)
    if strategy == "greedy":
        return greedy_order(task, mesh)
    if strategy == "tsp-exact":
        return tsp_order(task, mesh, mode="exact")
    return tsp_order(task, mesh, mode="heuristic")


def _cmd_route(args) -> int:
    mesh = MeshTopology(*args.mesh)
    path = xy_route(args.src, args.dst, mesh)
    coords = [node_to_coord(args.src, mesh)]
    coords += [node_to_coord(link.dst, mesh) for link in path]
    print(" -> ".join(f"({c.x},{c.y})" for c in coords))
    print(f"hops: {len(path)}")
    return 0


def _cmd_schedule(args) -> int:
    mesh = MeshTopology(*args.mesh)
    task = DestinationSet(args.initiator, frozenset(args.dests))
    task.validate_for(mesh)
    order = _order_for(args.strategy, task, mesh)
    total = chain_hops(order, args.initiator, mesh)
    if args.csv:
        print("strategy,initiator,n_dst,total_hops,order")
        print(f"{args.strategy},{args.initiator},{task.n_dst},{total},"
              + " ".join(str(n) for n in order))
    else:
        print("order: " + " -> ".join(f"C{n}" for n in order))
        print(f"total hops: {total}")
    return 0


def _cmd_codec_dump(args) -> int:
    if args.infile:
        raw = Path(args.infile).read_bytes()
        packet = CfgPacket.from_bytes(raw, args.link_width)
    else:
        cfg = ChainNodeConfig(
            node=args.node,
            prev=args.prev,
            next=args.next,
            role=Role[args.role.upper()],
            task_id=args.task_id,
            transfer_bytes=args.bytes,
            pattern=AccessPattern(args.base, tuple(args.strides), tuple(args.bounds)),
        )
        packet = encode_cfg(cfg, args.link_width)
    print(describe_packet(packet))
    return 0


def _base_sim_config(args) -> ExperimentConfig:
    neutral = ExperimentConfig(experiment="simulate", mesh_x=8, mesh_y=8)
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return parse_config(Path(path).read_text(), base=neutral)
    return neutral


def _cmd_simulate(args) -> int:
    cfg = _base_sim_config(args)
    if args.mesh:
        cfg = replace(cfg, mesh_x=args.mesh[0], mesh_y=args.mesh[1])
    mesh = cfg.mesh()
    mechanism = Mechanism(args.mechanism)

    if mechanism is Mechanism.LOOPBACK:
        task = TransferTask(args.initiator, None, args.size, mechanism)
    else:
        if not args.dests:
            raise ChaincastError(f"{mechanism.value} needs --dests")
        dest_set = DestinationSet(args.initiator, frozenset(args.dests))
        dest_set.validate_for(mesh)
        order = None
        if mechanism is Mechanism.CHAINWRITE:
            order = _order_for(args.strategy, dest_set, mesh)
        task = TransferTask(args.initiator, dest_set, args.size, mechanism, order=order)

    report = run_transfer(task, mesh, cfg.params, trace=args.trace)
    print(f"mechanism: {mechanism.value}")
    if task.order is not None:
        print("order: " + " -> ".join(f"C{n}" for n in task.order))
    print(f"total cycles: {report.total_cycles}")
    p = report.phase_cycles
    print(f"phases: cfg={p.cfg} grant={p.grant} data={p.data} finish={p.finish}")
    for node, cycle in sorted(report.per_dest_delivery.items()):
        print(f"delivered C{node} at cycle {cycle}")
    if task.destinations is not None:
        eta = eta_p2mp(args.size, task.destinations.n_dst, report.total_cycles)
        print(f"eta: {eta:.4f}")
    if args.trace:
        print("trace:")
        for entry in report.trace:
            print(f"  cycle {entry.cycle:>8} node C{entry.node:<4} {entry.event}")
    return 0


def _cmd_experiment(args) -> int:
    if args.config:
        cfg = load_config(args.config, args.name)
    else:
        cfg = default_config(args.name)
    if args.out:
        cfg = replace(cfg, out_dir=args.out)
    result = run_experiment(cfg)
    print(result.summary())
    print(f"wrote {result.csv_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chaincast")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("route", help="print the XY route between two nodes")
    p.add_argument("--mesh", type=_mesh, required=True, help="mesh as XxY, e.g. 8x8")
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)
    p.set_defaults(func=_cmd_route)

    p = sub.add_parser("schedule", help="compute a chain visit order")
    p.add_argument("--mesh", type=_mesh, required=True)
    p.add_argument("--initiator", type=int, default=0)
    p.add_argument("--dests", type=_int_list, required=True)
    p.add_argument(
        "--strategy",
        choices=("naive", "greedy", "tsp-exact", "tsp-heuristic"),
        default="greedy",
    )
    p.add_argument("--csv", action="store_true", help="emit the order as a CSV row")
    p.set_defaults(func=_cmd_schedule)

    p = sub.add_parser("codec-dump", help="print a config packet field breakdown")
    p.add_argument("--in", dest="infile", help="read an encoded packet from a file")
    p.add_argument("--link-width", type=int, default=512, help="link width in bits")
    p.add_argument("--node", type=int, default=1)
    p.add_argument("--prev", type=_optional_node, default=0)
    p.add_argument("--next", type=_optional_node, default=None)
    p.add_argument("--role", choices=("initiator", "middle", "tail"), default="tail")
    p.add_argument("--task-id", type=int, default=0)
    p.add_argument("--bytes", type=int, default=4096)
    p.add_argument("--base", type=int, default=0)
    p.add_argument("--strides", type=_int_list, default=[64])
    p.add_argument("--bounds", type=_int_list, default=[64])
    p.set_defaults(func=_cmd_codec_dump)

    p = sub.add_parser("simulate", help="run one transfer and print its latency report")
    p.add_argument("--config", help=f"config file (default: ${CONFIG_ENV_VAR})")
    p.add_argument("--mesh", type=_mesh, help="override the config's mesh")
    p.add_argument(
        "--mechanism",
        choices=tuple(m.value for m in Mechanism),
        default="chainwrite",
    )
    p.add_argument("--size", type=int, required=True, help="transfer size in bytes")
    p.add_argument("--dests", type=_int_list, default=[])
    p.add_argument("--initiator", type=int, default=0)
    p.add_argument(
        "--strategy",
        choices=("naive", "greedy", "tsp-exact", "tsp-heuristic"),
        default="tsp-heuristic",
        help="chain ordering for chainwrite",
    )
    p.add_argument("--trace", action="store_true", help="print every engine event")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a bundled study and write CSVs")
    p.add_argument("--name", choices=("hops", "efficiency", "overhead"), required=True)
    p.add_argument("--config", help="config file overriding the study defaults")
    p.add_argument("--out", help="output directory override")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ChaincastError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
