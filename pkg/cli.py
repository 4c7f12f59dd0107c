import argparse
import logging
import sys

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from config.scenario_file import load_scenario
from config.settings import settings
from services.beam import AngularSpread, ArrayConfig, effective_gain
from services.channel import PathLossModel, path_loss_db
from services.exceptions import PlannerError
from services.netgraph import Topology
from services.solver import (
    PlanMethod,
    SolveReport,
    SolveStatus,
    compare_topologies,
    minimize_total_bandwidth,
    run_method,
    sweep_rate_bandwidth,
)

load_dotenv()

logger = logging.getLogger("backhaul_planner")

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_TOLERANCE = 3
EXIT_CONFIG = 4

_STATUS_EXIT = {
    SolveStatus.OPTIMAL: EXIT_OK,
    SolveStatus.INFEASIBLE: EXIT_INFEASIBLE,
    SolveStatus.TOLERANCE_NOT_MET: EXIT_TOLERANCE,
}

# --topology choices; full-connectivity is the jointly optimized plan
_TOPOLOGY_METHODS = {
    "optimal": PlanMethod.OPTIMAL,
    "full-connectivity": PlanMethod.OPTIMAL,
    "single-hop": PlanMethod.SINGLE_HOP,
    "nearest-neighbor": PlanMethod.NEAREST_NEIGHBOR,
    "direct": PlanMethod.DIRECT,
}


class PlannerArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the configuration error code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _write(frame: pd.DataFrame, out: str | None, float_format: str | None = None) -> None:
    if out:
        frame.to_csv(out, index=False, lineterminator="\n", encoding="utf-8", float_format=float_format)
        logger.info(f"Wrote {len(frame)} rows to {out}")
    else:
        frame.to_csv(sys.stdout, index=False, lineterminator="\n", float_format=float_format)


def _parse_array(text: str) -> tuple[int, int]:
    try:
        n_h, n_v = (int(part) for part in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"array sizes look like 16x16, got {text!r}")
    return n_h, n_v


def cmd_pathloss(args) -> int:
    models = [PathLossModel(args.model)] if args.model else list(PathLossModel)
    rows = [
        {"model": model.value, "distance_m": d, "fc_ghz": args.fc, "path_loss_db": path_loss_db(model, d, args.fc)}
        for model in models
        for d in args.d
    ]
    _write(pd.DataFrame(rows), args.out, float_format="%.2f")
    return EXIT_OK


def cmd_gain(args) -> int:
    asd_grid = np.arange(0.0, args.asd_max + 0.5 * args.asd_step, args.asd_step)
    frame = pd.DataFrame({"asd_deg": asd_grid})
    for n_h, n_v in args.arrays:
        array = ArrayConfig(n_h=n_h, n_v=n_v, element_gain_dbi=args.element_gain)
        frame[f"gain_{n_h}x{n_v}_dbi"] = [
            effective_gain(array, AngularSpread.from_degrees(asd, args.zsd)) for asd in asd_grid
        ]
    _write(frame, args.out, float_format="%.4f")
    return EXIT_OK


def _summary(report: SolveReport) -> str:
    lines = [f"{report.method.value}: {report.status.value}"]
    if report.message:
        lines.append(f"  {report.message}")
    allocation = report.allocation
    if allocation is None:
        return "\n".join(lines)
    total = allocation.objective_hz
    lines.append(
        f"  total {total / 1e6:.1f} MHz = backhaul {allocation.backhaul_hz / 1e6:.1f} MHz "
        f"+ access {allocation.access_hz / 1e6:.1f} MHz"
    )
    lines.append(f"  {'link':<10}{'rate Gbit/s':>12}{'power W':>10}{'bandwidth MHz':>15}{'share %':>9}")
    for label, w, p, r in zip(allocation.links, allocation.W, allocation.P, allocation.R):
        if w < settings.active_link_threshold_hz:
            continue
        lines.append(f"  {label:<10}{r / 1e9:>12.3f}{p:>10.3f}{w / 1e6:>15.1f}{100 * w / total:>9.1f}")
    residuals = allocation.residuals
    lines.append(
        f"  residuals: flow {residuals.flow:.2e}, power {residuals.power:.2e}, rate {residuals.rate:.2e}"
    )
    return "\n".join(lines)


def cmd_plan(args) -> int:
    config = load_scenario(args.config, args.preset, args.set)
    scenario = config.to_scenario()
    r_star = args.r_star or config.r_star_bps
    if args.equal_power:
        if args.topology != "single-hop":
            raise PlannerError("--equal-power needs --topology single-hop")
        report = run_method(PlanMethod.SINGLE_HOP_EQUAL, scenario, r_star)
    elif args.links:
        topology = Topology.custom(args.links)
        report = minimize_total_bandwidth(scenario, topology, r_star, seed=args.seed, tolerance=args.tolerance)
    else:
        report = run_method(_TOPOLOGY_METHODS[args.topology], scenario, r_star, args.seed, args.tolerance)

    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as f:
            f.write(report.to_document())
    print(report.to_document() if args.json else _summary(report))
    return _STATUS_EXIT[report.status]


def cmd_sweep(args) -> int:
    config = load_scenario(args.config, args.preset, args.set)
    methods = args.methods or config.methods
    r_stars = config.r_star_grid_bps if args.r_stars is None else args.r_stars
    if not r_stars:
        raise PlannerError("the sweep has no target rates; set r_star_grid_bps or --r-stars")
    result = sweep_rate_bandwidth(
        config.to_scenario(),
        methods,
        r_stars,
        seed=args.seed,
        tolerance=args.tolerance,
        workers=args.workers,
    )
    _write(result.to_frame(), args.out)
    flagged = any(point.status is SolveStatus.TOLERANCE_NOT_MET for point in result.points)
    return EXIT_TOLERANCE if flagged else EXIT_OK


def cmd_compare(args) -> int:
    config = load_scenario(args.config, args.preset, args.set)
    r_star = args.r_star or config.r_star_bps
    reports = compare_topologies(config.to_scenario(), r_star, seed=args.seed, methods=args.methods)
    rows = [
        {
            "rank": rank,
            "topology": report.method.value,
            "status": report.status.value,
            "total_bw_hz": report.allocation.objective_hz if report.allocation else None,
            "active_links": len(report.active_topology),
        }
        for rank, report in enumerate(reports, start=1)
    ]
    _write(pd.DataFrame(rows), args.out)
    return EXIT_OK


def _scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="scenario file of key=value lines")
    parser.add_argument("--preset", help="named scenario, fig3 to fig8")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override one scenario key")
    parser.add_argument("--seed", type=int, default=None, help="first multi-start seed")
    parser.add_argument("--tolerance", type=float, default=None, help="relative solver tolerance")
    parser.add_argument("--out", help="output file (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = PlannerArgumentParser(prog="backhaul-planner", description="Plan relayed mmWave backhaul.")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=PlannerArgumentParser)

    pathloss = subparsers.add_parser("pathloss", help="path loss table")
    pathloss.add_argument("--model", choices=[m.value for m in PathLossModel])
    pathloss.add_argument("--d", type=float, nargs="+", default=[100.0], help="distances in meters")
    pathloss.add_argument("--fc", type=float, default=28.0, help="carrier frequency in GHz")
    pathloss.add_argument("--out")
    pathloss.set_defaults(handler=cmd_pathloss)

    gain = subparsers.add_parser("gain", help="effective array gain against azimuth spread")
    gain.add_argument("--arrays", type=_parse_array, nargs="+", default=[(4, 4), (8, 8), (16, 16)])
    gain.add_argument("--element-gain", type=float, default=8.0, help="element gain in dBi")
    gain.add_argument("--zsd", type=float, default=0.6, help="zenith spread in degrees")
    gain.add_argument("--asd-max", type=float, default=20.0)
    gain.add_argument("--asd-step", type=float, default=1.0)
    gain.add_argument("--out")
    gain.set_defaults(handler=cmd_gain)

    plan = subparsers.add_parser("plan", help="plan one target rate")
    _scenario_arguments(plan)
    plan.add_argument("--r-star", type=float, help="per-user target in bit/s")
    plan.add_argument("--topology", choices=sorted(_TOPOLOGY_METHODS), default="optimal")
    plan.add_argument("--links", type=_parse_link, nargs="+", help="custom backhaul hops such as 0-1 1-2")
    plan.add_argument("--equal-power", action="store_true")
    plan.add_argument("--json", action="store_true", help="print the full report document")
    plan.set_defaults(handler=cmd_plan)

    sweep = subparsers.add_parser("sweep", help="bandwidth against target rate")
    _scenario_arguments(sweep)
    sweep.add_argument("--methods", type=PlanMethod, nargs="+")
    sweep.add_argument("--r-stars", type=float, nargs="*", help="target rates in bit/s")
    sweep.add_argument("--workers", type=int, default=None)
    sweep.set_defaults(handler=cmd_sweep)

    compare = subparsers.add_parser("compare", help="rank topologies at one target rate")
    _scenario_arguments(compare)
    compare.add_argument("--r-star", type=float)
    compare.add_argument("--methods", type=PlanMethod, nargs="+")
    compare.set_defaults(handler=cmd_compare)
    return parser


def _parse_link(text: str) -> tuple[int, int]:
    try:
        src, dst = (int(part) for part in text.split("-"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"hops look like 0-2, got {text!r}")
    return src, dst


def main(argv=None) -> int:
    logging.basicConfig(level=settings.log_level, stream=sys.stderr)
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except PlannerError as e:
        logger.error(str(e))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
