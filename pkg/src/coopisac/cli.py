"""Command line entry point.

Exit codes: 0 success, 1 usage or input error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import io as fio
from .fusion import CooperativeFusion
from .harness import build_scenario, run_montecarlo, run_pipeline, write_run
from .ofdm import OfdmConfig, resolutions
from .scenes import benchmark_ue_position

log = logging.getLogger("coopisac")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

FUSED_HEADER = ["row", "x_init", "y_init", "vx_init", "vy_init", "x", "y", "vx", "vy",
                "iters", "converged", "angle_replaced", "objective_trace"]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _point(text: str) -> tuple[float, float]:
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected x,y got {text!r}") from None
    return x, y


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="coopisac", description="Cooperative BS-UE sensing simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="one end-to-end run")
    s.add_argument("--config", required=True, type=Path)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", type=Path, default=None)
    s.add_argument("--dump-maps", action="store_true", help="write range-Doppler maps as PGM and CSV")
    s.add_argument("--dump-cubes", action="store_true", help="write raw received tensors")

    f = sub.add_parser("fuse", help="fuse observation tuples from a file")
    f.add_argument("--tuples", required=True, type=Path)
    f.add_argument("--ue", type=_point, default=None, help="UE position x,y in metres")
    f.add_argument("--sign", choices=("paper", "internal"), default=None,
                   help="sign of the bistatic velocity column (overrides the file directive)")
    f.add_argument("--out", type=Path, default=Path("out"))

    m = sub.add_parser("montecarlo", help="batch of independently seeded runs")
    m.add_argument("--config", required=True, type=Path)
    m.add_argument("--runs", type=int, default=None)
    m.add_argument("--jobs", type=int, default=1)
    m.add_argument("--out", type=Path, default=None)
    return p


def cmd_simulate(args) -> int:
    conf = fio.load_config(args.config)
    seed = conf.base_seed if args.seed is None else args.seed
    out = Path(conf.output_dir) if args.out is None else args.out
    try:
        scenario = build_scenario(conf.scenario, conf.radio, seed, randomize=False)
    except (TypeError, KeyError, ValueError) as exc:
        raise UsageError(f"bad scenario: {exc}") from None
    t0 = time.perf_counter()
    res = run_pipeline(scenario, conf.radio, conf.settings, conf.fusion, keep_cubes=args.dump_cubes)
    write_run(res, conf.radio, out, dump_maps=args.dump_maps, dump_cubes=args.dump_cubes)
    missed = len(scenario.targets) - len(res.pairs)
    if missed:
        log.warning("%d of %d targets not detected", missed, len(scenario.targets))
    print(f"targets={len(scenario.targets)} detected={len(res.psi_b)} "
          f"rmse_bs={res.bs_metrics.rmse:.4f} rmse_fused={res.fused_metrics.rmse:.4f} "
          f"elapsed={time.perf_counter() - t0:.2f}s out={out}")
    return EXIT_OK


def cmd_fuse(args) -> int:
    Y, convention, lines = fio.read_tuples(args.tuples)
    sign = args.sign or convention or "internal"
    ue = benchmark_ue_position() if args.ue is None else args.ue
    fio.validate_tuples(Y, ue, resolutions(OfdmConfig())["range_bin"], args.tuples, lines)
    model = CooperativeFusion(ue_position=ue, sign_convention=sign).fit(Y)
    rows = []
    for i, r in enumerate(model.results_):
        trace = ";".join(f"{v:.6g}" for v in r.objective_trace)
        rows.append([i, *r.init, *r.state, r.iterations, r.converged, r.angle_replaced, trace])
        x, y, vx, vy = r.state
        print(f"{i}: x={x:.3f} y={y:.3f} vx={vx:.3f} vy={vy:.3f} iters={r.iterations}")
    fio.write_csv(args.out / "fused.csv", FUSED_HEADER, rows)
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    conf = fio.load_config(args.config)
    if args.runs is not None and args.runs < 1:
        raise UsageError("--runs must be >= 1")
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    out = Path(conf.output_dir) if args.out is None else args.out
    rows, summary = run_montecarlo(conf, args.runs, out, jobs=args.jobs)
    for r in rows:
        print(f"run {r[0]:3d}: rmse_bs={r[5]:.4f} rmse_fused={r[6]:.4f} win={bool(r[7])}")
    print(f"runs={summary[0]} mean_rmse_bs={summary[1]:.4f} mean_rmse_fused={summary[2]:.4f} "
          f"win_fraction={summary[7]:.2f}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "fuse": cmd_fuse, "montecarlo": cmd_montecarlo}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, fio.FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("runtime failure", exc_info=True)
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
