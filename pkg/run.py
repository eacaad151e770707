"""Entry point - parses args, sets up logging, dispatches the simulate/run/batch/check verbs."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

# Ensure project root on path
ROOT = Path(__file__).resolve().parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DIVERGED = 2


def parse_args(argv: Optional[list[str]] = None) -> argparse.Namespace:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Key-value settings file (NOISE_*, SCENARIO_*, RUN_*, ...)")
    common.add_argument("--seed", type=int, help="Scenario seed")
    common.add_argument("--filter", choices=["ekf", "srukf"], help="Filter kind")
    common.add_argument("--pos-source", choices=["slam", "mocap", "none"], help="Absolute position stream")
    common.add_argument("--out", help="Output directory")
    common.add_argument("--debug", action="store_true", help="Enable debug logging")

    parser = argparse.ArgumentParser(description="limbfusion - pose fusion for IMU link chains")
    verbs = parser.add_subparsers(dest="verb", required=True)
    verbs.add_parser("simulate", parents=[common], help="Generate a scenario and write its stream files")
    verbs.add_parser("run", parents=[common], help="Replay streams through one filter variant")
    verbs.add_parser("batch", parents=[common], help="Run the scenario x variant matrix")
    check = verbs.add_parser("check", parents=[common], help="Run the acceptance suite")
    check.add_argument("names", nargs="*", help="Checks to run (default: all)")
    check.add_argument("--full", action="store_true", help="Full-length versions of the checks")
    return parser.parse_args(argv)


def setup_logging(debug: bool = False) -> None:
    level = logging.DEBUG if debug else logging.INFO
    (ROOT / "logs").mkdir(exist_ok=True)
    logging.basicConfig(
        level=level,
        format="%(asctime)s  %(name)-28s  %(levelname)-7s  %(message)s",
        datefmt="%H:%M:%S",
        handlers=[
            logging.StreamHandler(sys.stdout),
            logging.FileHandler(ROOT / "logs" / "limbfusion.log", encoding="utf-8"),
        ],
    )
    # numba's compiler logging is noisy at DEBUG
    logging.getLogger("numba").setLevel(logging.WARNING)


def load(args: argparse.Namespace):
    """Settings from file plus command-line overrides."""
    from core.config import FilterKind, PositionSource, reload_settings

    settings = reload_settings(args.config)
    run_update, scenario_update = {}, {}
    if args.seed is not None:
        scenario_update["seed"] = args.seed
        settings = settings.model_copy(update={
            "batch": settings.batch.model_copy(update={"base_seed": args.seed}),
        })
    if args.filter:
        run_update["filter"] = FilterKind(args.filter)
    if args.pos_source:
        run_update["position_source"] = PositionSource(args.pos_source)
    if args.out:
        run_update["output_dir"] = args.out
    return settings.model_copy(update={
        "run": settings.run.model_copy(update=run_update),
        "scenario": settings.scenario.model_copy(update=scenario_update),
    })


def subscribe(bus) -> None:
    from core.events import EventType

    log = logging.getLogger("limbfusion.events")
    bus.on(EventType.RUN_DIVERGED, lambda e: log.error(f"{e.get('variant')} diverged at t={e.get('t'):.2f} s"))
    bus.on(EventType.BATCH_JOB_COMPLETED, lambda e: log.info(
        f"[{e.get('done')}/{e.get('total')}] scenario {e.get('index')} {e.get('variant')}"
        + (" diverged" if e.get("diverged") else "")
    ))
    bus.on(EventType.FILTER_UPDATE_REJECTED, lambda e: log.debug(f"update rejected at t={e.get('t'):.3f}"))


def cmd_simulate(settings, args) -> int:
    from core.harness.records import write_scenario
    from core.simulator import simulate

    out = Path(args.out) if args.out else Path(settings.run.output_dir) / f"scenario_{settings.scenario.seed}"
    scenario = simulate(settings.scenario, settings)
    paths = write_scenario(out, scenario)
    for name, path in paths.items():
        print(f"{name:6} {path}")
    return EXIT_OK


def cmd_run(settings, args) -> int:
    from core.events import EventType, get_event_bus
    from core.harness.reports import format_metrics, write_run_outputs
    from core.harness.runner import output_dir, run_filter, run_scenario
    from core.simulator import simulate

    logger = logging.getLogger("limbfusion.run")
    bus = get_event_bus()
    bus.once(EventType.RUN_COMPLETED, lambda e: logger.info(
        f"{e.get('variant')}: {e.get('epochs')} epochs, {e.get('mean_cycle_ms'):.3f} ms per cycle"
    ))
    if settings.run.imu_path:
        result = run_filter(settings.run, settings)
        truth = None
        if settings.run.truth_path:
            from core.harness.records import load_truth
            truth = load_truth(settings.run.truth_path)
    else:
        logger.info(f"No RUN_IMU_PATH set, simulating scenario seed {settings.scenario.seed}")
        scenario = simulate(settings.scenario, settings)
        result = run_scenario(scenario, settings.run, settings)
        truth = scenario.truth

    logger.debug(f"Events: {bus.counts}")
    rejected = bus.count(EventType.FILTER_UPDATE_REJECTED)
    if rejected:
        skipped = bus.count(EventType.FILTER_CHANNEL_SKIPPED)
        logger.warning(f"{rejected} stacked updates rejected, {skipped} channels skipped")
    write_run_outputs(output_dir(settings.run), result, truth)
    if result.metrics is not None:
        print(format_metrics(result.metrics))
    return EXIT_OK


def cmd_batch(settings, args) -> int:
    from core.harness.batch import run_batch

    table = run_batch(settings, settings.run.output_dir)
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    lost = table.groupby("variant")["n_diverged"].max()
    if lost.any():
        logging.getLogger("limbfusion.batch").error(
            "Diverged runs: " + ", ".join(f"{v} {n}" for v, n in lost.items() if n)
        )
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_check(settings, args) -> int:
    from core.harness.checks import run_checks

    results = run_checks(args.names, full=args.full, settings=settings)
    for result in results:
        print(result)
    return EXIT_OK if all(r.passed for r in results) else EXIT_INPUT


COMMANDS = {"simulate": cmd_simulate, "run": cmd_run, "batch": cmd_batch, "check": cmd_check}


def main(argv: Optional[list[str]] = None) -> int:
    args = parse_args(argv)
    setup_logging(args.debug)
    logger = logging.getLogger("limbfusion")

    from core.events import get_event_bus
    from core.exceptions import FilterDivergenceError, FusionError

    try:
        settings = load(args)
        subscribe(get_event_bus())
        logger.debug(f"Event subscribers: {get_event_bus().stats}")
        logger.info(f"limbfusion {args.verb} (config: {args.config or 'defaults'})")
        return COMMANDS[args.verb](settings, args)
    except FilterDivergenceError as e:
        logger.error(e.message)
        return EXIT_DIVERGED
    except FusionError as e:
        logger.error(f"{e.code}: {e.message}")
        return EXIT_INPUT
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
