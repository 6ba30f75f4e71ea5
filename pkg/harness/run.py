"""
harness/run.py

Command-line entry point for the experiment harness.

Usage examples
--------------
  # One experiment; outputs under results/<config stem>/
  python harness/run.py run configs/exp1d.ini

  # Every config in a directory on four worker processes, then report.md
  python harness/run.py suite configs --workers 4

  # Re-aggregate (and re-plot) a finished results root
  python harness/run.py report results

The output root is --output-root, else $OTLAB_OUTPUT_ROOT, else ./results.
The exit code is 0 iff every asserted row passed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Optional

# Load .env early so OTLAB_OUTPUT_ROOT can live there
from dotenv import load_dotenv
load_dotenv()

_script_dir = Path(__file__).parent.absolute()
_project_root = _script_dir.parent
if str(_project_root) not in sys.path:
    sys.path.insert(0, str(_project_root))

from harness.config import ConfigError, parse_config  # noqa: E402
from harness.experiments import replot, run_experiment, write_outputs  # noqa: E402
from harness.report import save_report  # noqa: E402

logger = logging.getLogger("harness.run")

OUTPUT_ROOT_ENV = "OTLAB_OUTPUT_ROOT"
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def output_root(cli_value: Optional[str]) -> Path:
    if cli_value:
        return Path(cli_value)
    return Path(os.environ.get(OUTPUT_ROOT_ENV) or "results")


def run_config(config_path: str | Path, root: str | Path, log_to_terminal: bool = False,
               argv: Optional[list[str]] = None) -> bool:
    """Parse, run and write one experiment; True iff all asserted rows pass."""
    config_path = Path(config_path)
    cfg = parse_config(config_path.read_text(encoding="utf-8"))
    run_dir = Path(root) / (cfg.output_dir or config_path.stem)
    run_dir.mkdir(parents=True, exist_ok=True)

    handler: Optional[logging.Handler] = None
    if not log_to_terminal:
        handler = logging.FileHandler(run_dir / "run.log", mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logging.getLogger().addHandler(handler)

    with open(run_dir / "command.txt", "w") as f:
        f.write(" ".join(argv if argv is not None else sys.argv) + "\n\n")
        f.write(f"config: {config_path}\n")
        f.write(f"params: {cfg.params}\n")

    try:
        logger.info("=" * 60)
        logger.info(f"Experiment start: {cfg.experiment}")
        logger.info(f"  config  : {config_path}")
        logger.info(f"  params  : {cfg.params}")
        logger.info(f"  results : {run_dir}")
        logger.info("=" * 60)
        result = run_experiment(cfg)
        write_outputs(result, run_dir)
        failing = [r.metric for r in result.report_rows if r.asserted and not r.passed]
        logger.info(f"Experiment complete: {len(result.report_rows)} rows, "
                    f"{len(failing)} failing {failing if failing else ''}")
        return result.passed
    finally:
        if handler is not None:
            logging.getLogger().removeHandler(handler)
            handler.close()


def _suite_worker(args: tuple[str, str, str, bool]) -> tuple[str, bool, str]:
    config_path, root, level, log_to_terminal = args
    logging.basicConfig(level=getattr(logging, level), format=LOG_FORMAT)
    try:
        return config_path, run_config(config_path, root, log_to_terminal), ""
    except ConfigError as exc:
        return config_path, False, str(exc)


def _cmd_run(args: argparse.Namespace) -> int:
    root = output_root(args.output_root)
    try:
        ok = run_config(args.config, root, args.log_to_terminal)
    except ConfigError as exc:
        logger.error(f"{args.config}: {exc}")
        return 2
    save_report(root)
    return 0 if ok else 1


def _cmd_suite(args: argparse.Namespace) -> int:
    configs = sorted(str(p) for p in Path(args.directory).glob("*.ini"))
    if not configs:
        logger.error(f"No *.ini configs in {args.directory}")
        return 2
    root = output_root(args.output_root)
    jobs = [(c, str(root), args.log_level.upper(), args.log_to_terminal) for c in configs]
    logger.info(f"Suite: {len(jobs)} configs on {args.workers} workers → {root}")
    # each experiment writes only into its own run directory
    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(_suite_worker, jobs))
    else:
        outcomes = [_suite_worker(j) for j in jobs]

    all_ok = True
    for path, ok, err in outcomes:
        status = "pass" if ok else ("config error: " + err if err else "FAIL")
        logger.info(f"  {Path(path).name:<24} {status}")
        all_ok &= ok
    report = save_report(root)
    logger.info(f"Suite complete: {report['n_passed']}/{report['n_asserted']} asserted rows passed "
                f"({report['pass_rate']*100:.1f}%)")
    return 0 if all_ok else 1


def _cmd_report(args: argparse.Namespace) -> int:
    root = Path(args.directory)
    if not root.is_dir():
        logger.error(f"No results directory at {root}")
        return 2
    for run_dir in sorted(p.parent for p in root.glob("*/results.csv")):
        replot(run_dir)
    report = save_report(root)
    print(f"{report['n_runs']} runs, {report['n_passed']}/{report['n_asserted']} asserted rows passed "
          f"→ {root / 'report.md'}")
    return 0 if report["n_passed"] == report["n_asserted"] else 1


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        description="Run optimal-transport regularity experiments and emit reports."
    )
    parser.add_argument("--output-root", type=str, default=None,
                        help=f"Results root (default: ${OUTPUT_ROOT_ENV} or ./results)")
    parser.add_argument("--log-level", type=str, default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--log-to-terminal", action="store_true",
                        help="Only log to the terminal (default: also write run.log per experiment)")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="Run one experiment config")
    p_run.add_argument("config", type=str)
    p_run.set_defaults(func=_cmd_run)

    p_suite = sub.add_parser("suite", help="Run every *.ini config in a directory")
    p_suite.add_argument("directory", type=str)
    p_suite.add_argument("--workers", type=int, default=1)
    p_suite.set_defaults(func=_cmd_suite)

    p_report = sub.add_parser("report", help="Aggregate a results root into report.md")
    p_report.add_argument("directory", type=str)
    p_report.set_defaults(func=_cmd_report)

    args = parser.parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, args.log_level.upper()),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(sys.stdout)],
    )
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
