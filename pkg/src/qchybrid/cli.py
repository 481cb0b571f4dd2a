"""Command-line front end.

Commands:  simulate | signaling | bracket-check | validate
Flags:     --config PATH --out DIR --seed N --set key=value (repeatable)
           --solver {grid|moments|both} --no-figures --quick
Exit:      0 success, 1 validation failure, 2 configuration error,
           3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import errors
from .config import apply_overrides, parse_config, resolved_config_text
from .dynamics import evolve
from .experiments import run_signaling
from .validation import bracket_check_report, run_validation

log = logging.getLogger("qchybrid")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qchybrid",
        description="Simulate coupled quantum-classical ensembles on "
        "configuration space and run signaling experiments.",
    )
    parser.add_argument("mode", choices=["simulate", "signaling", "bracket-check", "validate"])
    parser.add_argument("--config", default=None, help="JSON configuration file")
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a configuration value (dotted path, repeatable)",
    )
    parser.add_argument("--solver", choices=["grid", "moments", "both"], default=None)
    parser.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    parser.add_argument("--quick", action="store_true", help="reduced-size validate run")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _load_config(args):
    if args.config is not None:
        if not os.path.exists(args.config):
            raise errors.SchemaError(f"config file {args.config!r} does not exist")
        with open(args.config) as fh:
            text = fh.read()
    else:
        text = "{}"
    text = apply_overrides(text, args.set)
    config = parse_config(text)
    if args.seed is not None:
        config.seed = args.seed
        config.raw["seed"] = args.seed
    if args.solver is not None:
        config.protocol_solver = args.solver
        config.raw["protocol"]["solver"] = args.solver
    if args.no_figures:
        config.figures = False
        config.raw["figures"] = False
    return config


def _echo_config(config, outdir) -> None:
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "resolved_config.json"), "w") as fh:
        fh.write(resolved_config_text(config))


def _run_simulate(config, outdir) -> int:
    state = config.initial_state()
    t0, t1, sample_dt = config.simulate_span
    record = evolve(state, config.params, config.integrator, t0, t1, sample_dt=sample_dt)
    csv_path = os.path.join(outdir, "run.csv")
    record.to_csv(csv_path)
    log.info("wrote %s", csv_path)
    if config.figures:
        from .figures import run_record_figure

        run_record_figure(record, os.path.join(outdir, "run.png"))
    return EXIT_OK


def _run_signaling(config, outdir) -> int:
    report = run_signaling(config.protocol())
    report.write(outdir)
    log.info(
        "signaling: detected=%s max|divergence|=%.3e threshold=%.3e",
        report.detected,
        report.max_divergence,
        report.threshold,
    )
    if config.figures:
        from .figures import signal_report_figures

        signal_report_figures(report, outdir)
    return EXIT_OK


def _run_bracket_check(config, outdir) -> int:
    text, ok = bracket_check_report(
        config.seed, n_states=config.bracket_states, grid_n=config.bracket_grid_n
    )
    path = os.path.join(outdir, "bracket_check.txt")
    with open(path, "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_VALIDATION


def _run_validate(config, outdir, quick: bool) -> int:
    results = run_validation(quick=quick)
    summary = {
        "passed": sum(r.passed for r in results),
        "failed": sum(not r.passed for r in results),
        "checks": [
            {
                "name": r.name,
                "passed": r.passed,
                "measured": r.measured,
                "required": r.required,
                "seconds": round(r.seconds, 2),
                "detail": r.detail,
            }
            for r in results
        ],
    }
    with open(os.path.join(outdir, "validation.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return EXIT_OK if summary["failed"] == 0 else EXIT_VALIDATION


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = _load_config(args)
        outdir = args.out
        _echo_config(config, outdir)
        if args.mode == "simulate":
            return _run_simulate(config, outdir)
        if args.mode == "signaling":
            return _run_signaling(config, outdir)
        if args.mode == "bracket-check":
            return _run_bracket_check(config, outdir)
        return _run_validate(config, outdir, args.quick)
    except (errors.SchemaError, errors.RangeError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except errors.QCHybridError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
