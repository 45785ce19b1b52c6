"""Command-line entry point ``walldiff``.

Exit status: 0 on success, 1 for bad input (arguments, config, data, files),
2 for numerical failures.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io, workflow
from .config import load_config, split_overrides
from .errors import InputError, NumericalError
from .scenarios import SCENARIOS

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def build_parser():
    parser = _Parser(prog="walldiff", description="Wall diffusivity estimation toolkit. "
                     "Config keys can be overridden with --section.key VALUE.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, data=True):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--out", default="run", help="output directory")
        if data:
            p.add_argument("--data", required=True, help="dataset CSV")

    p = sub.add_parser("synth", help="generate a scenario dataset")
    common(p, data=False)
    p.add_argument("--scenario", required=True, choices=sorted(SCENARIOS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--name", help="output file name")

    p = sub.add_parser("simulate", help="forward run of the LOM or a ROM")
    common(p)
    p.add_argument("--model", choices=("lom", "rom"), default="lom")
    p.add_argument("--rom")
    p.add_argument("--alpha", type=float)
    p.add_argument("--plan", help="oed.json selecting the window")

    p = sub.add_parser("learn", help="train a reduced model")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--plan", help="oed.json selecting the window")

    p = sub.add_parser("oed", help="select the observation window")
    common(p)
    p.add_argument("--window-days", type=float)

    p = sub.add_parser("estimate", help="estimate the diffusivity")
    common(p)
    p.add_argument("--rom")
    p.add_argument("--plan", help="oed.json selecting the window")

    p = sub.add_parser("validate", help="whole-sequence reliability check")
    common(p)
    p.add_argument("--rom")
    p.add_argument("--estimate", help="estimate.json (or a number) giving the diffusivity")

    p = sub.add_parser("report", help="collect run summaries")
    p.add_argument("--out", default="run")
    return parser


def _estimate_value(text):
    try:
        return float(text)
    except ValueError:
        pass
    path = Path(text)
    if not path.is_file():
        raise InputError(f"estimate not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return float(json.load(fh)["estimate"])


def dispatch(argv):
    rest, overrides = split_overrides(list(argv))
    args = build_parser().parse_args(rest)
    if args.command == "report":
        workflow.run_report(args.out)
        return {"report": str(Path(args.out) / "report.md")}
    cfg = load_config(getattr(args, "config", None), overrides)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if getattr(args, "window_days", None) is not None:
        cfg.oed.window_days = args.window_days
        cfg.validate()
    if getattr(args, "rom", None) is None and args.command != "synth":
        # default to the artifact a learn run writes into the same output directory
        args.rom = str(workflow.artifact_path(cfg, out))
    cfg.write(out / f"{args.command}.config.ini")

    if args.command == "synth":
        return workflow.run_synth(args.scenario, args.seed, out, noise=not args.no_noise,
                                  alpha=args.alpha, name=args.name)
    ds = io.load_dataset(args.data)
    plan = workflow.load_plan(getattr(args, "plan", None))
    if args.command == "simulate":
        return workflow.run_simulate(cfg, ds, out, model=args.model, rom_path=args.rom,
                                     alpha=args.alpha, plan=plan)
    if args.command == "learn":
        return workflow.run_learn(cfg, ds, args.seed, out, plan=plan)
    if args.command == "oed":
        return workflow.run_oed(cfg, ds, out)
    if args.command == "estimate":
        return workflow.run_estimate(cfg, ds, out, rom_path=args.rom, plan=plan)
    if args.command == "validate":
        if args.estimate is None:
            raise InputError("validate needs --estimate (estimate.json or a value)")
        return workflow.run_validate(cfg, ds, out, _estimate_value(args.estimate),
                                     rom_path=args.rom)
    raise InputError(f"unknown command {args.command}")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        summary = dispatch(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps(summary, indent=2, sort_keys=True, default=workflow._json_default))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
