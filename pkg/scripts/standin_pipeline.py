"""Run the monitoring-campaign stand-in end to end through the command line:
synth, window selection, ROM learning on the selected window, estimation with
both models, whole-sequence validation and the report.
"""
import argparse
import sys
import time
from pathlib import Path

from walldiff.cli import main as walldiff

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "standin.ini"


def step(*argv):
    t0 = time.perf_counter()
    code = walldiff([str(a) for a in argv])
    print(f"# {argv[0]}: exit {code}, {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    if code:
        sys.exit(code)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="standin_run")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--config", default=str(CONFIG))
    args = ap.parse_args()
    out = Path(args.out)
    data = out / "real-stand-in.csv"
    common = ["--config", args.config, "--out", out]
    step("synth", "--scenario", "real-stand-in", "--seed", args.seed, "--out", out)
    step("oed", "--data", data, *common)
    step("learn", "--data", data, "--seed", args.seed, "--plan", out / "oed.json", *common)
    step("estimate", "--data", data, "--plan", out / "oed.json", *common)
    step("validate", "--data", data, "--estimate", out / "estimate.json", *common)
    step("report", "--out", out)


if __name__ == "__main__":
    main()
