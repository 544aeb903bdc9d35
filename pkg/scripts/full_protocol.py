"""Run the complete simulation and shot-chart protocol through the CLI.

Default scale is 100 replicates of each benchmark setting with the MFM
benchmark included, chains of 2000 burn-in + 2000 retained iterations thinned
by 10, and an eta grid of 0..8 in steps of 0.5.  The shot chart is fitted on a
50 x 35 grid with eta in 0..7.  At full scale this takes hours on one core;
``--jobs`` spreads replicates over processes.

    python scripts/full_protocol.py --out runs/full --jobs 8
    python scripts/full_protocol.py --shots my_player.csv --settings 2

Every stage writes into its own subdirectory of ``--out`` and is followed by
``mrfnhpp report`` on that directory.
"""
import argparse
import json
import sys
import time
from importlib import resources
from pathlib import Path

from mrfnhpp.cli import main as cli

# reference values for the recovery rate of the BIC-selected fits and their mean Rand index
TARGETS = {2: {"BIC": (0.82, 0.991)}}


def run(argv):
    argv = [str(a) for a in argv]
    print("$ mrfnhpp " + " ".join(argv), flush=True)
    code = cli(argv)
    if code != 0:
        sys.exit(f"stage failed with exit code {code}")


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", default="runs/full")
    p.add_argument("--settings", type=int, nargs="*", default=[1, 2, 3])
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--burn-in", type=int, default=2000)
    p.add_argument("--retained", type=int, default=2000)
    p.add_argument("--thin", type=int, default=10)
    p.add_argument("--sim-eta-grid", default="0:8:0.5")
    p.add_argument("--shot-eta-grid", default="0:7:0.5")
    p.add_argument("--shots", help="shot-chart CSV; defaults to the bundled synthetic file")
    p.add_argument("--no-shots", action="store_true")
    p.add_argument("--no-mfm", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=20240101)
    args = p.parse_args(argv)

    out = Path(args.out)
    chain = ["--burn-in", args.burn_in, "--retained", args.retained, "--thin", args.thin,
             "--jobs", args.jobs, "--seed", args.seed]
    t0 = time.perf_counter()

    for sid in args.settings:
        d = out / f"setting{sid}"
        run(["study", "--setting", sid, "--reps", args.reps, "--eta-grid", args.sim_eta_grid,
             "--out", d, *chain, *([] if args.no_mfm else ["--include-mfm"])])
        run(["report", d])
        summary = json.loads((d / "study.json").read_text())["summary"]
        for label, (acc, ri) in TARGETS.get(sid, {}).items():
            got = summary.get(label)
            if got:
                print(f"setting {sid} {label}: K accuracy {got['K_accuracy']:.2f} (reference {acc}), "
                      f"mean RI {got['mean_RI']:.3f} (reference {ri})")

    if not args.no_shots:
        csv_path = Path(args.shots) if args.shots else resources.files("mrfnhpp") / "data" / "synthetic_shots.csv"
        d = out / "shots"
        d.mkdir(parents=True, exist_ok=True)
        run(["ingest", csv_path, "--out", d / "pattern.json"])
        run(["fit", d / "pattern.json", "--eta-grid", args.shot_eta_grid, "--out", d / "fit", *chain])
        run(["report", d / "fit"])
        if not args.no_mfm:
            run(["fit", d / "pattern.json", "--model", "mfm", "--out", d / "fit_mfm", *chain])
            run(["report", d / "fit_mfm"])

    print(f"done in {time.perf_counter() - t0:.0f} s; outputs under {out}")


if __name__ == "__main__":
    main()
