"""Command-line interface.

Subcommands: ``simulate``, ``fit``, ``study``, ``ingest`` and ``report``.
Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .grid import Grid, PointPattern, StudyRegion, bin_points, build_grid, rook_neighbors
from .inference import CRITERIA, FitReport, criteria_table_csv, select_eta, summarize_chain
from .mfm import MfmConfig, run_mfm_chain
from .sampler import Hyperparams, SamplerConfig
from .simulate import make_setting, simulate_nhpp
from .study import SIM_ETA_GRID, StudyReport, fit_eta_grid, run_replicates, task_seed

log = logging.getLogger("mrfnhpp")

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib


class UsageError(Exception):
    """Bad arguments or configuration; exits with status 2."""


@dataclass
class RunConfig:
    model: str = "mrf-dpm"
    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.0
    gamma: float = 1.0
    eta_grid: tuple = SIM_ETA_GRID
    burn_in: int = 2000
    retained: int = 2000
    thin: int = 10
    init: str = "random"
    init_k: int = 10
    input: str | None = None
    out: str = "."
    jobs: int = 1
    seed: int | None = None
    dump_chains: bool = False
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.model not in ("mrf-dpm", "mfm"):
            raise UsageError(f"unknown model {self.model!r}")
        grid = tuple(float(e) for e in self.eta_grid)
        if not grid:
            raise UsageError("eta grid is empty")
        if any(e < 0 for e in grid):
            raise UsageError("eta values must be nonnegative")
        if list(grid) != sorted(grid):
            raise UsageError("eta grid must be sorted")
        self.eta_grid = grid
        try:
            self.hyper()
            self.chain_config()
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def hyper(self, eta=0.0) -> Hyperparams:
        return Hyperparams(self.a, self.b, self.alpha, eta)

    def chain_config(self, seed=None) -> SamplerConfig:
        return SamplerConfig(self.burn_in, self.retained, self.thin, seed, self.init, self.init_k)


def parse_eta_grid(text) -> tuple:
    """``"0:8:0.5"`` (inclusive range) or ``"0,0.5,1"``."""
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    text = str(text).strip()
    try:
        if ":" in text:
            lo, hi, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(round((hi - lo) / step))
            return tuple(np.round(lo + step * np.arange(n + 1), 10).tolist())
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"cannot parse eta grid {text!r}") from None


def load_config_file(path) -> dict:
    path = Path(path)
    try:
        if path.suffix.lower() == ".toml":
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(path) as fh:
                data = json.load(fh)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in data.items()}


_RUN_KEYS = ("model", "a", "b", "alpha", "gamma", "eta_grid", "burn_in", "retained", "thin", "init",
             "init_k", "jobs", "seed", "dump_chains")


def build_run_config(args) -> RunConfig:
    values = load_config_file(args.config) if getattr(args, "config", None) else {}
    unknown = set(values) - set(_RUN_KEYS) - {"input", "out"}
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in _RUN_KEYS:
        flag = getattr(args, key, None)
        if flag is not None and flag is not False:
            values[key] = flag
    if "eta_grid" in values:
        values["eta_grid"] = parse_eta_grid(values["eta_grid"])
    values["input"] = getattr(args, "pattern", None) or values.get("input")
    values["out"] = getattr(args, "out", None) or values.get("out", ".")
    return RunConfig(**values)


def _add_run_flags(p):
    p.add_argument("--config", help="JSON or TOML file with run settings; flags override it")
    p.add_argument("--model", choices=("mrf-dpm", "mfm"))
    p.add_argument("--eta-grid", dest="eta_grid", help='e.g. "0:8:0.5" or "0,1,2"')
    p.add_argument("--a", type=float, help="Gamma prior shape")
    p.add_argument("--b", type=float, help="Gamma prior rate")
    p.add_argument("--alpha", type=float, help="DP concentration")
    p.add_argument("--gamma", type=float, help="MFM Dirichlet parameter")
    p.add_argument("--burn-in", dest="burn_in", type=int)
    p.add_argument("--retained", type=int, help="post burn-in iterations")
    p.add_argument("--thin", type=int)
    p.add_argument("--init", choices=("random", "single"))
    p.add_argument("--init-k", dest="init_k", type=int)
    p.add_argument("--jobs", type=int, help="worker processes")
    p.add_argument("--seed", type=int)


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    setting = make_setting(args.setting)
    seed = 0 if args.seed is None else args.seed
    pattern = simulate_nhpp(setting.surface(), seed=seed)
    out = Path(args.out or f"setting{args.setting}_seed{seed}.json")
    out.parent.mkdir(parents=True, exist_ok=True)
    grid = setting.grid
    doc = {
        "region": grid.region.to_dict(),
        "n_x": grid.n_x,
        "n_y": grid.n_y,
        "points": pattern.points.tolist(),
        "dropped": 0,
        "truth": {
            "setting": args.setting,
            "seed": seed,
            "labels": setting.assignment.tolist(),
            "values": list(setting.component_values),
            "lambda": setting.surface().lam.tolist(),
        },
    }
    out.write_text(json.dumps(doc))
    print(json.dumps({"out": str(out), "N": pattern.N, "K": setting.K}))
    return 0


# ---------------------------------------------------------------------------
# fit
# ---------------------------------------------------------------------------

def _load_pattern(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
        region = StudyRegion.from_dict(doc["region"])
        grid = build_grid(region, int(doc["n_x"]), int(doc["n_y"]))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot read pattern file {path}: {exc}") from None
    pattern = PointPattern(np.asarray(doc["points"], dtype=float).reshape(-1, 2), region)
    return pattern, grid, doc


def _fmt_eta(eta) -> str:
    return f"{eta:g}".replace(".", "p")


def _write_jsonl(path, chain):
    with open(path, "w") as fh:
        for rec in chain.iter_jsonl():
            fh.write(json.dumps(rec) + "\n")


def run_fit(cfg: RunConfig, pattern, grid: Grid, out: Path) -> dict:
    from .plotting import emit_heatmap

    out.mkdir(parents=True, exist_ok=True)
    binned = bin_points(pattern, grid)
    seed = 0 if cfg.seed is None else cfg.seed
    emit_heatmap(binned.counts, out / "counts", grid, title="counts per box")
    (out / "fits").mkdir(exist_ok=True)
    if cfg.dump_chains:
        (out / "chains").mkdir(exist_ok=True)

    if cfg.model == "mfm":
        chain_cfg = cfg.chain_config(task_seed(seed, 2))
        chain = run_mfm_chain(binned, MfmConfig(gamma=cfg.gamma), cfg.hyper(), chain_cfg)
        report = summarize_chain(chain, binned)
        (out / "fits" / "mfm.json").write_text(report.to_json())
        if cfg.dump_chains:
            _write_jsonl(out / "chains" / "mfm.jsonl", chain)
        emit_heatmap(report.surface, out / "surface_mfm", grid, title=f"MFM, K={report.K}")
        selection = {"model": "mfm", "K": report.K, "criteria": report.criteria, "grid": grid.to_dict(),
                     "fits": {"mfm": "fits/mfm.json"}}
        (out / "selection.json").write_text(json.dumps(selection, indent=1, sort_keys=True))
        return selection

    graph = rook_neighbors(grid)
    results = fit_eta_grid(binned, graph, cfg.hyper(), cfg.chain_config(), cfg.eta_grid, seed,
                           keep_chains=cfg.dump_chains, jobs=cfg.jobs)
    fits = []
    files = {}
    for eta, report, runtime, chain in results:
        report.meta["runtime"] = runtime
        name = f"eta_{_fmt_eta(eta)}"
        (out / "fits" / f"{name}.json").write_text(report.to_json())
        files[f"{eta:g}"] = f"fits/{name}.json"
        if chain is not None:
            _write_jsonl(out / "chains" / f"{name}.jsonl", chain)
        fits.append((eta, report))
    (out / "criteria.csv").write_text(criteria_table_csv(fits))

    by_eta = dict(fits)
    selected = {}
    if binned.N > 0:
        crits = CRITERIA
    else:
        crits = ("DIC", "LPML")
    for crit in crits:
        eta_star = select_eta(fits, crit)
        rep = by_eta[eta_star]
        selected[crit] = {"eta": eta_star, "K": rep.K, "value": rep.criteria[crit]}
        emit_heatmap(rep.surface, out / f"surface_{crit}", grid,
                     title=f"{crit}: eta={eta_star:g}, K={rep.K}")
    selection = {"model": "mrf-dpm", "selected": selected, "grid": grid.to_dict(), "fits": files,
                 "N": binned.N}
    (out / "selection.json").write_text(json.dumps(selection, indent=1, sort_keys=True))
    return selection


def cmd_fit(args) -> int:
    cfg = build_run_config(args)
    if not cfg.input:
        raise UsageError("fit needs a pattern file")
    pattern, grid, _ = _load_pattern(cfg.input)
    selection = run_fit(cfg, pattern, grid, Path(cfg.out))
    print(json.dumps(selection.get("selected", {"K": selection.get("K")}), sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# study
# ---------------------------------------------------------------------------

def summary_csv(study: StudyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["method", "K_accuracy", "mean_RI", "mean_K", "mean_eta"])
    for label in ("eta0", "BIC", "DIC", "LPML", "MFM"):
        s = study.summary.get(label)
        if s:
            writer.writerow([label, s["K_accuracy"], s["mean_RI"], s["mean_K"],
                             "" if s["mean_eta"] is None else s["mean_eta"]])
    return buf.getvalue()


def cmd_study(args) -> int:
    if args.seed is None and os.environ.get("CI"):
        raise UsageError("--seed is required for study runs under CI")
    cfg = build_run_config(args)
    seed = 0 if cfg.seed is None else cfg.seed
    setting = make_setting(args.setting)
    study = run_replicates(setting, args.reps, cfg.chain_config(), cfg.eta_grid, seed, cfg.hyper(),
                           include_mfm=args.include_mfm, mfm_gamma=cfg.gamma, jobs=cfg.jobs)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "study.json").write_text(study.to_json())
    (out / "replicates.csv").write_text(study.rows_csv())
    (out / "summary.csv").write_text(summary_csv(study))
    print(json.dumps(study.summary, sort_keys=True))
    return 0


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    from .ingest import (DEFAULT_REGION, load_mapping, parse_shot_csv, shot_summary,
                         to_study_pattern, write_pattern_file)

    mapping = load_mapping(args.mapping) if args.mapping else None
    region = StudyRegion(*args.region) if args.region else DEFAULT_REGION
    records, errors = parse_shot_csv(args.csv, mapping, strict=not args.lenient)
    pattern, dropped = to_study_pattern(records, region)
    out = Path(args.out or Path(args.csv).with_suffix(".pattern.json"))
    out.parent.mkdir(parents=True, exist_ok=True)
    write_pattern_file(out, pattern, (args.nx, args.ny), dropped)
    summary = shot_summary(records)
    summary.update({"retained": pattern.N, "dropped": dropped, "skipped_rows": len(errors), "out": str(out)})
    if args.counts:
        grid = build_grid(region, args.nx, args.ny)
        Path(args.counts).write_text(bin_points(pattern, grid).counts_csv())
    print(json.dumps(summary))
    return 0


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _report_fit(path: Path) -> list:
    from .plotting import plot_criteria, plot_fit_surfaces, plot_traces

    selection = json.loads((path / "selection.json").read_text())
    grid = Grid.from_dict(selection["grid"])
    counts = np.loadtxt(path / "counts.csv", delimiter=",", ndmin=2).ravel()
    written = []
    reports = {}
    for key, rel in selection["fits"].items():
        reports[key] = FitReport.from_dict(json.loads((path / rel).read_text()))
    if selection["model"] == "mfm":
        rep = reports["mfm"]
        written.append(plot_fit_surfaces(rep, grid, counts, path / "fit_mfm.png"))
        written.append(plot_traces(rep, path / "trace_mfm.png"))
        return written
    fits = [(float(k), r) for k, r in reports.items()]
    chosen = {c: v["eta"] for c, v in selection["selected"].items()}
    written.append(plot_criteria(fits, path / "criteria.png", chosen))
    for crit, eta in chosen.items():
        rep = reports[f"{eta:g}"]
        written.append(plot_fit_surfaces(rep, grid, counts, path / f"fit_{crit}.png"))
        written.append(plot_traces(rep, path / f"trace_{crit}.png"))
    return written


def _report_study(path: Path) -> list:
    from .plotting import plot_study_bias, plot_study_surfaces

    study = StudyReport.from_dict(json.loads((path / "study.json").read_text()))
    written = [path / "summary.csv"]
    (path / "summary.csv").write_text(summary_csv(study))
    if not study.surfaces:
        return written
    grid = make_setting(int(study.setting.removeprefix("setting"))).grid
    written.append(plot_study_surfaces(study, grid, path / "study_surfaces.png"))
    written.append(plot_study_bias(study, grid, path / "study_bias.png"))
    return written


def cmd_report(args) -> int:
    path = Path(args.directory)
    if (path / "study.json").exists():
        written = _report_study(path)
    elif (path / "selection.json").exists():
        written = _report_fit(path)
    else:
        raise UsageError(f"{path} holds neither a fit (selection.json) nor a study (study.json)")
    print(json.dumps([str(p) for p in written]))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrfnhpp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a point pattern from a benchmark setting")
    p.add_argument("--setting", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a pattern over an eta grid and select eta")
    p.add_argument("pattern", nargs="?", help="pattern JSON from simulate or ingest")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-chains", dest="dump_chains", action="store_true",
                   help="write retained draws as JSON lines")
    _add_run_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("study", help="replicated simulation study")
    p.add_argument("--setting", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--reps", type=int, default=20)
    p.add_argument("--include-mfm", action="store_true", help="also fit the MFM benchmark")
    p.add_argument("--out", help="output directory")
    _add_run_flags(p)
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("ingest", help="convert a shot-chart CSV to a pattern file")
    p.add_argument("csv")
    p.add_argument("--out")
    p.add_argument("--mapping", help="JSON mapping of field name to CSV header")
    p.add_argument("--lenient", action="store_true", help="skip malformed rows instead of failing")
    p.add_argument("--region", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    p.add_argument("--nx", type=int, default=50)
    p.add_argument("--ny", type=int, default=35)
    p.add_argument("--counts", help="also write the per-box count matrix as CSV")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("report", help="render figures for a fit or study directory")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mrfnhpp {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - top-level reporter
        log.debug("failure", exc_info=True)
        print(f"mrfnhpp {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
