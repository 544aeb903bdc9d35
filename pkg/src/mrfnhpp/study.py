"""Replicated simulation studies over an eta grid."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import bin_points, rook_neighbors
from .inference import CRITERIA, FitReport, rand_index, select_eta, summarize_chain
from .mfm import MfmConfig, run_mfm_chain
from .sampler import Hyperparams, SamplerConfig, run_chain
from .simulate import SimulationSetting, simulate_nhpp

log = logging.getLogger(__name__)

SIM_ETA_GRID = tuple(np.round(np.arange(0.0, 8.0 + 1e-9, 0.5), 10).tolist())
SHOT_ETA_GRID = tuple(np.round(np.arange(0.0, 7.0 + 1e-9, 0.5), 10).tolist())


class ReplicateError(RuntimeError):
    def __init__(self, replicate, cause):
        self.replicate = replicate
        super().__init__(f"replicate {replicate} failed: {cause!r}")


def task_seed(master, *path) -> int:
    """Independent 63-bit seed for a task identified by an integer path."""
    ss = np.random.SeedSequence([int(master), *[int(p) for p in path]])
    return int(ss.generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


def _fit_one(args):
    binned, graph, hyper, config, keep_chain = args
    t0 = time.perf_counter()
    chain = run_chain(binned, graph, hyper, config)
    report = summarize_chain(chain, binned)
    return float(hyper.eta), report, time.perf_counter() - t0, chain if keep_chain else None


def fit_eta_grid(binned, graph, hyper: Hyperparams, config: SamplerConfig, eta_grid, seed,
                 keep_chains=False, jobs=1):
    """One chain per eta; returns ``[(eta, FitReport, runtime, chain_or_None), ...]``.

    Chain ``j`` is seeded from ``(seed, 1, j)`` so results do not depend on ``jobs``.
    """
    tasks = [(binned, graph, replace(hyper, eta=float(eta)), replace(config, seed=task_seed(seed, 1, j)),
              keep_chains) for j, eta in enumerate(eta_grid)]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_fit_one, tasks))
    return [_fit_one(t) for t in tasks]


def _one_replicate(args):
    rep, setting, config, eta_grid, seed, hyper, include_mfm, mfm_gamma = args
    try:
        return _replicate_body(rep, setting, config, eta_grid, seed, hyper, include_mfm, mfm_gamma)
    except Exception as exc:  # noqa: BLE001 - re-raised with context
        raise ReplicateError(rep, exc) from exc


def _replicate_body(rep, setting, config, eta_grid, seed, hyper, include_mfm, mfm_gamma):
    grid = setting.grid
    truth = setting.assignment
    pattern = simulate_nhpp(setting.surface(), seed=task_seed(seed, rep, 0))
    binned = bin_points(pattern, grid)
    graph = rook_neighbors(grid)
    fits = fit_eta_grid(binned, graph, hyper, config, eta_grid, task_seed(seed, rep))
    by_eta = {eta: (rep_, rt) for eta, rep_, rt, _ in fits}

    rows = []
    surfaces = {}

    def record(label, eta, report: FitReport, runtime):
        rows.append({
            "replicate": rep,
            "criterion": label,
            "eta": eta,
            "K": int(report.K),
            "RI": rand_index(report.z, truth),
            "runtime": runtime,
        })
        surfaces[label] = {
            "posterior_mean": report.posterior_mean,
            "quantiles": report.posterior_quantiles,
        }

    if 0.0 in by_eta:
        record("eta0", 0.0, *by_eta[0.0])
    pairs = [(eta, r) for eta, r, _, _ in fits]
    for crit in CRITERIA:
        eta_star = select_eta(pairs, crit)
        record(crit, eta_star, *by_eta[eta_star])
    if include_mfm:
        cfg = replace(config, seed=task_seed(seed, rep, 2))
        t0 = time.perf_counter()
        chain = run_mfm_chain(binned, MfmConfig(gamma=mfm_gamma), hyper, cfg)
        report = summarize_chain(chain, binned)
        record("MFM", None, report, time.perf_counter() - t0)
    log.info("replicate %d: %s", rep, {r["criterion"]: (r["eta"], r["K"]) for r in rows})
    return rep, rows, surfaces, binned.N


@dataclass
class StudyReport:
    setting: str
    K_true: int
    n_reps: int
    eta_grid: tuple
    true_surface: np.ndarray
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    surfaces: dict = field(default_factory=dict)
    n_points: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "K_true": self.K_true,
            "n_reps": self.n_reps,
            "eta_grid": list(self.eta_grid),
            "true_surface": np.asarray(self.true_surface).tolist(),
            "summary": self.summary,
            "surfaces": {k: {kk: np.asarray(vv).tolist() for kk, vv in v.items()}
                         for k, v in self.surfaces.items()},
            "n_points": list(self.n_points),
            "rows": self.rows,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    def rows_csv(self) -> str:
        buf = io.StringIO()
        cols = ["replicate", "criterion", "eta", "K", "RI", "runtime"]
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in self.rows:
            writer.writerow({k: ("" if row[k] is None else row[k]) for k in cols})
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d) -> "StudyReport":
        return cls(
            setting=d["setting"],
            K_true=d["K_true"],
            n_reps=d["n_reps"],
            eta_grid=tuple(d["eta_grid"]),
            true_surface=np.asarray(d["true_surface"]),
            rows=d["rows"],
            summary=d["summary"],
            surfaces={k: {kk: np.asarray(vv) for kk, vv in v.items()} for k, v in d["surfaces"].items()},
            n_points=d.get("n_points", []),
        )


def _aggregate(report: StudyReport, per_rep_surfaces):
    truth = np.asarray(report.true_surface)
    labels = sorted({r["criterion"] for r in report.rows})
    for label in labels:
        rows = [r for r in report.rows if r["criterion"] == label]
        etas = [r["eta"] for r in rows if r["eta"] is not None]
        report.summary[label] = {
            "K_accuracy": float(np.mean([r["K"] == report.K_true for r in rows])),
            "mean_RI": float(np.mean([r["RI"] for r in rows])),
            "mean_K": float(np.mean([r["K"] for r in rows])),
            "mean_eta": float(np.mean(etas)) if etas else None,
        }
        means = np.array([s[label]["posterior_mean"] for s in per_rep_surfaces])
        surf = {
            "posterior_mean": means.mean(axis=0),
            "abs_relative_bias": np.abs(means.mean(axis=0) - truth) / truth,
        }
        quants = [s[label]["quantiles"] for s in per_rep_surfaces if s[label]["quantiles"] is not None]
        if quants:
            q = np.mean(quants, axis=0)
            surf.update({"q025": q[0], "median": q[1], "q975": q[2]})
        report.surfaces[label] = surf


def run_replicates(setting: SimulationSetting, n_reps: int, sampler_config: SamplerConfig,
                   eta_grid=SIM_ETA_GRID, seed: int = 0, hyper: Hyperparams | None = None,
                   include_mfm: bool = False, mfm_gamma: float = 1.0, jobs: int = 1) -> StudyReport:
    """Simulate, fit across the eta grid and summarise each replicate."""
    hyper = hyper or Hyperparams(1.0, 1.0, 1.0, 0.0)
    eta_grid = tuple(float(e) for e in eta_grid)
    if not eta_grid:
        raise ValueError("eta grid is empty")
    report = StudyReport(
        setting=setting.name,
        K_true=setting.K,
        n_reps=n_reps,
        eta_grid=eta_grid,
        true_surface=setting.surface().lam,
    )
    if n_reps <= 0:
        return report
    tasks = [(rep, setting, sampler_config, eta_grid, seed, hyper, include_mfm, mfm_gamma)
             for rep in range(n_reps)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_one_replicate, tasks))
    else:
        results = [_one_replicate(t) for t in tasks]
    results.sort(key=lambda r: r[0])
    per_rep_surfaces = []
    for _, rows, surfaces, n_pts in results:
        report.rows.extend(rows)
        per_rep_surfaces.append(surfaces)
        report.n_points.append(int(n_pts))
    _aggregate(report, per_rep_surfaces)
    return report
