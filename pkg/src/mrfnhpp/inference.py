"""Post-MCMC summaries: Rand index, Dahl's representative draw, DIC/LPML/BIC."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import BinnedPattern, Grid, PointPattern, bin_points
from .sampler import Chain

CRITERIA = ("DIC", "LPML", "BIC")


def _dense(z):
    _, inv = np.unique(np.asarray(z), return_inverse=True)
    return inv.ravel()


def rand_index(z1, z2) -> float:
    """Fraction of box pairs on which two partitions agree."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    if z1.shape != z2.shape:
        raise ValueError(f"label vectors differ in length: {z1.shape} vs {z2.shape}")
    n = len(z1)
    if n < 2:
        raise ValueError("rand index needs at least two elements")
    a = _dense(z1)
    b = _dense(z2)
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)

    def pairs(x):
        return int((x * (x - 1) // 2).sum())

    total = n * (n - 1) // 2
    disagree = pairs(table.sum(1)) + pairs(table.sum(0)) - 2 * pairs(table)
    return (total - disagree) / total


def membership_matrix(z) -> np.ndarray:
    z = np.asarray(z)
    return (z[:, None] == z[None, :]).astype(np.float64)


def dahl_distances(z_samples) -> np.ndarray:
    """Squared Frobenius distance of each draw's co-clustering matrix to the mean.

    Works with the integer co-clustering counts ``S = L * Hbar`` so that
    ``L^2 * sum (H - Hbar)^2 = L^2 sum H - 2 L sum H S + sum S^2`` is exact and
    ties are genuine ties.  Only one n x n accumulator is held in memory.
    """
    z_samples = np.asarray(z_samples)
    L, n = z_samples.shape
    S = np.zeros((n, n), dtype=np.int64)
    for z in z_samples:
        S += z[:, None] == z[None, :]
    s_sq = int(np.sum(S * S))
    scaled = np.empty(L, dtype=np.int64)
    for l, z in enumerate(z_samples):
        same = z[:, None] == z[None, :]
        scaled[l] = L * L * int(same.sum()) - 2 * L * int(S[same].sum()) + s_sq
    return scaled / float(L * L)


def dahl_select(chain) -> int:
    """Index of the retained draw closest to the mean co-clustering matrix.

    Ties go to the earliest draw.
    """
    z = chain.z if isinstance(chain, Chain) else np.asarray(chain)
    if len(z) == 0:
        raise ValueError("chain has no retained samples")
    return int(np.argmin(dahl_distances(z)))


def _as_binned(data, grid: Grid | None) -> BinnedPattern:
    if isinstance(data, PointPattern):
        if grid is None:
            raise ValueError("a grid is required to evaluate a raw point pattern")
        return bin_points(data, grid)
    return data


def log_likelihood(surface, binned, grid: Grid | None = None) -> float:
    """NHPP log-likelihood of a per-box intensity surface.

    ``binned`` may also be a :class:`PointPattern`, binned on ``grid``.
    """
    binned = _as_binned(binned, grid)
    surface = np.asarray(surface, dtype=float)
    counts = binned.counts
    if surface.shape != counts.shape:
        raise ValueError("surface and counts differ in length")
    if (surface <= 0).any():
        raise ValueError("intensity surface must be positive")
    occupied = counts > 0
    return float(np.sum(counts[occupied] * np.log(surface[occupied])) - np.sum(surface * binned.areas))


def deviance(surface, binned, grid: Grid | None = None) -> float:
    return -2.0 * log_likelihood(surface, binned, grid)


def dic(chain: Chain, binned: BinnedPattern, dahl_index: int | None = None) -> float:
    if len(chain) == 0:
        raise ValueError("chain has no retained samples")
    if dahl_index is None:
        dahl_index = dahl_select(chain)
    surfaces = chain.surfaces()
    mean_dev = float(np.mean([deviance(s, binned) for s in surfaces]))
    return 2.0 * mean_dev - deviance(surfaces[dahl_index], binned)


def lpml(chain: Chain, binned: BinnedPattern) -> float:
    if len(chain) == 0:
        raise ValueError("chain has no retained samples")
    surfaces = chain.surfaces()
    # a box whose draws all agree has that value as its harmonic mean; taking it
    # directly avoids the rounding in 1 / (1 / x)
    constant = (surfaces == surfaces[0]).all(axis=0)
    harmonic = np.where(constant, surfaces[0], 1.0 / np.mean(1.0 / surfaces, axis=0))
    arithmetic = surfaces.mean(axis=0)
    counts = binned.counts
    occupied = counts > 0
    return float(np.sum(counts[occupied] * np.log(harmonic[occupied])) - np.sum(arithmetic * binned.areas))


def bic(surface, n_clusters: int, binned: BinnedPattern) -> float:
    N = binned.N
    if N < 1:
        raise ValueError("BIC is undefined for an empty point pattern")
    return -2.0 * log_likelihood(surface, binned) + n_clusters * math.log(N)


@dataclass
class FitReport:
    eta: float
    model: str
    dahl_index: int
    K: int
    z: np.ndarray
    lam: np.ndarray
    criteria: dict
    ri_trace: np.ndarray = field(repr=False)
    k_trace: np.ndarray = field(repr=False)
    posterior_mean: np.ndarray = field(repr=False)
    posterior_quantiles: np.ndarray = field(repr=False, default=None)
    meta: dict = field(default_factory=dict)

    @property
    def surface(self) -> np.ndarray:
        return self.lam[self.z]

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("z", "lam", "ri_trace", "k_trace", "posterior_mean", "posterior_quantiles"):
            if d[key] is not None:
                d[key] = np.asarray(d[key]).tolist()
        d["ri_trace"] = [None if not np.isfinite(v) else v for v in d["ri_trace"]]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d) -> "FitReport":
        d = dict(d)
        d["z"] = np.asarray(d["z"], dtype=np.int64)
        d["lam"] = np.asarray(d["lam"], dtype=float)
        d["ri_trace"] = np.array([np.nan if v is None else v for v in d["ri_trace"]], dtype=float)
        d["k_trace"] = np.asarray(d["k_trace"], dtype=np.int64)
        d["posterior_mean"] = np.asarray(d["posterior_mean"], dtype=float)
        if d.get("posterior_quantiles") is not None:
            d["posterior_quantiles"] = np.asarray(d["posterior_quantiles"], dtype=float)
        return cls(**d)


QUANTILES = (0.025, 0.5, 0.975)


def summarize_chain(chain: Chain, binned: BinnedPattern) -> FitReport:
    """Dahl point estimate plus the three selection criteria."""
    idx = dahl_select(chain)
    surfaces = chain.surfaces()
    z_hat = chain.z[idx].copy()
    lam_hat = chain.lam[idx].copy()
    surface = lam_hat[z_hat]
    K = len(np.unique(z_hat))
    criteria = {
        "DIC": dic(chain, binned, idx),
        "LPML": lpml(chain, binned),
        "BIC": bic(surface, K, binned) if binned.N > 0 else float("nan"),
    }
    return FitReport(
        eta=float(chain.eta),
        model=chain.model,
        dahl_index=idx,
        K=K,
        z=z_hat,
        lam=lam_hat,
        criteria=criteria,
        ri_trace=chain.ri_trace,
        k_trace=chain.k_trace,
        posterior_mean=surfaces.mean(axis=0),
        posterior_quantiles=np.quantile(surfaces, QUANTILES, axis=0),
        meta=dict(chain.meta),
    )


def select_eta(fits, criterion: str) -> float:
    """Best eta under a criterion: minimum DIC/BIC, maximum LPML; ties to the smaller eta."""
    if criterion not in CRITERIA:
        raise ValueError(f"unknown criterion {criterion!r}")
    fits = list(fits)
    if not fits:
        raise ValueError("no fits to select from")
    sign = -1.0 if criterion == "LPML" else 1.0
    ordered = sorted(fits, key=lambda ef: ef[0])
    best_eta, best_val = None, math.inf
    for eta, report in ordered:
        val = sign * report.criteria[criterion]
        if val < best_val:
            best_eta, best_val = eta, val
    if best_eta is None:
        raise ValueError(f"no finite {criterion} values")
    return best_eta


def criteria_table_csv(fits) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["eta", "DIC", "LPML", "BIC", "K"])
    for eta, report in sorted(fits, key=lambda ef: ef[0]):
        c = report.criteria
        writer.writerow([eta, repr(c["DIC"]), repr(c["LPML"]), repr(c["BIC"]), report.K])
    return buf.getvalue()
