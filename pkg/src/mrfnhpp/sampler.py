"""Collapsed Gibbs sampler for the MRF-constrained DP mixture of NHPPs.

Each iteration first redraws the cluster intensities from their conjugate
Gamma conditionals, then sweeps the boxes in index order updating each
label from

    existing c:  n_c(-i) * exp(eta * sum_j d_ij 1[z_j = c]) * Pois(N_i | lam_c mu_i)
    new:         alpha * integral of Pois(N_i | lam mu_i) Gamma(lam; a, b) dlam

with the Poisson ``N_i!`` dropped from both branches.  A box that opens a new
cluster gets its intensity drawn from Gamma(N_i + a, b + mu_i).  Labels are
0-based and kept dense: when a cluster empties, the highest label is moved
into its slot.

With ``eta = 0`` the sampler is the plain CRP mixture.  The MFM benchmark
reuses the same kernel with different prior weights (see :mod:`.mfm`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .grid import BinnedPattern, NeighborGraph

MODEL_DPM = 0
MODEL_MFM = 1


@dataclass(frozen=True)
class Hyperparams:
    a: float = 1.0
    b: float = 1.0
    alpha: float = 1.0
    eta: float = 0.0

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and self.alpha > 0):
            raise ValueError("a, b and alpha must be positive")
        if not self.eta >= 0:
            raise ValueError("eta must be nonnegative")


@dataclass(frozen=True)
class SamplerConfig:
    burn_in: int = 2000
    retained: int = 2000
    thin: int = 10
    seed: int | None = None
    init: str = "random"
    init_k: int = 10
    record_ri: bool = True

    def __post_init__(self):
        if self.burn_in < 0 or self.retained < 1 or self.thin < 1:
            raise ValueError("need burn_in >= 0, retained >= 1, thin >= 1")
        if self.init not in ("single", "random"):
            raise ValueError(f"unknown init policy {self.init!r}")
        if self.init_k < 1:
            raise ValueError("init_k must be >= 1")

    @property
    def n_retained(self) -> int:
        return self.retained // self.thin

    @property
    def n_iter(self) -> int:
        return self.burn_in + self.retained


@dataclass
class SamplerState:
    """Labels ``z`` (0..K-1, dense) and one intensity per cluster."""

    z: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.int64)
        self.lam = np.asarray(self.lam, dtype=np.float64)

    @property
    def K(self) -> int:
        return len(self.lam)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.K)

    def surface(self) -> np.ndarray:
        return self.lam[self.z]

    def copy(self) -> "SamplerState":
        return SamplerState(self.z.copy(), self.lam.copy())

    def check(self):
        K = self.K
        if self.z.min(initial=0) < 0 or self.z.max(initial=-1) >= K:
            raise AssertionError("label out of range")
        if len(self.z) and (self.sizes() == 0).any():
            raise AssertionError("empty cluster present")
        if not (self.lam > 0).all():
            raise AssertionError("nonpositive intensity")


@dataclass
class Chain:
    """Retained draws plus per-iteration diagnostics."""

    z: np.ndarray
    lam: list
    iterations: np.ndarray
    k_trace: np.ndarray
    ri_trace: np.ndarray
    eta: float = 0.0
    model: str = "mrf-dpm"
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.lam)

    def surfaces(self) -> np.ndarray:
        """Per-sample intensity of every box, shape ``(L, n)``."""
        return np.stack([lam[z] for z, lam in zip(self.z, self.lam)])

    def n_clusters(self) -> np.ndarray:
        return np.array([len(lam) for lam in self.lam])

    def sample(self, l) -> SamplerState:
        return SamplerState(self.z[l].copy(), self.lam[l].copy())

    def iter_jsonl(self):
        """Yield one JSON-ready dict per retained sample."""
        for l, it in enumerate(self.iterations):
            yield {
                "iteration": int(it),
                "K": int(len(self.lam[l])),
                "z": self.z[l].tolist(),
                "lambda": self.lam[l].tolist(),
                "ri_prev": float(self.ri_trace[it - 1]) if len(self.ri_trace) else None,
            }


# ---------------------------------------------------------------------------
# scalar weights, used for testing and single-box updates
# ---------------------------------------------------------------------------

def _log_poisson_kernel(count, lam, area):
    # N log(lam mu) - lam mu, with 0 log 0 = 0
    mu_lam = lam * area
    if count == 0:
        return -mu_lam
    return count * math.log(mu_lam) - mu_lam


def log_marginal_new(count, area, a, b):
    """log of b^a Gamma(N+a) mu^N / ((b+mu)^(N+a) Gamma(a))."""
    out = a * math.log(b) + math.lgamma(count + a) - (count + a) * math.log(b + area) - math.lgamma(a)
    if count:
        out += count * math.log(area)
    return out


def _neighbor_agreement(i, c, z, graph):
    nb, w = graph.neighbors(i)
    return float(np.sum(w[z[nb] == c]))


def log_weight_existing(i, c, state: SamplerState, binned: BinnedPattern, graph: NeighborGraph,
                        hyper: Hyperparams) -> float:
    """Unnormalised log weight of moving box ``i`` into existing cluster ``c``."""
    z = state.z
    n_c = int(np.sum(z == c)) - int(z[i] == c)
    if n_c < 1:
        raise ValueError(f"cluster {c} is empty once box {i} is removed")
    agree = _neighbor_agreement(i, c, z, graph)
    return (math.log(n_c) + hyper.eta * agree
            + _log_poisson_kernel(int(binned.counts[i]), float(state.lam[c]), float(binned.areas[i])))


def log_weight_new(i, binned: BinnedPattern, hyper: Hyperparams) -> float:
    """Unnormalised log weight of opening a new cluster for box ``i``."""
    return math.log(hyper.alpha) + log_marginal_new(int(binned.counts[i]), float(binned.areas[i]),
                                                     hyper.a, hyper.b)


def crp_log_weight(n_c, count, lam, area) -> float:
    """CRP-NHPP conditional for an existing cluster (no spatial term)."""
    return math.log(n_c) + _log_poisson_kernel(count, lam, area)


# ---------------------------------------------------------------------------
# compiled kernel
# ---------------------------------------------------------------------------

@numba.njit(cache=True)
def _remove_cluster(c, z, lam, sizes, K):
    last = K - 1
    if c != last:
        for j in range(z.shape[0]):
            if z[j] == last:
                z[j] = c
        lam[c] = lam[last]
        sizes[c] = sizes[last]
    sizes[last] = 0
    return last


@numba.njit(cache=True)
def _update_box(i, z, lam, sizes, K, counts, areas, indptr, indices, weights,
                eta, model, gamma, log_new, log_vratio, u, new_lam, agree, logw):
    """Resample the label of box ``i``; returns the new cluster count."""
    c_old = z[i]
    z[i] = -1
    sizes[c_old] -= 1
    if sizes[c_old] == 0:
        K = _remove_cluster(c_old, z, lam, sizes, K)

    for p in range(indptr[i], indptr[i + 1]):
        zj = z[indices[p]]
        if zj >= 0:
            agree[zj] += weights[p]

    n_i = counts[i]
    mu = areas[i]
    best = -np.inf
    for c in range(K):
        lm = lam[c] * mu
        lk = -lm
        if n_i > 0:
            lk += n_i * np.log(lm)
        if model == 0:
            w = np.log(sizes[c]) + eta * agree[c] + lk
        else:
            w = np.log(sizes[c] + gamma) + lk
        logw[c] = w
        if w > best:
            best = w
    if model == 0:
        w = log_new[i]
    else:
        w = log_new[i] + log_vratio[K]
    logw[K] = w
    if w > best:
        best = w

    for p in range(indptr[i], indptr[i + 1]):
        zj = z[indices[p]]
        if zj >= 0:
            agree[zj] = 0.0

    total = 0.0
    for c in range(K + 1):
        logw[c] = np.exp(logw[c] - best)
        total += logw[c]
    target = u * total
    acc = 0.0
    choice = K
    for c in range(K + 1):
        acc += logw[c]
        if target < acc:
            choice = c
            break

    if choice == K:
        lam[K] = new_lam
        sizes[K] = 1
        z[i] = K
        return K + 1
    sizes[choice] += 1
    z[i] = choice
    return K


@numba.njit(cache=True)
def _sweep(z, lam, sizes, K, counts, areas, indptr, indices, weights,
           eta, model, gamma, log_new, log_vratio, u, new_lam, agree, logw):
    for i in range(z.shape[0]):
        K = _update_box(i, z, lam, sizes, K, counts, areas, indptr, indices, weights,
                        eta, model, gamma, log_new, log_vratio, u[i], new_lam[i], agree, logw)
    return K


@numba.njit(cache=True)
def _rand_index_labels(z1, z2, k1, k2):
    n = z1.shape[0]
    table = np.zeros((k1, k2), dtype=np.int64)
    a = np.zeros(k1, dtype=np.int64)
    b = np.zeros(k2, dtype=np.int64)
    for i in range(n):
        table[z1[i], z2[i]] += 1
        a[z1[i]] += 1
        b[z2[i]] += 1
    s_tab = 0
    for p in range(k1):
        for q in range(k2):
            s_tab += table[p, q] * (table[p, q] - 1) // 2
    s_a = 0
    for p in range(k1):
        s_a += a[p] * (a[p] - 1) // 2
    s_b = 0
    for q in range(k2):
        s_b += b[q] * (b[q] - 1) // 2
    pairs = n * (n - 1) // 2
    return 1.0 - (s_a + s_b - 2 * s_tab) / pairs


# ---------------------------------------------------------------------------
# public operations
# ---------------------------------------------------------------------------

class _Work:
    """Scratch arrays for one chain."""

    def __init__(self, state: SamplerState, binned: BinnedPattern, graph: NeighborGraph | None,
                 hyper: Hyperparams):
        n = binned.grid.n
        if len(state.z) != n:
            raise ValueError(f"state has {len(state.z)} labels for {n} boxes")
        if graph is not None and graph.n != n:
            raise ValueError(f"neighbor graph has {graph.n} boxes, grid has {n}")
        self.counts = binned.counts.astype(np.int64)
        self.areas = np.ascontiguousarray(binned.areas, dtype=np.float64)
        if graph is None:
            self.indptr = np.zeros(n + 1, dtype=np.int64)
            self.indices = np.zeros(0, dtype=np.int64)
            self.weights = np.zeros(0, dtype=np.float64)
        else:
            self.indptr = graph.indptr.astype(np.int64)
            self.indices = graph.indices.astype(np.int64)
            self.weights = graph.weights.astype(np.float64)
        self.z = state.z.astype(np.int64).copy()
        self.lam = np.zeros(n + 1)
        self.lam[:state.K] = state.lam
        self.sizes = np.zeros(n + 1, dtype=np.int64)
        self.sizes[:state.K] = np.bincount(self.z, minlength=state.K)
        self.K = state.K
        self.agree = np.zeros(n + 1)
        self.logw = np.zeros(n + 1)
        self.post_shape = self.counts + hyper.a
        self.post_rate = hyper.b + self.areas

    def state(self) -> SamplerState:
        return SamplerState(self.z.copy(), self.lam[: self.K].copy())


def dpm_log_new(binned: BinnedPattern, hyper: Hyperparams) -> np.ndarray:
    return np.array([log_weight_new(i, binned, hyper) for i in range(binned.grid.n)])


def sample_z(i, state: SamplerState, binned: BinnedPattern, graph: NeighborGraph,
             hyper: Hyperparams, rng: np.random.Generator) -> SamplerState:
    """Resample the label of box ``i`` and return the updated, compacted state."""
    work = _Work(state, binned, graph, hyper)
    log_new = dpm_log_new(binned, hyper)
    u = rng.random()
    new_lam = rng.gamma(work.post_shape[i], 1.0 / work.post_rate[i])
    work.K = _update_box(i, work.z, work.lam, work.sizes, work.K, work.counts, work.areas,
                         work.indptr, work.indices, work.weights, float(hyper.eta), MODEL_DPM, 0.0,
                         log_new, np.zeros(1), u, new_lam, work.agree, work.logw)
    return work.state()


def cluster_stats(z, K, binned: BinnedPattern):
    """Point totals and areas per cluster."""
    n_k = np.bincount(z, weights=binned.counts, minlength=K)[:K]
    area_k = np.bincount(z, weights=binned.areas, minlength=K)[:K]
    return n_k, area_k


def sample_lambda(state: SamplerState, binned: BinnedPattern, hyper: Hyperparams,
                  rng: np.random.Generator) -> np.ndarray:
    """Draw every cluster intensity from Gamma(N_k + a, rate b + area_k)."""
    n_k, area_k = cluster_stats(state.z, state.K, binned)
    return rng.gamma(n_k + hyper.a, 1.0 / (hyper.b + area_k))


def initial_state(binned: BinnedPattern, hyper: Hyperparams, config: SamplerConfig, rng) -> SamplerState:
    n = binned.grid.n
    if config.init == "single" or n == 1:
        z = np.zeros(n, dtype=np.int64)
    else:
        k0 = min(config.init_k, n)
        # every label used at least once
        z = rng.permutation(np.resize(np.arange(k0), n)).astype(np.int64)
    K = int(z.max()) + 1
    state = SamplerState(z, np.ones(K))
    state.lam = sample_lambda(state, binned, hyper, rng)
    return state


def _run(binned, graph, hyper, config, model, gamma, log_new, log_vratio, model_name) -> Chain:
    rng = np.random.default_rng(config.seed)
    state = initial_state(binned, hyper, config, rng)
    work = _Work(state, binned, graph, hyper)
    n = binned.grid.n
    eta = float(hyper.eta)

    n_iter = config.n_iter
    k_trace = np.zeros(n_iter, dtype=np.int64)
    ri_trace = np.full(n_iter, np.nan) if config.record_ri else np.zeros(0)
    kept_z, kept_lam, kept_it = [], [], []
    prev_z = work.z.copy()
    prev_k = work.K

    for it in range(1, n_iter + 1):
        K = work.K
        z = work.z
        work.lam[:K] = sample_lambda(SamplerState(z, work.lam[:K]), binned, hyper, rng)

        u = rng.random(n)
        new_lam = rng.gamma(work.post_shape, 1.0 / work.post_rate)
        work.K = _sweep(z, work.lam, work.sizes, K, work.counts, work.areas, work.indptr,
                        work.indices, work.weights, eta, model, gamma, log_new, log_vratio,
                        u, new_lam, work.agree, work.logw)
        k_trace[it - 1] = work.K
        if config.record_ri:
            ri_trace[it - 1] = _rand_index_labels(prev_z, z, prev_k, work.K) if n > 1 else 1.0
            prev_z[:] = z
            prev_k = work.K
        if it > config.burn_in and (it - config.burn_in) % config.thin == 0:
            kept_z.append(z.copy())
            kept_lam.append(work.lam[: work.K].copy())
            kept_it.append(it)

    return Chain(
        z=np.array(kept_z, dtype=np.int64).reshape(len(kept_z), n),
        lam=kept_lam,
        iterations=np.array(kept_it, dtype=np.int64),
        k_trace=k_trace,
        ri_trace=ri_trace,
        eta=eta,
        model=model_name,
        meta={"a": hyper.a, "b": hyper.b, "alpha": hyper.alpha, "burn_in": config.burn_in,
              "retained": config.retained, "thin": config.thin, "seed": config.seed,
              "init": config.init},
    )


def run_chain(binned: BinnedPattern, graph: NeighborGraph, hyper: Hyperparams,
              config: SamplerConfig) -> Chain:
    """Run the MRF-DPM collapsed Gibbs sampler."""
    log_new = dpm_log_new(binned, hyper)
    return _run(binned, graph, hyper, config, MODEL_DPM, 0.0, log_new, np.zeros(1), "mrf-dpm")
