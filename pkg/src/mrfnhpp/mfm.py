"""Mixture-of-finite-mixtures NHPP benchmark sampler.

The partition prior of the MFM is

    p(C) = V_n(t) * prod_{c in C} gamma^(|c|)

with ``t = |C|`` and ``x^(m)`` the rising factorial.  Its collapsed Gibbs
conditionals give an existing cluster weight ``n_c(-i) + gamma`` and a new
cluster weight ``gamma * V_n(t+1) / V_n(t)``, with ``t`` counted after box
``i`` is removed.  The number of components has a Poisson(1) prior truncated
to ``k >= 1``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .grid import BinnedPattern
from .sampler import (MODEL_MFM, Chain, Hyperparams, SamplerConfig, _run,
                      log_marginal_new)

SERIES_RTOL = 1e-16


def log_truncated_poisson(k, mean=1.0):
    """log p_K(k) for a Poisson(mean) truncated to k >= 1."""
    k = np.asarray(k, dtype=float)
    out = k * math.log(mean) - mean - gammaln(k + 1) - math.log1p(-math.exp(-mean))
    return np.where(k >= 1, out, -np.inf)


def _log_vn_terms(n, t, k, gamma, log_pk):
    # log[ k!/(k-t)! / (gamma k)^(n) * p_K(k) ],  k >= max(t, 1)
    gk = gamma * k
    return gammaln(k + 1) - gammaln(k - t + 1) - (gammaln(gk + n) - gammaln(gk)) + log_pk(k)


def log_vn(n: int, t: int, gamma: float = 1.0, log_pk=log_truncated_poisson, chunk: int = 64) -> float:
    """log V_n(t), summing the series until terms drop below 1e-16 of the total."""
    if n < 1 or t < 0:
        raise ValueError("need n >= 1 and t >= 0")
    start = max(t, 1)
    total = -np.inf
    prev_last = np.inf
    while True:
        k = np.arange(start, start + chunk, dtype=float)
        terms = _log_vn_terms(n, t, k, gamma, log_pk)
        total = np.logaddexp(total, logsumexp(terms))
        last = terms[-1]
        decreasing = last < terms[-2] and last < prev_last
        if decreasing and last < total + math.log(SERIES_RTOL):
            return float(total)
        if start > 10 ** 7:
            raise FloatingPointError(f"V_n series failed to converge for n={n}, t={t}")
        prev_last = last
        start += chunk


def compute_log_Vn(n: int, t_max: int, gamma: float = 1.0, log_pk=log_truncated_poisson) -> np.ndarray:
    """Table of log V_n(t) for t = 0..t_max."""
    if t_max > n:
        raise ValueError(f"t_max={t_max} exceeds n={n}")
    return np.array([log_vn(n, t, gamma, log_pk) for t in range(t_max + 1)])


@dataclass
class MfmConfig:
    gamma: float = 1.0
    t_max: int | None = None
    log_vn_table: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")

    def table(self, n: int) -> np.ndarray:
        t_max = n if self.t_max is None else min(self.t_max, n)
        if self.log_vn_table is None or len(self.log_vn_table) != t_max + 1:
            self.log_vn_table = compute_log_Vn(n, t_max, self.gamma)
        return self.log_vn_table


def mfm_log_new(binned: BinnedPattern, hyper: Hyperparams, gamma: float) -> np.ndarray:
    """Per-box new-cluster log weight, excluding the V_n ratio."""
    return np.array([
        math.log(gamma) + log_marginal_new(int(c), float(mu), hyper.a, hyper.b)
        for c, mu in zip(binned.counts, binned.areas)
    ])


def run_mfm_chain(binned: BinnedPattern, config: MfmConfig, hyper: Hyperparams,
                  chain_config: SamplerConfig) -> Chain:
    """Collapsed Gibbs sampler for the MFM-NHPP model."""
    n = binned.grid.n
    table = config.table(n)
    # log V_n(t+1) - log V_n(t); t beyond the table is unreachable when t_max = n
    ratio = np.full(n + 2, -np.inf)
    ratio[: len(table) - 1] = np.diff(table)
    log_new = mfm_log_new(binned, hyper, config.gamma)
    chain = _run(binned, None, hyper, chain_config, MODEL_MFM, float(config.gamma), log_new, ratio, "mfm")
    chain.meta["gamma"] = config.gamma
    return chain
