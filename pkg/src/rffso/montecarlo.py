"""Seeded Monte Carlo estimates of outage probability and average SER.

Samples are drawn in fixed-size blocks; block ``i`` always uses substream
``i`` of the caller's :class:`~rffso.channels.RngStream`, and block results
are reduced in block order.  The estimate therefore depends only on
``(seed, stream_id, n)``, never on how many worker threads ran the blocks.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import special as sc

from .channels import sample_gg_snr, sample_rician_snr
from .relay import end_to_end_snr
from .specfun import DomainError

__all__ = ["McEstimate", "simulate_outage", "simulate_ser", "default_workers", "BLOCK_SIZE"]

BLOCK_SIZE = 1 << 20
WORKERS_ENV = "RFFSO_MC_THREADS"


@dataclass(frozen=True)
class McEstimate:
    value: float
    std_err: float
    n_samples: int
    seed: int

    def within(self, reference, k=3.0):
        """True if ``reference`` lies within ``k`` standard errors."""
        return abs(self.value - reference) <= k * self.std_err


def default_workers():
    """Worker count from ``RFFSO_MC_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
        if n < 1:
            raise DomainError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _blocks(n):
    full, rest = divmod(n, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full
    if rest:
        sizes.append(rest)
    return sizes


def _run_blocks(fn, n, workers):
    sizes = _blocks(n)
    jobs = list(enumerate(sizes))
    workers = workers or default_workers()
    if workers == 1 or len(jobs) == 1:
        return [fn(i, size) for i, size in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))


def _end_to_end_samples(sys, rng, index, size):
    sub = rng.substream(index)
    g1 = sample_rician_snr(sys.rf, sub, size)
    g2 = sample_gg_snr(sys.fso, sub, size)
    return end_to_end_snr(g1, g2, sys.c_const), sub


def simulate_outage(sys, gamma_th, n, rng, *, workers=None):
    """Fraction of ``n`` simulated end-to-end SNRs at or below ``gamma_th``,
    with binomial standard error ``sqrt(p (1 - p) / n)``."""
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if gamma_th < 0:
        raise DomainError("gamma_th must be >= 0")

    def block(index, size):
        g, _ = _end_to_end_samples(sys, rng, index, size)
        return int(np.count_nonzero(g <= gamma_th)) if gamma_th > 0 else 0

    hits = sum(_run_blocks(block, n, workers))
    p = hits / n
    return McEstimate(p, math.sqrt(p * (1.0 - p) / n), n, rng.seed)


def simulate_ser(sys, mod, n, rng, *, mode="semi-analytic", workers=None):
    """Average SER over ``n`` simulated channel realizations.

    ``mode="semi-analytic"`` averages the conditional error probability
    ``a Q(sqrt(2 b gamma))`` over the sampled SNRs.  ``mode="symbol"`` sends
    one BPSK symbol per realization through Gaussian noise and counts
    decision errors; it requires ``a = b = 1``.
    """
    n = int(n)
    if n < 1:
        raise DomainError("n must be >= 1")
    if mode not in ("semi-analytic", "symbol"):
        raise DomainError(f"unknown mode {mode!r}")
    if mode == "symbol" and (mod.a_coef != 1.0 or mod.b_coef != 1.0):
        raise DomainError("symbol-level mode supports BPSK (a = b = 1) only")
    half_a = 0.5 * mod.a_coef

    def block(index, size):
        g, sub = _end_to_end_samples(sys, rng, index, size)
        if mode == "semi-analytic":
            pe = half_a * sc.erfc(np.sqrt(mod.b_coef * g))
            return float(pe.sum()), float((pe * pe).sum())
        # unit-energy antipodal symbol, noise variance 1/(2 gamma) per sample
        noise = sub.generator.standard_normal(size)
        errors = int(np.count_nonzero(np.sqrt(2.0 * g) + noise < 0.0))
        return float(errors), float(errors)

    parts = _run_blocks(block, n, workers)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    return McEstimate(min(max(mean, 0.0), half_a), math.sqrt(var / n), n, rng.seed)
