"""Per-hop SNR statistics: Rician RF hop and Gamma-Gamma FSO hop.

Densities and distribution functions accept scalars or numpy arrays.
Samplers draw from an explicit :class:`RngStream` so that every Monte Carlo
block is reproducible from ``(seed, stream_id)`` alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sc

from .specfun import DomainError, marcum_q1

__all__ = [
    "RicianParams",
    "GammaGammaParams",
    "RngStream",
    "rician_snr_pdf",
    "rician_snr_cdf",
    "gg_snr_pdf",
    "sample_rician_snr",
    "sample_gg_snr",
]


@dataclass(frozen=True)
class RicianParams:
    """RF hop: Rician factor ``k1`` (0 is Rayleigh) and mean SNR (linear)."""

    k1: float
    mean_snr: float

    def __post_init__(self):
        if not (math.isfinite(self.k1) and self.k1 >= 0):
            raise DomainError(f"k1 must be >= 0, got {self.k1!r}")
        if not (math.isfinite(self.mean_snr) and self.mean_snr > 0):
            raise DomainError(f"mean_snr must be > 0, got {self.mean_snr!r}")

    @property
    def rate(self):
        """``(1 + K1) / mean_snr``, the exponential rate of the scattered part."""
        return (1.0 + self.k1) / self.mean_snr


@dataclass(frozen=True)
class GammaGammaParams:
    """FSO hop: turbulence shaping ``alpha > beta > 0`` and scale SNR.

    ``scale_snr`` is the SNR at unit irradiance, so the mean SNR is
    ``scale_snr * (1 + 1/alpha) * (1 + 1/beta)``, not ``scale_snr``.
    """

    alpha: float
    beta: float
    scale_snr: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise DomainError(f"beta must be > 0, got {self.beta!r}")
        if not (math.isfinite(self.alpha) and self.alpha > self.beta):
            raise DomainError("alpha must exceed beta")
        if not (math.isfinite(self.scale_snr) and self.scale_snr > 0):
            raise DomainError(f"scale_snr must be > 0, got {self.scale_snr!r}")

    @property
    def mean_snr(self):
        return self.scale_snr * (1.0 + 1.0 / self.alpha) * (1.0 + 1.0 / self.beta)

    @property
    def log_norm(self):
        """Log of ``(ab)^((a+b)/2) / (Gamma(a) Gamma(b) scale^((a+b)/4))``."""
        a, b = self.alpha, self.beta
        return (
            0.5 * (a + b) * math.log(a * b)
            - math.lgamma(a)
            - math.lgamma(b)
            - 0.25 * (a + b) * math.log(self.scale_snr)
        )


@dataclass
class RngStream:
    """Seeded random stream; ``(seed, stream_id)`` fixes the sequence.

    Substreams come from numpy's ``SeedSequence`` spawn keys, so distinct
    ``stream_id`` values give statistically independent generators.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not (0 <= v < 2**64):
                raise DomainError(f"{name} must be a 64-bit non-negative integer")
        ss = np.random.SeedSequence(entropy=int(self.seed), spawn_key=(int(self.stream_id),))
        self._gen = np.random.Generator(np.random.PCG64(ss))

    @property
    def generator(self):
        return self._gen

    def substream(self, index):
        """Independent child stream ``index`` of this stream (deterministic)."""
        ss = np.random.SeedSequence(
            entropy=int(self.seed), spawn_key=(int(self.stream_id), int(index))
        )
        child = object.__new__(RngStream)
        child.seed, child.stream_id = self.seed, self.stream_id
        child._gen = np.random.Generator(np.random.PCG64(ss))
        return child


def _as_snr(r, strict=False):
    arr = np.asarray(r, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("SNR must not be NaN")
    if strict and np.any(arr <= 0):
        raise DomainError("SNR must be > 0")
    if np.any(arr < 0):
        raise DomainError("SNR must be >= 0")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


def rician_snr_pdf(r, p):
    """Density of the Rician-faded SNR.

    ``((1+K)/g) exp(-K) exp(-(1+K) r / g) I0(2 sqrt(K (1+K) r / g))``,
    evaluated with the exponentially scaled ``I0`` so large arguments do not
    overflow.
    """
    r = _as_snr(r)
    lam = p.rate
    arg = 2.0 * np.sqrt(p.k1 * lam * r)
    with np.errstate(over="ignore", under="ignore"):
        out = lam * np.exp(arg - p.k1 - lam * r) * sc.i0e(arg)
    return _out(out)


def rician_snr_cdf(r, p):
    """``1 - Q1(sqrt(2K), sqrt(2 (1+K) r / g))``."""
    r = _as_snr(r)
    a = math.sqrt(2.0 * p.k1)
    b = np.sqrt(2.0 * p.rate * r)
    return _out(marcum_q1(a, b, complement=True))


def gg_snr_pdf(r, p):
    """Gamma-Gamma SNR density.

    At ``r = 0`` the limit is returned: the density behaves like
    ``r**(beta/2 - 1)`` there, so it is 0 for ``beta > 2``, infinite for
    ``beta < 2`` and finite for ``beta == 2``.
    """
    r = _as_snr(r)
    a, b = p.alpha, p.beta
    x = 2.0 * np.sqrt(a * b * np.sqrt(r / p.scale_snr))
    with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
        # kve(v, x) = kv(v, x) e^x keeps the tail representable
        logk = np.log(sc.kve(a - b, x)) - x
        out = np.exp(p.log_norm + (0.25 * (a + b) - 1.0) * np.log(r) + logk)
    zero = r == 0
    if np.any(zero):
        if b > 2:
            lim = 0.0
        elif b < 2:
            lim = math.inf
        else:
            nu = a - b
            lim = math.exp(
                p.log_norm + math.lgamma(nu) - math.log(2.0)
                - 0.5 * nu * math.log(a * b) + 0.25 * nu * math.log(p.scale_snr)
            )
        out = np.where(zero, lim, out)
    return _out(out)


def sample_rician_snr(p, rng, size=None):
    """Draw Rician SNRs: ``mean_snr * |h|^2`` with ``E|h|^2 = 1``."""
    g = rng.generator
    los = math.sqrt(p.k1 / (1.0 + p.k1))
    sigma = math.sqrt(0.5 / (1.0 + p.k1))
    n = 1 if size is None else size
    re = los + sigma * g.standard_normal(n)
    im = sigma * g.standard_normal(n)
    out = p.mean_snr * (re * re + im * im)
    return float(out[0]) if size is None else out


def sample_gg_snr(p, rng, size=None):
    """Draw Gamma-Gamma SNRs: ``scale_snr * (X Y)^2`` with unit-mean
    ``X ~ Gamma(alpha)`` and ``Y ~ Gamma(beta)``."""
    g = rng.generator
    n = 1 if size is None else size
    irr = g.gamma(p.alpha, 1.0 / p.alpha, n) * g.gamma(p.beta, 1.0 / p.beta, n)
    out = p.scale_snr * irr * irr
    return float(out[0]) if size is None else out
