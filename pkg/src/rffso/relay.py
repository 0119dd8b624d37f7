"""Fixed-gain AF relay over a Rician RF hop and a Gamma-Gamma FSO hop.

Two analytic engines live here:

* closed form -- the Meijer-G series for the end-to-end PDF, the outage
  probability (CDF) and the average SER;
* quadrature -- direct numerical integration of the defining integrals over
  the FSO-hop SNR, used as the reference for the closed forms.

All SNRs are linear here; use :func:`db_to_linear` at the boundary.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channels import GammaGammaParams, RicianParams, gg_snr_pdf, rician_snr_pdf
from .specfun import DomainError, EvalAccuracy, EvaluationError, MeijerGSpec, marcum_q1, meijer_g

__all__ = [
    "RelaySystem",
    "Modulation",
    "SeriesControl",
    "SeriesResult",
    "TruncationWarning",
    "db_to_linear",
    "linear_to_db",
    "end_to_end_snr",
    "pdf_quadrature",
    "pdf_closed_form",
    "outage_quadrature",
    "outage_closed_form",
    "aser_quadrature",
    "aser_closed_form",
    "high_snr_slope",
]

_LOG_4PI = math.log(4.0 * math.pi)


class TruncationWarning(RuntimeWarning):
    """A series hit its term cap before meeting the stopping threshold."""


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * np.log10(x)


@dataclass(frozen=True)
class RelaySystem:
    """Both hops plus the fixed-gain constant ``C = 1 / (G^2 N01)``."""

    rf: RicianParams
    fso: GammaGammaParams
    c_const: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.c_const) and self.c_const >= 0):
            raise DomainError("c_const must be >= 0")
        if self.c_const == 0:
            warnings.warn(
                "c_const = 0 is the ideal-relay limit; closed forms are undefined there",
                RuntimeWarning,
                stacklevel=2,
            )

    @classmethod
    def balanced(cls, k1, alpha, beta, snr_db, c_const=1.0):
        """Both hops at the same SNR ``snr_db`` (mean SNR for RF, scale SNR for FSO)."""
        g = db_to_linear(snr_db)
        return cls(RicianParams(k1, g), GammaGammaParams(alpha, beta, g), c_const)


@dataclass(frozen=True)
class Modulation:
    """Conditional SER ``a Q(sqrt(2 b gamma))``."""

    a_coef: float = 1.0
    b_coef: float = 1.0

    def __post_init__(self):
        if not (self.a_coef > 0 and self.b_coef > 0):
            raise DomainError("modulation coefficients must be positive")

    @classmethod
    def bpsk(cls):
        return cls(1.0, 1.0)

    @classmethod
    def mpsk(cls, order):
        return cls(2.0, math.sin(math.pi / order) ** 2)


@dataclass(frozen=True)
class SeriesControl:
    """Series truncation: at most ``max_outer_terms`` terms per summation
    index; stop early once a block changes the partial sum by less than
    ``stop_rel`` relative."""

    max_outer_terms: int = 35
    stop_rel: float = 1e-14

    def __post_init__(self):
        if self.max_outer_terms < 1:
            raise DomainError("max_outer_terms must be >= 1")
        if not self.stop_rel > 0:
            raise DomainError("stop_rel must be > 0")


@dataclass(frozen=True)
class SeriesResult:
    """Value of a truncated series and how it terminated."""

    value: float
    terms: int
    truncated: bool
    last_block: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "last_block", float(self.last_block))

    def __float__(self):
        return self.value


DEFAULT_CONTROL = SeriesControl()
# Meijer-G accuracy used inside the series
G_ACCURACY = EvalAccuracy(rel_tol=1e-12)


def end_to_end_snr(gamma1, gamma2, c_const):
    """``gamma1 * gamma2 / (gamma2 + C)``; zero when ``gamma2`` is zero."""
    g1 = np.asarray(gamma1, dtype=float)
    g2 = np.asarray(gamma2, dtype=float)
    if np.any(g1 < 0) or np.any(g2 < 0) or not c_const >= 0:
        raise DomainError("SNRs must be >= 0 and C >= 0")
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(g2 > 0, g1 * g2 / (g2 + c_const), 0.0)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# quadrature engine
# ---------------------------------------------------------------------------


def _log_range(fso):
    """Integration range in ``v = ln(gamma2)`` and interior break points.

    Below the range the FSO mass is ``~ (x/scale)^(beta/2) < 1e-30``; above it
    the Bessel-K factor has decayed by ``exp(-120)``.
    """
    ls = math.log(fso.scale_snr)
    ab = fso.alpha * fso.beta
    lo = ls - 2.0 * 30.0 * math.log(10.0) / fso.beta
    hi = ls + 4.0 * math.log(60.0 / math.sqrt(ab))
    return lo, hi


def _breaks(sys, lo, hi, extra=()):
    pts = [math.log(sys.fso.scale_snr), math.log(sys.fso.scale_snr) - 2.0 * math.log(sys.fso.alpha * sys.fso.beta)]
    if sys.c_const > 0:
        pts.append(math.log(sys.c_const))
    pts.extend(extra)
    return sorted({p for p in pts if lo < p < hi})


def _check_quad(info, what, **diag):
    if info.get("ier", 0) not in (0,):
        detail = ", ".join(f"{k}={v!r}" for k, v in diag.items())
        raise EvaluationError(f"{what}: quadrature did not converge ({info.get('message', '')}); {detail}")


def pdf_quadrature(r, sys):
    """End-to-end SNR density by integrating over the FSO-hop SNR."""
    r = float(r)
    if not r > 0:
        raise DomainError("r must be > 0")
    c = sys.c_const
    lo, hi = _log_range(sys.fso)

    def f(v):
        x = math.exp(v)
        y = (x + c) / x * r
        # dx = x dv, so (x + C)/x * x = x + C
        return (x + c) * rician_snr_pdf(y, sys.rf) * gg_snr_pdf(x, sys.fso)

    lam = sys.rf.rate
    extra = [math.log(c * lam * r)] if c > 0 else []
    pts = _breaks(sys, lo, hi, extra)
    val, err, *rest = integrate.quad(f, lo, hi, points=pts or None, epsabs=0.0, epsrel=1e-10, limit=400, full_output=1)
    info = rest[0] if rest else {}
    if len(rest) > 1:
        info = dict(info, ier=1, message=rest[1])
    if err > 1e-8 * abs(val) + 1e-300:
        info = dict(info, ier=1, message="error estimate above 1e-8 relative")
    _check_quad(info, "pdf_quadrature", r=r, value=val, abserr=err)
    return val


def _outage_integrand_factory(sys):
    c = sys.c_const
    a = math.sqrt(2.0 * sys.rf.k1)
    lam = sys.rf.rate

    def weight(x):
        return x * gg_snr_pdf(x, sys.fso)

    def cdf1(y):
        return marcum_q1(a, np.sqrt(2.0 * lam * y), complement=True)

    return c, weight, cdf1


def outage_quadrature(gamma_th, sys, *, epsabs=1e-13, epsrel=1e-11):
    """``P(gamma <= gamma_th)`` by integrating the RF-hop CDF against the
    FSO-hop density."""
    g = float(gamma_th)
    if not g > 0:
        raise DomainError("gamma_th must be > 0")
    c, weight, cdf1 = _outage_integrand_factory(sys)
    lo, hi = _log_range(sys.fso)

    def f(v):
        x = math.exp(v)
        return float(cdf1((x + c) / x * g)) * weight(x)

    extra = [math.log(c * g)] if c > 0 else []
    pts = _breaks(sys, lo, hi, extra)
    val, err, *rest = integrate.quad(f, lo, hi, points=pts or None, epsabs=epsabs, epsrel=epsrel, limit=400, full_output=1)
    info = rest[0] if rest else {}
    if len(rest) > 1:
        info = dict(info, ier=1, message=rest[1])
    if err > max(1e-9, 1e-8 * abs(val)):
        info = dict(info, ier=1, message="error estimate above tolerance")
    _check_quad(info, "outage_quadrature", gamma_th=g, value=val, abserr=err)
    return min(max(val, 0.0), 1.0)


def _rician_cdf_grid(y, k1, lam, chunk=4096):
    """Rician-hop CDF on an arbitrary array of SNRs, in row chunks to bound memory."""
    a = math.sqrt(2.0 * k1)
    flat = y.ravel()
    out = np.empty_like(flat)
    for i in range(0, flat.size, chunk):
        out[i : i + chunk] = marcum_q1(a, np.sqrt(2.0 * lam * flat[i : i + chunk]), complement=True)
    return out.reshape(y.shape)


def aser_quadrature(mod, sys, *, rel_tol=1e-9):
    """Average SER ``(a/2) sqrt(b/pi) int F(y) exp(-b y) / sqrt(y) dy``.

    ``F(y)`` is the outage integral over the FSO-hop SNR.  Both integrals are
    taken on logarithmic variables, ``y = e^u`` and ``gamma2 = e^v``, which
    removes the ``1/sqrt(y)`` endpoint singularity and leaves integrands that
    are analytic in a strip and decay exponentially at both ends; the
    trapezoid rule then converges geometrically.  The step is halved until
    two successive estimates agree to ``rel_tol``.
    """
    b = mod.b_coef
    c = sys.c_const
    lam = sys.rf.rate
    v_lo, v_hi = _log_range(sys.fso)
    u_lo, u_hi = -80.0, math.log(60.0 / b)
    pref = 0.5 * mod.a_coef * math.sqrt(b / math.pi)

    def estimate(h):
        u = np.arange(u_lo, u_hi + 0.5 * h, h)
        v = np.arange(v_lo, v_hi + 0.5 * h, h)
        x = np.exp(v)
        gv = x * gg_snr_pdf(x, sys.fso)
        wu = np.exp(-b * np.exp(u) + 0.5 * u)
        y = np.exp(u)[:, None] * (1.0 + c / x)[None, :]
        cdf = _rician_cdf_grid(y, sys.rf.k1, lam)
        fine = pref * h * h * float(wu @ cdf @ gv)
        coarse = pref * 4 * h * h * float(wu[::2] @ cdf[::2, ::2] @ gv[::2])
        return fine, coarse

    h = 0.25
    for _ in range(3):
        fine, coarse = estimate(h)
        if abs(fine - coarse) <= rel_tol * abs(fine):
            return min(max(fine, 0.0), 0.5 * mod.a_coef)
        h *= 0.5
    raise EvaluationError(
        f"aser_quadrature: trapezoid refinement did not settle (step={2 * h}, fine={fine!r}, coarse={coarse!r})"
    )


# ---------------------------------------------------------------------------
# closed-form engine
# ---------------------------------------------------------------------------


def _lower_params(fso, last):
    a, b = fso.alpha, fso.beta
    return (
        (a - b) / 4.0,
        (a - b + 2.0) / 4.0,
        (b - a) / 4.0,
        (b - a + 2.0) / 4.0,
        last - (a + b) / 4.0,
    )


def _log_b0(fso):
    return fso.log_norm


def _log_binom(n, k):
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _require_c(sys):
    if not sys.c_const > 0:
        raise DomainError("closed forms require C > 0")


def _warn_truncated(what, res):
    if res.truncated:
        warnings.warn(
            f"{what}: series cap of {res.terms} terms reached before convergence "
            f"(last block {res.last_block:.3g})",
            TruncationWarning,
            stacklevel=3,
        )


def pdf_closed_form(r, sys, ctl=DEFAULT_CONTROL):
    """End-to-end SNR density from the Meijer-G series.

    Outer series over ``m`` (Bessel-I0 expansion) with an inner binomial sum
    over ``n = 0..m+1``; each term carries ``G^{5,0}_{0,5}`` with lower
    parameters ``Lambda1(n)``.
    """
    r = float(r)
    if not r > 0:
        raise DomainError("r must be > 0")
    _require_c(sys)
    rf, fso, c = sys.rf, sys.fso, sys.c_const
    lam = rf.rate
    s4 = 0.25 * (fso.alpha + fso.beta)
    z = (fso.alpha * fso.beta) ** 2 * lam * c * r / (16.0 * fso.scale_snr)
    log_pref = math.log(lam) - rf.k1 + _log_b0(fso) - _LOG_4PI - lam * r + s4 * math.log(lam * c * r)
    log_lr = math.log(lam * r)
    log_klr = math.log(rf.k1 * lam * r) if rf.k1 > 0 else -math.inf
    gcache = {}

    def g(n):
        if n not in gcache:
            gcache[n] = meijer_g(MeijerGSpec(5, 0, 0, 5, (), _lower_params(fso, n), z), G_ACCURACY)
        return gcache[n]

    total = 0.0
    prev = math.inf
    block = 0.0
    terms = 0
    truncated = True
    for m in range(ctl.max_outer_terms):
        if m > 0 and rf.k1 == 0:
            truncated = False
            break
        lm = m * log_klr - 2.0 * math.lgamma(m + 1) if m else 0.0
        block = 0.0
        for n in range(m + 2):
            block += math.exp(log_pref + lm + _log_binom(m + 1, n) - n * log_lr) * g(n)
        total += block
        terms = m + 1
        if m > 0 and block < prev and block <= ctl.stop_rel * total:
            truncated = False
            break
        prev = block
    res = SeriesResult(total, terms, truncated, block)
    _warn_truncated("pdf_closed_form", res)
    return res


def _diagonal_double_series(inner, k1, cap, stop_rel, base, sign):
    """Sum ``sum_{i,j} K^(i+j) / (j! (i+j)!) * inner(j)`` over anti-diagonals
    ``N = i + j`` with ``i, j < cap``.

    If the stopping test is met on a complete anti-diagonal (``N < cap``) the
    sum ends there.  Otherwise the remaining partial anti-diagonals are added,
    which is the square truncation ``i, j < cap``, and the result is flagged
    as truncated.

    ``inner(j)`` must already include every factor except the ``K`` and
    factorial weights and ``exp(-K)``.  The result is reported as
    ``base + sign * S``.  The block test is made against the larger of the
    partial sum and the reported value, so a block below ``stop_rel`` of it
    moves the reported value by less than ``stop_rel`` relative.
    """
    log_k = math.log(k1) if k1 > 0 else -math.inf
    inner_cache = []
    total = 0.0
    prev = math.inf
    block = 0.0
    truncated = True
    n_blocks = 0
    for n in range(2 * cap - 1):
        if n > 0 and k1 == 0:
            truncated = False
            break
        if n >= cap and not truncated:
            break
        while len(inner_cache) <= min(n, cap - 1):
            j = len(inner_cache)
            inner_cache.append(inner(j))
        lw = n * log_k - k1 - math.lgamma(n + 1) if n else -k1
        block = 0.0
        for j in range(max(0, n - cap + 1), min(n, cap - 1) + 1):
            block += math.exp(lw - math.lgamma(j + 1)) * inner_cache[j]
        total += block
        n_blocks = n + 1
        # past the cap the blocks are incomplete; keep summing the square
        scale = max(abs(total), abs(base + sign * total))
        if n < cap and n > 0 and block < prev and block <= stop_rel * scale:
            truncated = False
            break
        prev = block
    return SeriesResult(base + sign * total, n_blocks, truncated, block), total


def outage_closed_form(gamma_th, sys, ctl=DEFAULT_CONTROL, *, tol=1e-9):
    """Outage probability ``F(gamma_th)`` from the Meijer-G double series.

    ``1 - (B0/4pi) exp(-K - lam g) sum_{i,j} K^(i+j)/(j!(i+j)!) (lam g)^j
    sum_k C(j,k) C^k (lam C g)^((a+b)/4 - k) G^{5,0}_{0,5}(z | Lambda2(k))``
    with ``lam = (1+K)/g1``.  The result is clamped to ``[0, 1]`` after
    checking it lies within ``tol`` of that interval.
    """
    g = float(gamma_th)
    if not g > 0:
        raise DomainError("gamma_th must be > 0")
    _require_c(sys)
    rf, fso, c = sys.rf, sys.fso, sys.c_const
    lam = rf.rate
    s4 = 0.25 * (fso.alpha + fso.beta)
    z = (fso.alpha * fso.beta) ** 2 * lam * c * g / (16.0 * fso.scale_snr)
    log_lg = math.log(lam * g)
    log_pref = _log_b0(fso) - _LOG_4PI - lam * g + s4 * math.log(lam * c * g)
    gk = []

    def inner(j):
        while len(gk) <= j:
            gk.append(meijer_g(MeijerGSpec(5, 0, 0, 5, (), _lower_params(fso, len(gk)), z), G_ACCURACY))
        s = 0.0
        for k in range(j + 1):
            s += math.exp(log_pref + _log_binom(j, k) + (j - k) * log_lg) * gk[k]
        return s

    res, _ = _diagonal_double_series(inner, rf.k1, ctl.max_outer_terms, ctl.stop_rel, 1.0, -1.0)
    _warn_truncated("outage_closed_form", res)
    v = res.value
    if not (-tol <= v <= 1.0 + tol):
        raise EvaluationError(f"outage_closed_form: series value {v!r} outside [0, 1]")
    return SeriesResult(min(max(v, 0.0), 1.0), res.terms, res.truncated, res.last_block)


def aser_closed_form(mod, sys, ctl=DEFAULT_CONTROL, *, tol=1e-9):
    """Average SER from the Meijer-G double series.

    ``a/2 - (a/8pi) sqrt(b/pi) B0 exp(-K) sum_{i,j} K^(i+j)/(j!(i+j)!) lam^j
    sum_k C(j,k) C^k (lam C)^((a+b)/4 - k) (b + lam)^(k - j - (a+b+2)/4)
    G^{5,1}_{1,5}(w | 1/2 - j + k - (a+b)/4; Lambda2(k))``.
    """
    _require_c(sys)
    rf, fso, c = sys.rf, sys.fso, sys.c_const
    a_c, b_c = mod.a_coef, mod.b_coef
    lam = rf.rate
    s4 = 0.25 * (fso.alpha + fso.beta)
    w = (fso.alpha * fso.beta) ** 2 * lam * c / (16.0 * fso.scale_snr * (lam + b_c))
    log_pref = (
        math.log(a_c / (8.0 * math.pi))
        + 0.5 * math.log(b_c / math.pi)
        + _log_b0(fso)
        + s4 * math.log(lam * c)
        - (s4 + 0.5) * math.log(b_c + lam)
    )
    log_lam, log_c, log_lc, log_bl = math.log(lam), math.log(c), math.log(lam * c), math.log(b_c + lam)

    def inner(j):
        s = 0.0
        for k in range(j + 1):
            upper = (0.5 - j + k - s4,)
            gv = meijer_g(MeijerGSpec(5, 1, 1, 5, upper, _lower_params(fso, k), w), G_ACCURACY)
            lw = log_pref + j * log_lam + _log_binom(j, k) + k * log_c - k * log_lc + (k - j) * log_bl
            s += math.exp(lw) * gv
        return s

    res, _ = _diagonal_double_series(inner, rf.k1, ctl.max_outer_terms, ctl.stop_rel, 0.5 * a_c, -1.0)
    _warn_truncated("aser_closed_form", res)
    v = res.value
    if not (-tol <= v <= 0.5 * a_c + tol):
        raise EvaluationError(f"aser_closed_form: series value {v!r} outside [0, a/2]")
    return SeriesResult(min(max(v, 0.0), 0.5 * a_c), res.terms, res.truncated, res.last_block)


def high_snr_slope(curve, window_db=10.0):
    """Least-squares slope of ``log10(P)`` against SNR in dB over the points
    within ``window_db`` of the largest SNR, in decades per 10 dB."""
    pts = sorted((float(s), float(p)) for s, p in curve)
    if not pts:
        raise DomainError("empty curve")
    top = pts[-1][0]
    sel = [(s, p) for s, p in pts if s >= top - window_db - 1e-9]
    if len(sel) < 3:
        raise DomainError("need at least 3 points in the asymptotic window")
    if any(p <= 0 for _, p in sel):
        raise DomainError("probabilities must be positive to take logarithms")
    s = np.array([x for x, _ in sel])
    lp = np.log10([p for _, p in sel])
    slope = np.polyfit(s, lp, 1)[0]
    return float(10.0 * slope)
