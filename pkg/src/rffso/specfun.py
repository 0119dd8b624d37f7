"""Scalar special functions used by the relay expressions.

Everything here is a pure function of its arguments.  The Meijer G evaluator
is restricted to real parameters, ``p < q`` and ``z > 0``; it sums Slater's
residue expansion in double precision when the cancellation estimate allows,
and otherwise re-runs the same expansion in extended precision.
``meijer_g_oracle`` is an independent route through the Mellin-Barnes
integral and is used both as a fallback and as a test oracle.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy import special as sc

__all__ = [
    "DomainError",
    "EvaluationError",
    "EvalAccuracy",
    "MeijerGSpec",
    "ln_gamma",
    "bessel_i",
    "bessel_k",
    "marcum_q1",
    "meijer_g",
    "meijer_g_oracle",
]

_EPS = np.finfo(float).eps


class DomainError(ValueError):
    """An argument lies outside the domain of the function."""


class EvaluationError(ArithmeticError):
    """A numerical evaluation could not reach its accuracy target."""

    def __init__(self, message, spec=None):
        super().__init__(message if spec is None else f"{message} [{spec}]")
        self.spec = spec


@dataclass(frozen=True)
class EvalAccuracy:
    rel_tol: float = 1e-12
    max_terms: int = 10000
    collision_eps: float = 1e-7

    def __post_init__(self):
        if not self.rel_tol > 0:
            raise DomainError("rel_tol must be positive")
        if self.max_terms < 1:
            raise DomainError("max_terms must be at least 1")
        if not self.collision_eps > 0:
            raise DomainError("collision_eps must be positive")


DEFAULT_ACCURACY = EvalAccuracy()


@dataclass(frozen=True)
class MeijerGSpec:
    """Orders, parameters and argument of ``G^{m,n}_{p,q}(z | a; b)``."""

    m: int
    n: int
    p: int
    q: int
    a: tuple = field(default=())
    b: tuple = field(default=())
    z: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(x) for x in self.a))
        object.__setattr__(self, "b", tuple(float(x) for x in self.b))
        if len(self.a) != self.p or len(self.b) != self.q:
            raise DomainError("parameter list lengths must equal p and q")
        if not (0 <= self.m <= self.q and 0 <= self.n <= self.p):
            raise DomainError("orders must satisfy 0<=m<=q and 0<=n<=p")
        if not self.p < self.q:
            raise DomainError("only p < q is supported")
        if not (math.isfinite(self.z) and self.z > 0):
            raise DomainError("z must be positive and finite")


def _check_real(x, name):
    if not math.isfinite(x):
        raise DomainError(f"{name} must be finite, got {x!r}")


def ln_gamma(x):
    """Natural log of the Gamma function for positive real ``x``."""
    x = float(x)
    _check_real(x, "x")
    if x <= 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def bessel_i(order, x, rel_tol=DEFAULT_ACCURACY.rel_tol, max_terms=DEFAULT_ACCURACY.max_terms):
    """Modified Bessel function of the first kind of integer order.

    Sums the ascending series ``sum_m (x/2)**(2m+order) / (m! (m+order)!)``
    until a term drops below ``rel_tol`` times the partial sum.
    """
    if int(order) != order or order < 0:
        raise DomainError("order must be a non-negative integer")
    order = int(order)
    x = float(x)
    _check_real(x, "x")
    if x < 0:
        raise DomainError(f"bessel_i requires x >= 0, got {x!r}")
    if x == 0:
        return 1.0 if order == 0 else 0.0
    half = 0.5 * x
    term = math.exp(order * math.log(half) - math.lgamma(order + 1))
    total = term
    q = half * half
    for m in range(1, max_terms):
        term *= q / (m * (m + order))
        total += term
        if term <= rel_tol * total:
            return total
    raise EvaluationError(f"bessel_i series did not converge in {max_terms} terms")


def bessel_k(order, x):
    """Modified Bessel function of the second kind, real order, ``x > 0``."""
    order = float(order)
    x = float(x)
    _check_real(order, "order")
    _check_real(x, "x")
    if x <= 0:
        raise DomainError(f"bessel_k requires x > 0, got {x!r}")
    return float(sc.kv(abs(order), x))


def _poisson_terms(mean, tol):
    """Number of Poisson(mean) weights needed so the dropped tail is below ``tol``."""
    if mean == 0:
        return 1
    n = int(mean + 10.0 * math.sqrt(mean) + 20)
    while sc.pdtrc(n - 1, mean) > tol:
        n += int(math.sqrt(mean)) + 5
    return n


def marcum_q1(a, b, complement=False, acc=DEFAULT_ACCURACY):
    """First-order Marcum Q function ``Q1(a, b)``.

    Uses the Poisson-mixture series

        Q1(a, b) = sum_k exp(-a^2/2) (a^2/2)^k / k! * Gamma_bar(k+1, b^2/2)

    with ``Gamma_bar`` the regularized upper incomplete gamma function.  With
    ``complement=True`` the complementary value ``1 - Q1`` is summed directly
    (regularized *lower* incomplete gamma), which keeps full relative accuracy
    when ``Q1`` is close to one.

    ``a`` and ``b`` broadcast like numpy arrays; scalars give a float.
    """
    a_arr = np.asarray(a, dtype=float)
    b_arr = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a_arr)) and np.all(np.isfinite(b_arr))):
        raise DomainError("marcum_q1 arguments must be finite")
    if np.any(a_arr < 0) or np.any(b_arr < 0):
        raise DomainError("marcum_q1 requires a >= 0 and b >= 0")
    a_arr, b_arr = np.broadcast_arrays(a_arr, b_arr)
    mu = 0.5 * a_arr * a_arr
    x = 0.5 * b_arr * b_arr
    out = np.empty(a_arr.shape)
    flat_mu, flat_x, flat_out = mu.ravel(), x.ravel(), out.reshape(-1)
    tol = 0.01 * acc.rel_tol * _EPS
    for mean in np.unique(flat_mu):
        sel = flat_mu == mean
        xs = flat_x[sel]
        n = _poisson_terms(mean, tol)
        if not complement:
            # upper-tail terms keep growing until k ~ a*b/2
            finite = xs[np.isfinite(xs)]
            peak = math.sqrt(mean * float(finite.max())) if finite.size else 0.0
            n = max(n, int(peak + 10.0 * math.sqrt(peak) + 20))
        if n > acc.max_terms:
            raise EvaluationError(f"marcum_q1 needs {n} terms > max_terms={acc.max_terms}")
        k = np.arange(n, dtype=float)
        if mean == 0:
            w = (k == 0).astype(float)
        else:
            w = np.exp(k * math.log(mean) - mean - sc.gammaln(k + 1))
        kk = k[None, :] + 1.0
        xx = xs[:, None]
        inc = sc.gammainc(kk, xx) if complement else sc.gammaincc(kk, xx)
        vals = inc @ w
        flat_out[sel] = np.clip(vals, 0.0, 1.0)
    if out.ndim == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Meijer G
# ---------------------------------------------------------------------------

_MP = threading.local()


def _mp_context(dps):
    ctx = getattr(_MP, "ctx", None)
    if ctx is None:
        ctx = _MP.ctx = mpmath.MPContext()
    ctx.dps = int(dps)
    return ctx


def _near_int(x, eps):
    return abs(x - round(x)) < eps


def _collision_groups(b, m, eps):
    """Groups of indices among the first ``m`` lower parameters whose
    pairwise differences are within ``eps`` of an integer."""
    parent = list(range(m))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for h in range(m):
        for j in range(h + 1, m):
            if _near_int(b[j] - b[h], eps):
                parent[find(j)] = find(h)
    groups = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)
    return [g for g in groups.values() if len(g) > 1]


def _check_separable(spec, eps):
    # poles of Gamma(b_h - s) and Gamma(1 - a_j + s) must not coincide
    for h in range(spec.m):
        for j in range(spec.n):
            d = 1.0 + spec.b[h] - spec.a[j]
            if d <= 0 and _near_int(d, eps):
                raise EvaluationError("pole families of the Mellin-Barnes integrand coincide", spec)


def _slater_float(m, n, a, b, z, rel_tol, max_terms):
    """Residue sum in double precision.

    Returns ``(value, condition)`` where ``condition`` is the ratio of the sum
    of absolute term magnitudes to the magnitude of the result.
    """
    p, q = len(a), len(b)
    arg = -z if (p - m - n) % 2 else z
    lz = math.log(z)
    total = 0.0
    scale = 0.0
    for h in range(m):
        bh = b[h]
        log_a = bh * lz
        sign = 1.0
        dead = False
        for j in range(q):
            if j == h:
                continue
            if j < m:
                x = b[j] - bh
                log_a += sc.gammaln(x)
                sign *= sc.gammasgn(x)
            else:
                x = 1.0 + bh - b[j]
                if x <= 0 and x == round(x):
                    dead = True
                    break
                log_a -= sc.gammaln(x)
                sign *= sc.gammasgn(x)
        if dead:
            continue
        for j in range(p):
            if j < n:
                x = 1.0 + bh - a[j]
                log_a += sc.gammaln(x)
                sign *= sc.gammasgn(x)
            else:
                x = a[j] - bh
                if x <= 0 and x == round(x):
                    dead = True
                    break
                log_a -= sc.gammaln(x)
                sign *= sc.gammasgn(x)
        if dead:
            continue
        num = [1.0 + bh - aj for aj in a]
        den = [1.0 + bh - b[j] for j in range(q) if j != h]
        term = 1.0
        series = 1.0
        biggest = 1.0
        prev = math.inf
        for k in range(max_terms):
            r = arg / (k + 1.0)
            for c in num:
                r *= c + k
            for c in den:
                r /= c + k
            term *= r
            series += term
            at = abs(term)
            biggest = max(biggest, at)
            if term == 0.0 or (at < prev and at <= 0.1 * _EPS * abs(series)):
                break
            prev = at
        else:
            return math.nan, math.inf
        mag = math.exp(log_a)
        total += sign * mag * series
        scale += mag * biggest
    if total == 0.0:
        return 0.0, math.inf
    return total, scale / abs(total)


def _slater_mp(ctx, m, n, a, b, z, max_terms):
    p, q = len(a), len(b)
    z = ctx.mpf(z)
    arg = -z if (p - m - n) % 2 else z
    a = [ctx.mpf(x) for x in a]
    b = [ctx.mpf(x) for x in b]
    tiny = ctx.mpf(2) ** (-ctx.prec - 8)
    total = ctx.zero
    scale = ctx.zero
    for h in range(m):
        bh = b[h]
        coef = z ** bh
        for j in range(q):
            if j == h:
                continue
            coef *= ctx.gamma(b[j] - bh) if j < m else ctx.rgamma(1 + bh - b[j])
        for j in range(p):
            coef *= ctx.gamma(1 + bh - a[j]) if j < n else ctx.rgamma(a[j] - bh)
        if coef == 0:
            continue
        num = [1 + bh - aj for aj in a]
        den = [1 + bh - b[j] for j in range(q) if j != h]
        term = ctx.one
        series = ctx.one
        biggest = ctx.one
        for k in range(max_terms):
            r = arg / (k + 1)
            for c in num:
                r *= c + k
            for c in den:
                r /= c + k
            term *= r
            series += term
            at = abs(term)
            if at > biggest:
                biggest = at
            if at <= tiny * abs(series):
                break
        else:
            raise EvaluationError("hypergeometric series did not converge")
        total += coef * series
        scale += abs(coef) * biggest
    return total, scale


def _slater_extended(spec, acc, cond_hint):
    """Residue sum in extended precision, with symmetric perturbation of
    colliding lower parameters."""
    m, n = spec.m, spec.n
    a, b = list(spec.a), list(spec.b)
    groups = _collision_groups(b, m, acc.collision_eps)
    target = -math.log10(acc.rel_tol)
    extra = math.log10(max(cond_hint, 1.0)) if math.isfinite(cond_hint) else 30.0
    if groups:
        order = max(len(g) for g in groups)
        extra += (order - 1) * -math.log10(acc.collision_eps) + 3
    dps = int(target + extra + 10)
    for _ in range(4):
        ctx = _mp_context(dps)
        if groups:
            vals = []
            for s in (1, -1):
                bp = [ctx.mpf(x) for x in b]
                for g in groups:
                    for rank, idx in enumerate(g):
                        bp[idx] += s * rank * ctx.mpf(acc.collision_eps)
                vals.append(_slater_mp(ctx, m, n, a, bp, spec.z, acc.max_terms))
            value = (vals[0][0] + vals[1][0]) / 2
            scale = max(vals[0][1], vals[1][1])
        else:
            value, scale = _slater_mp(ctx, m, n, a, b, spec.z, acc.max_terms)
        if value != 0:
            lost = float(ctx.log10(scale / abs(value))) if scale > 0 else 0.0
            if dps - lost >= target + 3:
                return float(value)
            dps = int(target + lost + 12)
        else:
            dps *= 2
    raise EvaluationError("extended-precision residue sum lost all significance", spec)


def meijer_g(spec, acc=DEFAULT_ACCURACY):
    """Meijer G function ``G^{m,n}_{p,q}(z | a; b)`` for real parameters,
    ``p < q`` and ``z > 0``, via Slater's residue expansion.

    The double-precision sum is accepted only if its cancellation estimate
    keeps the relative error below ``acc.rel_tol``; otherwise the sum is
    redone in extended precision.  Lower parameters whose differences fall
    within ``acc.collision_eps`` of an integer are split by a symmetric
    perturbation and the two evaluations averaged.  If both paths fail the
    Mellin-Barnes oracle is used.
    """
    if not isinstance(spec, MeijerGSpec):
        raise TypeError("spec must be a MeijerGSpec")
    _check_separable(spec, acc.collision_eps)
    groups = _collision_groups(spec.b, spec.m, acc.collision_eps)
    cond = math.inf
    if not groups:
        value, cond = _slater_float(spec.m, spec.n, spec.a, spec.b, spec.z, acc.rel_tol, acc.max_terms)
        if math.isfinite(cond) and 8.0 * cond * _EPS <= acc.rel_tol:
            return value
    try:
        return _slater_extended(spec, acc, cond)
    except EvaluationError:
        return meijer_g_oracle(spec)


def _mb_integrand(ctx, spec):
    m, n, p, q = spec.m, spec.n, spec.p, spec.q
    a = [ctx.mpf(x) for x in spec.a]
    b = [ctx.mpf(x) for x in spec.b]
    lz = ctx.log(ctx.mpf(spec.z))

    def f(s):
        v = ctx.exp(s * lz)
        for j in range(q):
            v *= ctx.gamma(b[j] - s) if j < m else ctx.rgamma(1 - b[j] + s)
        for j in range(p):
            v *= ctx.gamma(1 - a[j] + s) if j < n else ctx.rgamma(a[j] - s)
        return v

    return f


def _log_abs_integrand_real(spec, c):
    v = c * math.log(spec.z)
    for j in range(spec.q):
        v += sc.gammaln(spec.b[j] - c) if j < spec.m else -sc.gammaln(1 - spec.b[j] + c)
    for j in range(spec.p):
        v += sc.gammaln(1 - spec.a[j] + c) if j < spec.n else -sc.gammaln(spec.a[j] - c)
    return float(v)


def _contour_abscissa(spec):
    hi = min(spec.b[: spec.m]) if spec.m else math.inf
    lo = max(x - 1.0 for x in spec.a[: spec.n]) if spec.n else -math.inf
    if not lo < hi:
        raise EvaluationError("no vertical contour separates the pole families", spec)
    if math.isinf(hi):
        raise EvaluationError("oracle requires m >= 1", spec)
    if math.isinf(lo):
        left, right = hi - 60.0, hi - 0.05
    else:
        margin = min(0.05, 0.25 * (hi - lo))
        left, right = lo + margin, hi - margin
    # golden-section search for the real-axis minimum of |integrand|
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1, x2 = right - g * (right - left), left + g * (right - left)
    f1, f2 = _log_abs_integrand_real(spec, x1), _log_abs_integrand_real(spec, x2)
    for _ in range(80):
        if f1 < f2:
            right, x2, f2 = x2, x1, f1
            x1 = right - g * (right - left)
            f1 = _log_abs_integrand_real(spec, x1)
        else:
            left, x1, f1 = x1, x2, f2
            x2 = left + g * (right - left)
            f2 = _log_abs_integrand_real(spec, x2)
    return 0.5 * (left + right)


def meijer_g_oracle(spec, *, panel_width=1.0, dps=30):
    """Meijer G by direct quadrature of the Mellin-Barnes integral.

    The vertical contour ``Re s = c`` is placed at the real-axis minimum of
    the integrand between the two pole families, and the integral over
    ``t = Im s`` is split into panels of ``panel_width`` (shrunk for strongly
    oscillating ``z**(it)``) and summed with tanh-sinh quadrature.
    """
    if not isinstance(spec, MeijerGSpec):
        raise TypeError("spec must be a MeijerGSpec")
    c = _contour_abscissa(spec)
    decay = (2 * (spec.m + spec.n) - spec.p - spec.q) * math.pi / 2.0
    if decay <= 0:
        raise EvaluationError("integrand does not decay along the contour", spec)
    lz = abs(math.log(spec.z))
    width = panel_width / max(1.0, lz / math.pi)
    peak = _log_abs_integrand_real(spec, c)
    work = dps
    for _ in range(3):
        ctx = _mp_context(work)
        f = _mb_integrand(ctx, spec)
        cc = ctx.mpf(c)
        # integrand magnitude falls roughly like exp(-decay*t) (times powers of t)
        t_max = (work + 10) * math.log(10.0) / decay + 10.0
        t_max = max(t_max, 4 * width)
        nodes = [ctx.mpf(0)]
        t = 0.0
        while t < t_max:
            t += width
            nodes.append(ctx.mpf(t))
        val = ctx.quad(lambda t: ctx.re(f(ctx.mpc(cc, t))), nodes) / ctx.pi
        if val == 0:
            work *= 2
            continue
        lost = (peak - float(ctx.log(abs(val)))) / math.log(10.0)
        if work - max(lost, 0.0) >= 14:
            return float(val)
        work = int(lost + 24)
    raise EvaluationError("Mellin-Barnes quadrature lost all significance", spec)
