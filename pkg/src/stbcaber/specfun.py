"""Overflow-safe special functions.

Everything that can leave floating-point range is carried either as a natural
logarithm (the array helpers prefixed ``log_``) or as a :class:`SpecFunResult`
pair ``(value, log_scale)`` representing ``value * exp(log_scale)``.

The array helpers take a scalar order/parameter and an array of arguments so
that quadrature and PDF code can evaluate a whole node set per call.
"""

import math
from typing import NamedTuple

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import ConvergenceError, DomainError

__all__ = [
    "SpecFunResult",
    "ln_gamma",
    "gamma_upper_reg",
    "log_gamma_upper_reg",
    "bessel_i_scaled",
    "log_bessel_i",
    "hyp1f1_scaled",
    "log_hyp1f1",
    "hyp2f1",
]

_TINY = 1e-300
_EPS = 2.0 ** -53


class SpecFunResult(NamedTuple):
    """A real number stored as ``value * exp(log_scale)``."""

    value: float
    log_scale: float

    @classmethod
    def from_log(cls, log_abs, sign=1.0):
        if log_abs == -math.inf or sign == 0:
            return cls(0.0, 0.0)
        return cls(math.copysign(1.0, sign), float(log_abs))

    @property
    def sign(self):
        return 0.0 if self.value == 0 else math.copysign(1.0, self.value)

    def log_abs(self):
        """Natural log of the magnitude (``-inf`` for an exact zero)."""
        if self.value == 0:
            return -math.inf
        return math.log(abs(self.value)) + self.log_scale

    def __float__(self):
        if self.value == 0:
            return 0.0
        lg = self.log_abs()
        if lg > 709.78:
            return math.copysign(math.inf, self.value)
        return self.value * math.exp(self.log_scale)

    def __mul__(self, other):
        if isinstance(other, SpecFunResult):
            return _normalized(self.value * other.value, self.log_scale + other.log_scale)
        return _normalized(self.value * float(other), self.log_scale)

    __rmul__ = __mul__


def _normalized(value, log_scale):
    if value == 0:
        return SpecFunResult(0.0, 0.0)
    return SpecFunResult(value, log_scale)


def _check_finite(name, v):
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} must be finite, got {v!r}")


# --------------------------------------------------------------------------
# Gamma family
# --------------------------------------------------------------------------

def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not math.isfinite(x) or x <= 0:
        raise DomainError(f"ln_gamma requires a finite positive argument, got {x}")
    return math.lgamma(x)


def _log_gamma_q_array(s, x):
    """log Q(s, x) for scalar ``s > 0`` and an array ``x >= 0``."""
    out = np.zeros_like(x)
    lg_s = math.lgamma(s)

    ser = (x > 0) & (x < s + 1.0)
    if np.any(ser):
        xs = x[ser]
        # P(s,x) = x^s e^-x / Gamma(s+1) * sum_k x^k / ((s+1)...(s+k))
        term = np.ones_like(xs)
        total = np.ones_like(xs)
        active = np.ones(xs.shape, dtype=bool)
        for k in range(1, 20000):
            term = term * xs / (s + k)
            total = total + np.where(active, term, 0.0)
            active &= term > _EPS * 0.25 * total
            if not active.any():
                break
        else:  # pragma: no cover - bounded by x < s + 1
            raise ConvergenceError("incomplete gamma series did not converge")
        log_p = s * np.log(xs) - xs - math.lgamma(s + 1.0) + np.log(total)
        out[ser] = np.log1p(-np.exp(log_p))

    cf = x >= s + 1.0
    if np.any(cf):
        xc = x[cf]
        # modified Lentz evaluation of the Legendre continued fraction
        b = xc + 1.0 - s
        c = np.full_like(xc, 1.0 / _TINY)
        d = 1.0 / b
        h = d.copy()
        active = np.ones(xc.shape, dtype=bool)
        for i in range(1, 20000):
            an = -i * (i - s)
            b = b + 2.0
            d = an * d + b
            d = np.where(np.abs(d) < _TINY, _TINY, d)
            c = b + an / c
            c = np.where(np.abs(c) < _TINY, _TINY, c)
            d = 1.0 / d
            delta = d * c
            h = np.where(active, h * delta, h)
            active &= np.abs(delta - 1.0) > _EPS
            if not active.any():
                break
        else:  # pragma: no cover
            raise ConvergenceError("incomplete gamma continued fraction did not converge")
        out[cf] = -xc + s * np.log(xc) - lg_s + np.log(h)
    return out


def _validate_gamma_args(s, x):
    s = float(s)
    if not math.isfinite(s) or s <= 0:
        raise DomainError(f"incomplete gamma requires s > 0, got {s}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("incomplete gamma requires x >= 0")
    return s, xa


def log_gamma_upper_reg(s, x):
    """Natural log of the regularized upper incomplete gamma ``Q(s, x)``.

    Stays accurate far into the tail where ``Q`` itself underflows.
    ``x = inf`` gives ``-inf``.
    """
    s, xa = _validate_gamma_args(s, x)
    flat = np.atleast_1d(xa).astype(float).ravel()
    out = np.full(flat.shape, -np.inf)
    fin = np.isfinite(flat)
    out[fin] = _log_gamma_q_array(s, flat[fin])
    out = out.reshape(np.shape(xa))
    return float(out) if np.ndim(xa) == 0 else out


def gamma_upper_reg(s, x):
    """Regularized upper incomplete gamma ``Gamma(s, x) / Gamma(s)``.

    Power series for ``x < s + 1``, continued fraction otherwise.

    Parameters
    ----------
    s : float
        Shape, ``s > 0``.
    x : float or array_like
        Lower integration limit(s), ``x >= 0``.

    Returns
    -------
    float or ndarray
        Values in ``[0, 1]``; 1 at ``x = 0``.
    """
    lq = log_gamma_upper_reg(s, x)
    return np.minimum(np.exp(lq), 1.0) if np.ndim(lq) else min(math.exp(lq), 1.0)


# --------------------------------------------------------------------------
# Modified Bessel function of the first kind
# --------------------------------------------------------------------------

def _bessel_series_terms(nu, xmax):
    # index of the largest series term, then a generous tail allowance
    half = xmax / 2.0
    kstar = max(0.0, (-(nu + 2.0) + math.sqrt((nu + 2.0) ** 2 + 4.0 * (half * half - nu - 1.0))) / 2.0) \
        if half * half > nu + 1.0 else 0.0
    return int(kstar + 14.0 * math.sqrt(kstar + 1.0) + 40)


def _log_bessel_series(nu, x):
    """log I_nu(x) by the power series, summed in log space (x > 0)."""
    out = np.empty_like(x)
    nchunk = max(1, int(4_000_000 // max(_bessel_series_terms(nu, float(x.max())), 1)))
    for lo in range(0, x.size, nchunk):
        xs = x[lo:lo + nchunk]
        K = _bessel_series_terms(nu, float(xs.max()))
        k = np.arange(K, dtype=float)
        lhalf = np.log(xs / 2.0)[:, None]
        steps = 2.0 * lhalf - np.log(k + 1.0)[None, :] - np.log(k + nu + 1.0)[None, :]
        logt = np.empty((xs.size, K + 1))
        logt[:, 0] = nu * lhalf[:, 0] - math.lgamma(nu + 1.0)
        np.cumsum(steps, axis=1, out=logt[:, 1:])
        logt[:, 1:] += logt[:, :1]
        out[lo:lo + nchunk] = logsumexp(logt, axis=1)
    return out


def _ive_hankel(nu, x):
    """e^{-x} I_nu(x) from the large-argument Hankel expansion."""
    mu4 = 4.0 * nu * nu
    term = np.ones_like(x)
    total = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    prev = np.ones_like(x)
    for k in range(1, 200):
        term = -term * (mu4 - (2 * k - 1) ** 2) / (k * 8.0 * x)
        mag = np.abs(term)
        grow = mag > prev
        active &= ~grow
        total = np.where(active, total + term, total)
        prev = mag
        active &= mag > _EPS * 0.1 * np.abs(total)
        if not active.any():
            break
    return total / np.sqrt(2.0 * math.pi * x)


def _hankel_threshold(nu):
    return max(40.0, 2.0 * nu * nu)


def _validate_bessel(nu, x):
    nu = float(nu)
    if not math.isfinite(nu) or nu < -0.5:
        raise DomainError(f"Bessel order must satisfy nu >= -0.5, got {nu}")
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("Bessel argument must be non-negative")
    if nu < 0 and np.any(xa == 0):
        raise DomainError("I_nu(0) is infinite for negative order")
    return nu, xa


def log_bessel_i(nu, x):
    """Natural log of ``I_nu(x)`` for ``nu >= -0.5``, ``x >= 0``."""
    nu, xa = _validate_bessel(nu, x)
    flat = np.atleast_1d(xa).astype(float).ravel()
    out = np.empty_like(flat)
    zero = flat == 0
    out[zero] = 0.0 if nu == 0 else -np.inf
    big = flat > _hankel_threshold(nu)
    if np.any(big):
        out[big] = flat[big] + np.log(_ive_hankel(nu, flat[big]))
    small = ~zero & ~big
    if np.any(small):
        out[small] = _log_bessel_series(nu, flat[small])
    out = out.reshape(np.shape(xa))
    return float(out) if np.ndim(xa) == 0 else out


def bessel_i_scaled(nu, x):
    """Exponentially scaled modified Bessel function ``e^{-x} I_nu(x)``.

    Never overflows. Uses the power series (in log space) for moderate
    arguments and the Hankel expansion once ``x > max(40, 2 nu^2)``.

    Examples
    --------
    >>> round(bessel_i_scaled(0.5, 1.0), 5)
    0.34495
    """
    nu, xa = _validate_bessel(nu, x)
    flat = np.atleast_1d(xa).astype(float).ravel()
    out = np.empty_like(flat)
    zero = flat == 0
    out[zero] = 1.0 if nu == 0 else 0.0
    big = flat > _hankel_threshold(nu)
    if np.any(big):
        out[big] = _ive_hankel(nu, flat[big])
    small = ~zero & ~big
    if np.any(small):
        out[small] = np.exp(_log_bessel_series(nu, flat[small]) - flat[small])
    out = out.reshape(np.shape(xa))
    return float(out) if np.ndim(xa) == 0 else out


# --------------------------------------------------------------------------
# Confluent hypergeometric 1F1(a; b; z), a > 0, b > 0, z >= 0
# --------------------------------------------------------------------------

def _kummer_terminating_order(a, b):
    n = a - b
    if n >= 0 and n == round(n) and n <= 2000:
        return int(round(n))
    return None


def _logsum_positive_series(log_ratio, z, K):
    """Cumulative log-space sum of a positive series given its term ratio."""
    k = np.arange(K, dtype=float)
    steps = log_ratio(k)[None, :] + np.log(z)[:, None]
    logt = np.zeros((z.size, K + 1))
    np.cumsum(steps, axis=1, out=logt[:, 1:])
    return logsumexp(logt, axis=1), logt[:, -1] - logt.max(axis=1)


def _log_hyp1f1_terminating(n, b, z):
    # e^z * 1F1(-n; b; -z): every term is positive
    if n == 0:
        return z.copy()
    pos = z > 0
    out = z.copy()
    if np.any(pos):
        zs = z[pos]
        k = np.arange(n, dtype=float)
        steps = (np.log(n - k) - np.log(b + k) - np.log(k + 1.0))[None, :] + np.log(zs)[:, None]
        logt = np.zeros((zs.size, n + 1))
        np.cumsum(steps, axis=1, out=logt[:, 1:])
        out[pos] = zs + logsumexp(logt, axis=1)
    return out


def _log_hyp1f1_series(a, b, z):
    out = np.zeros_like(z)
    pos = z > 0
    if not np.any(pos):
        return out
    zs = z[pos]

    def log_ratio(k):
        return np.log(a + k) - np.log(b + k) - np.log(k + 1.0)

    zmax = float(zs.max())
    disc = (zmax - b - 1.0) ** 2 + 4.0 * (a * zmax - b)
    kstar = max(0.0, ((zmax - b - 1.0) + math.sqrt(max(disc, 0.0))) / 2.0)
    K = int(kstar + 14.0 * math.sqrt(kstar + 1.0) + 50)
    for _ in range(12):
        nchunk = max(1, int(4_000_000 // K))
        res = np.empty_like(zs)
        tail = np.empty_like(zs)
        for lo in range(0, zs.size, nchunk):
            res[lo:lo + nchunk], tail[lo:lo + nchunk] = _logsum_positive_series(
                log_ratio, zs[lo:lo + nchunk], K)
        if np.all(tail < -41.0):
            out[pos] = res
            return out
        K *= 2
    raise ConvergenceError(f"1F1 series did not converge for a={a}, b={b}, z={zmax}")


def _log_hyp1f1_asymptotic(a, b, z):
    """Large-z expansion of e^z 1F1(b-a; b; -z); NaN where it is not accurate."""
    out = np.full_like(z, np.nan)
    # neglected companion term, relative to the kept one
    lg_ba = gammaln(b - a) if (b - a) > 0 or (b - a) != round(b - a) else np.inf
    neglect = math.lgamma(a) - lg_ba - z + (b - 2.0 * a) * np.log(np.maximum(z, 1e-300))
    ok = (z >= 50.0) & (neglect < -40.0)
    if not np.any(ok):
        return out
    zs = z[ok]
    term = np.ones_like(zs)
    total = np.ones_like(zs)
    prev = np.ones_like(zs)
    active = np.ones(zs.shape, dtype=bool)
    good = np.zeros(zs.shape, dtype=bool)
    for k in range(200):
        term = term * (b - a + k) * (1.0 - a + k) / ((k + 1.0) * zs)
        mag = np.abs(term)
        if k > 0:
            active &= mag <= prev
        total = np.where(active, total + term, total)
        prev = mag
        done = active & (mag <= _EPS * 0.1 * np.abs(total))
        good |= done
        active &= ~done
        if not active.any():
            break
    good &= total > 0
    vals = np.full_like(zs, np.nan)
    vals[good] = (math.lgamma(b) - math.lgamma(a) + zs[good]
                  + (a - b) * np.log(zs[good]) + np.log(total[good]))
    out[ok] = vals
    return out


def _log_hyp1f1_alternating(a, b, z):
    # e^z * 1F1(b-a; b; -z) summed directly; only for small z
    c = b - a
    term = np.ones_like(z)
    total = np.ones_like(z)
    active = np.ones(z.shape, dtype=bool)
    for k in range(2000):
        term = term * (c + k) * (-z) / ((b + k) * (k + 1.0))
        total = np.where(active, total + term, total)
        active &= np.abs(term) > _EPS * 0.01 * np.abs(total)
        if not active.any():
            break
    return z + np.log(total)


def _validate_1f1(a, b, z):
    a, b = float(a), float(b)
    if not (math.isfinite(a) and a > 0):
        raise DomainError(f"1F1 requires a > 0 here, got a={a}")
    if not (math.isfinite(b) and b > 0):
        raise DomainError(f"1F1 requires b > 0, got b={b}")
    za = np.asarray(z, dtype=float)
    if np.any(~np.isfinite(za)) or np.any(za < 0):
        raise DomainError("1F1 argument must be finite and non-negative")
    return a, b, za


def log_hyp1f1(a, b, z, method="auto"):
    """Natural log of ``1F1(a; b; z)`` for ``a, b > 0`` and ``z >= 0``.

    ``method`` selects the evaluation path:

    * ``"series"``: the defining positive series, accumulated in log space.
    * ``"kummer"``: ``e^z 1F1(b-a; b; -z)``, with the transformed function
      evaluated as a terminating sum (``a - b`` a non-negative integer), a
      direct alternating sum (``z <= 5``) or its large-``z`` expansion.
      Raises :class:`ConvergenceError` where none of these is accurate.
    * ``"auto"``: Kummer where it is exact or asymptotically accurate,
      series otherwise.
    """
    a, b, za = _validate_1f1(a, b, z)
    flat = np.atleast_1d(za).astype(float).ravel()
    n = _kummer_terminating_order(a, b)
    if method == "series":
        out = _log_hyp1f1_series(a, b, flat)
    elif n is not None and method in ("auto", "kummer"):
        out = _log_hyp1f1_terminating(n, b, flat)
    elif method == "auto":
        out = _log_hyp1f1_asymptotic(a, b, flat)
        rest = np.isnan(out)
        if np.any(rest):
            out[rest] = _log_hyp1f1_series(a, b, flat[rest])
    elif method == "kummer":
        out = np.full_like(flat, np.nan)
        small = flat <= 5.0
        if np.any(small):
            out[small] = _log_hyp1f1_alternating(a, b, flat[small])
        if np.any(~small):
            out[~small] = _log_hyp1f1_asymptotic(a, b, flat[~small])
        if np.any(np.isnan(out)):
            raise ConvergenceError(
                f"Kummer path unavailable for a={a}, b={b} at z={flat[np.isnan(out)][0]}")
    else:
        raise ValueError(f"unknown method {method!r}")
    out = out.reshape(np.shape(za))
    return float(out) if np.ndim(za) == 0 else out


def hyp1f1_scaled(a, b, z, method="auto"):
    """``1F1(a; b; z)`` as a :class:`SpecFunResult`.

    The magnitude may exceed floating range; combine ``log_scale`` with other
    log-domain factors before exponentiating.
    """
    if float(b) <= 0:
        raise DomainError(f"1F1 requires b > 0, got b={b}")
    return SpecFunResult.from_log(log_hyp1f1(a, b, float(z), method=method))


# --------------------------------------------------------------------------
# Gauss hypergeometric 2F1(a, b; c; z), 0 <= z < 1
# --------------------------------------------------------------------------

def _is_nonpos_int(v):
    return v <= 0 and v == round(v)


def _lgamma_sign(v):
    """(log|Gamma(v)|, sign Gamma(v)); v must not be a pole."""
    if v > 0:
        return math.lgamma(v), 1.0
    sign = -1.0 if math.floor(v) % 2 else 1.0
    return math.lgamma(v), sign


def _series_2f1(a, b, c, z, max_terms=2_000_000):
    """Direct series with running rescaling; returns SpecFunResult."""
    total = 1.0
    term = 1.0
    log_scale = 0.0
    for k in range(max_terms):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
        if term == 0.0 or abs(term) <= _EPS * 0.01 * abs(total):
            if k > 2 or term == 0.0:
                return _normalized(total, log_scale)
        if abs(total) > 1e280:
            total *= 1e-280
            term *= 1e-280
            log_scale += 280.0 * math.log(10.0)
    raise ConvergenceError(f"2F1 series did not converge for a={a}, b={b}, c={c}, z={z}")


def _connection_2f1(a, b, c, z):
    """Analytic continuation around z = 1; None when cancellation is severe."""
    w = 1.0 - z
    g_c = _lgamma_sign(c)
    s = c - a - b
    parts = []
    # term 1: Gamma(c)Gamma(c-a-b)/(Gamma(c-a)Gamma(c-b)) 2F1(a, b; a+b-c+1; 1-z)
    if not (_is_nonpos_int(c - a) or _is_nonpos_int(c - b)):
        ls, ss = _lgamma_sign(s)
        la, sa = _lgamma_sign(c - a)
        lb, sb = _lgamma_sign(c - b)
        f = _series_2f1(a, b, a + b - c + 1.0, w)
        parts.append(f * SpecFunResult(g_c[1] * ss * sa * sb, g_c[0] + ls - la - lb))
    # term 2: (1-z)^{c-a-b} Gamma(c)Gamma(a+b-c)/(Gamma(a)Gamma(b)) 2F1(c-a, c-b; c-a-b+1; 1-z)
    if not (_is_nonpos_int(a) or _is_nonpos_int(b)):
        ls, ss = _lgamma_sign(-s)
        la, sa = _lgamma_sign(a)
        lb, sb = _lgamma_sign(b)
        f = _series_2f1(c - a, c - b, s + 1.0, w)
        parts.append(f * SpecFunResult(g_c[1] * ss * sa * sb, g_c[0] + ls - la - lb + s * math.log(w)))
    if not parts:
        return None
    ref = max(p.log_abs() for p in parts)
    total = sum(p.value * math.exp(p.log_scale - ref) for p in parts if p.value != 0)
    biggest = max(abs(p.value) * math.exp(p.log_scale - ref) for p in parts)
    if total == 0 or abs(total) < 1e-6 * biggest:
        return None
    return _normalized(total, ref)


def hyp2f1(a, b, c, z):
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` on ``0 <= z < 1``.

    For ``z > 0.5`` the Euler transformation
    ``2F1(a,b;c;z) = (1-z)^{c-a-b} 2F1(c-a, c-b; c; z)`` is applied when it
    makes the series terminate (it is exact for ``b == c``, the case every
    closed form here produces); otherwise the ``1 - z`` connection formula is
    used, falling back to the direct series if the two branches cancel.

    Returns
    -------
    SpecFunResult
    """
    a, b, c, z = float(a), float(b), float(c), float(z)
    for name, v in (("a", a), ("b", b), ("c", c), ("z", z)):
        _check_finite(name, v)
    if c <= 0:
        raise DomainError(f"2F1 requires c > 0, got c={c}")
    if not 0.0 <= z < 1.0:
        raise DomainError(f"2F1 argument must lie in [0, 1), got z={z}")
    if z == 0.0 or a == 0.0 or b == 0.0:
        return SpecFunResult(1.0, 0.0)
    if z <= 0.5 or _is_nonpos_int(a) or _is_nonpos_int(b):
        return _series_2f1(a, b, c, z)
    if _is_nonpos_int(c - a) or _is_nonpos_int(c - b):
        poly = _series_2f1(c - a, c - b, c, z)
        return poly * SpecFunResult(1.0, (c - a - b) * math.log1p(-z))
    s = c - a - b
    if abs(s - round(s)) > 1e-8:
        res = _connection_2f1(a, b, c, z)
        if res is not None:
            return res
    return _series_2f1(a, b, c, z)
