"""Fading-channel descriptors, combined power PDFs and samplers.

An orthogonal STBC over ``nt x nr`` uncorrelated branches delivers the sum of
``L = nt * nr`` i.i.d. branch powers. For both families the sum stays in the
family, so the combined density is written in a compact form

* eta-mu:              ``f(g) = psi g^(m-1) e^(-beta g) I_nu(xi g)``
* kappa-mu shadowed:   ``f(g) = psi g^(mu~-1) e^(-beta g) 1F1(m~; mu~; zeta g)``

``mean_snr`` is always the per-branch average SNR, so the combined mean is
``L * mean_snr``.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateChannelError, DomainError
from .specfun import log_bessel_i, log_hyp1f1

__all__ = [
    "EtaMuFormat", "EtaMuChannel", "KappaMuShadowedChannel", "StbcConfig",
    "EtaMuCompact", "KmsCompact", "SpecialCase", "M_LIMIT",
    "h_H", "compact", "compact_eta_mu", "compact_kms", "pdf_eta_mu", "pdf_kms",
    "from_special_case", "sample_eta_mu", "sample_kms", "sampler_for",
    "channel_to_config", "channel_from_config",
]

M_LIMIT = 1e4


class EtaMuFormat(enum.Enum):
    FORMAT_I = "eta"       # eta: in-phase / quadrature power ratio
    FORMAT_II = "lambda"   # lambda: in-phase / quadrature correlation


def _positive(name, v):
    v = float(v)
    if not math.isfinite(v) or v <= 0:
        raise DomainError(f"{name} must be finite and positive, got {v}")
    return v


def _check_shape_param(fmt, shape):
    shape = float(shape)
    if fmt is EtaMuFormat.FORMAT_I:
        if not math.isfinite(shape) or shape <= 0:
            raise DomainError(f"eta must be positive, got {shape}")
    elif not -1.0 < shape < 1.0:
        raise DomainError(f"lambda must lie in (-1, 1), got {shape}")
    return shape


def h_H(fmt, shape):
    """The (h, H) pair of the eta-mu family.

    >>> h_H(EtaMuFormat.FORMAT_I, 0.5)
    (1.125, 0.375)
    """
    fmt = EtaMuFormat(fmt)
    s = _check_shape_param(fmt, shape)
    if fmt is EtaMuFormat.FORMAT_I:
        return 0.25 * (1.0 + s) ** 2 / s, 0.25 * (1.0 - s * s) / s
    return 1.0 / (1.0 - s * s), s / (1.0 - s * s)


@dataclass(frozen=True)
class EtaMuChannel:
    fmt: EtaMuFormat
    shape: float
    mu: float
    mean_snr: float

    def __post_init__(self):
        object.__setattr__(self, "fmt", EtaMuFormat(self.fmt))
        object.__setattr__(self, "shape", _check_shape_param(self.fmt, self.shape))
        object.__setattr__(self, "mu", _positive("mu", self.mu))
        object.__setattr__(self, "mean_snr", _positive("mean_snr", self.mean_snr))

    @property
    def power_ratio(self):
        """In-phase to quadrature power ratio of the underlying components."""
        if self.fmt is EtaMuFormat.FORMAT_I:
            return self.shape
        return (1.0 - self.shape) / (1.0 + self.shape)

    def with_mean_snr(self, mean_snr):
        return EtaMuChannel(self.fmt, self.shape, self.mu, mean_snr)


@dataclass(frozen=True)
class KappaMuShadowedChannel:
    kappa: float
    mu: float
    m: float
    mean_snr: float

    def __post_init__(self):
        k = float(self.kappa)
        if not math.isfinite(k) or k < 0:
            raise DomainError(f"kappa must be finite and non-negative, got {k}")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "mu", _positive("mu", self.mu))
        object.__setattr__(self, "m", _positive("m", self.m))
        object.__setattr__(self, "mean_snr", _positive("mean_snr", self.mean_snr))

    def with_mean_snr(self, mean_snr):
        return KappaMuShadowedChannel(self.kappa, self.mu, self.m, mean_snr)


@dataclass(frozen=True)
class StbcConfig:
    nt: int = 1
    nr: int = 1

    def __post_init__(self):
        for name in ("nt", "nr"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise DomainError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))

    @property
    def branches(self):
        return self.nt * self.nr


# --------------------------------------------------------------------------
# Compact forms
# --------------------------------------------------------------------------

def _check_gamma(gamma):
    g = np.asarray(gamma, dtype=float)
    if np.any(np.isnan(g)) or np.any(g <= 0):
        raise DomainError("the density is evaluated for gamma > 0 only")
    return g


@dataclass(frozen=True)
class EtaMuCompact:
    """``psi g^(m-1) e^(-beta g) I_nu(xi g)`` with ``nu = m - 1``."""

    log_psi: float
    shape_m: float
    beta: float
    xi: float
    nu: float
    total_mean: float

    def __post_init__(self):
        if not self.beta > self.xi > 0:
            raise DomainError(f"eta-mu compact form needs beta > xi > 0 (beta={self.beta}, xi={self.xi})")

    def logpdf(self, gamma):
        g = _check_gamma(gamma)
        z = self.xi * g
        with np.errstate(divide="ignore"):
            # leading series term where xi g underflows
            small = np.log(self.xi) + np.log(g) - math.log(2.0)
        small = self.nu * small - math.lgamma(self.nu + 1.0)
        tiny = z < 1e-280
        log_i = np.where(tiny, small, log_bessel_i(self.nu, np.where(tiny, 1.0, z)))
        return (self.log_psi + (self.shape_m - 1.0) * np.log(g)
                - self.beta * g + log_i)

    def pdf(self, gamma):
        return np.exp(self.logpdf(gamma))


@dataclass(frozen=True)
class KmsCompact:
    """``psi g^(mu~-1) e^(-beta g) 1F1(m~; mu~; zeta g)``."""

    log_psi: float
    mu_t: float
    m_t: float
    beta: float
    zeta: float
    total_mean: float

    def __post_init__(self):
        if not (self.beta > self.zeta >= 0):
            raise DomainError(f"kappa-mu shadowed compact form needs beta > zeta >= 0 "
                              f"(beta={self.beta}, zeta={self.zeta})")

    def logpdf(self, gamma):
        g = _check_gamma(gamma)
        out = self.log_psi + (self.mu_t - 1.0) * np.log(g) - self.beta * g
        if self.zeta > 0:
            out = out + log_hyp1f1(self.m_t, self.mu_t, self.zeta * g)
        return out

    def pdf(self, gamma):
        return np.exp(self.logpdf(gamma))


def compact_eta_mu(channel, stbc=StbcConfig()):
    """Combine ``stbc.branches`` eta-mu branches into the compact form.

    Raises
    ------
    DegenerateChannelError
        For ``eta == 1`` / ``lambda == 0`` (H = 0). Such channels are
        Nakagami-type; use the kappa-mu shadowed family with ``kappa = 0``.
    """
    h, H = h_H(channel.fmt, channel.shape)
    if H == 0:
        raise DegenerateChannelError(
            "eta-mu with eta=1 / lambda=0 has H=0 and a singular compact form; "
            "model it as kappa-mu shadowed with kappa=0, mu=2*mu")
    H = abs(H)
    if 2.0 * channel.mu * H / channel.mean_snr == 0.0:
        raise DegenerateChannelError(
            f"eta-mu with H={H:g} is numerically indistinguishable from H=0; "
            "model it as kappa-mu shadowed with kappa=0, mu=2*mu")
    L = stbc.branches
    mu_l = channel.mu * L
    m = mu_l + 0.5
    g = channel.mean_snr
    log_psi = (math.log(2.0 * math.sqrt(math.pi)) + mu_l * math.log(h) - math.lgamma(mu_l)
               - (m - 1.0) * math.log(H) + m * math.log(channel.mu / g))
    return EtaMuCompact(log_psi=log_psi, shape_m=m, beta=2.0 * channel.mu * h / g,
                        xi=2.0 * channel.mu * H / g, nu=m - 1.0, total_mean=L * g)


def compact_kms(channel, stbc=StbcConfig()):
    """Combine ``stbc.branches`` kappa-mu shadowed branches into the compact form."""
    L = stbc.branches
    k = channel.kappa
    mu_t = L * channel.mu
    m_t = L * channel.m
    eta_t = L * channel.mean_snr
    # m~ ln m~ - m~ ln(mu~ k + m~) written as -m~ log1p(mu~ k / m~)
    log_psi = (-m_t * math.log1p(mu_t * k / m_t) + mu_t * math.log(mu_t) + mu_t * math.log1p(k)
               - math.lgamma(mu_t) - mu_t * math.log(eta_t))
    beta = mu_t * (1.0 + k) / eta_t
    zeta = mu_t * mu_t * k * (1.0 + k) / ((mu_t * k + m_t) * eta_t)
    return KmsCompact(log_psi=log_psi, mu_t=mu_t, m_t=m_t, beta=beta, zeta=zeta, total_mean=eta_t)


def compact(channel, stbc=StbcConfig()):
    if isinstance(channel, EtaMuChannel):
        return compact_eta_mu(channel, stbc)
    if isinstance(channel, KappaMuShadowedChannel):
        return compact_kms(channel, stbc)
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


def pdf_eta_mu(c, gamma):
    """Combined eta-mu power density, evaluated in log space."""
    return c.pdf(gamma)


def pdf_kms(c, gamma):
    """Combined kappa-mu shadowed power density, evaluated in log space."""
    return c.pdf(gamma)


# --------------------------------------------------------------------------
# Special cases
# --------------------------------------------------------------------------

class SpecialCase(enum.Enum):
    NAKAGAMI = "nakagami"
    RAYLEIGH = "rayleigh"
    RICIAN = "rician"
    RICIAN_SHADOWED = "rician-shadowed"
    KAPPA_MU = "kappa-mu"
    ONE_SIDED_GAUSSIAN = "one-sided-gaussian"
    HOYT = "hoyt"


def from_special_case(case, mean_snr=1.0, *, m=None, K=None, kappa=None, mu=None, q=None,
                      m_limit=M_LIMIT):
    """Build the generalized channel that reproduces a classical model.

    ``m -> inf`` entries use the finite stand-in ``m_limit``. For ``kappa = 0``
    the density does not depend on ``m`` at all, so those rows are exact.

    Examples
    --------
    >>> from_special_case("rayleigh", 1.0)
    KappaMuShadowedChannel(kappa=0.0, mu=1.0, m=10000.0, mean_snr=1.0)
    """
    case = SpecialCase(case)

    def need(name, v):
        if v is None:
            raise DomainError(f"{case.value} requires parameter {name}")
        return float(v)

    if case is SpecialCase.NAKAGAMI:
        mm = need("m", m)
        return KappaMuShadowedChannel(0.0, _positive("m", mm), m_limit, mean_snr)
    if case is SpecialCase.RAYLEIGH:
        return KappaMuShadowedChannel(0.0, 1.0, m_limit, mean_snr)
    if case is SpecialCase.RICIAN:
        k = need("K", K)
        if k < 0:
            raise DomainError(f"Rician K must be non-negative, got {k}")
        return KappaMuShadowedChannel(k, 1.0, m_limit, mean_snr)
    if case is SpecialCase.RICIAN_SHADOWED:
        k, mm = need("K", K), need("m", m)
        if k < 0:
            raise DomainError(f"Rician K must be non-negative, got {k}")
        return KappaMuShadowedChannel(k, 1.0, mm, mean_snr)
    if case is SpecialCase.KAPPA_MU:
        return KappaMuShadowedChannel(need("kappa", kappa), need("mu", mu), m_limit, mean_snr)
    if case is SpecialCase.ONE_SIDED_GAUSSIAN:
        return KappaMuShadowedChannel(0.0, 0.5, m_limit, mean_snr)
    qq = need("q", q)
    if not 0 < qq < 1:
        raise DomainError(f"Hoyt q must lie in (0, 1), got {qq}")
    return EtaMuChannel(EtaMuFormat.FORMAT_I, qq * qq, 0.5, mean_snr)


# --------------------------------------------------------------------------
# Monte Carlo samplers
# --------------------------------------------------------------------------

def sample_eta_mu(channel, stbc, rng, size=None):
    """Draw combined eta-mu SNR values.

    The power is the sum of in-phase and quadrature gamma variates, each with
    shape ``mu * L``; their scales reproduce the component power ratio and the
    per-branch mean. Valid for any real ``mu > 0`` (including eta = 1).
    """
    L = stbc.branches
    r = channel.power_ratio
    theta_q = channel.mean_snr / (channel.mu * (1.0 + r))
    theta_i = r * theta_q
    shape = channel.mu * L
    return rng.gamma(shape, theta_i, size) + rng.gamma(shape, theta_q, size)


def sample_kms(channel, stbc, rng, size=None):
    """Draw combined kappa-mu shadowed SNR values.

    Poisson mixture of gammas: the shadowed dominant power ``t`` (unit-mean
    gamma with shape ``m~``) sets a Poisson count ``N`` with rate
    ``mu~ kappa t``; the power is ``Gamma(mu~ + N)`` scaled to the mean.
    """
    L = stbc.branches
    mu_t, m_t = channel.mu * L, channel.m * L
    eta_t = channel.mean_snr * L
    t = rng.gamma(m_t, 1.0 / m_t, size)
    n = rng.poisson(mu_t * channel.kappa * t)
    g = rng.gamma(mu_t + n)
    return g * eta_t / (mu_t * (1.0 + channel.kappa))


def sampler_for(channel, stbc=StbcConfig()):
    """Return ``draw(rng, size)`` for the channel family."""
    if isinstance(channel, EtaMuChannel):
        return lambda rng, size=None: sample_eta_mu(channel, stbc, rng, size)
    if isinstance(channel, KappaMuShadowedChannel):
        return lambda rng, size=None: sample_kms(channel, stbc, rng, size)
    raise TypeError(f"unsupported channel type {type(channel).__name__}")


# --------------------------------------------------------------------------
# key=value serialization
# --------------------------------------------------------------------------

def _db(x):
    return 10.0 * math.log10(x)


def channel_to_config(channel, stbc=StbcConfig()):
    """Flat ``{key: str}`` mapping as consumed by the command line."""
    if isinstance(channel, EtaMuChannel):
        key = "eta" if channel.fmt is EtaMuFormat.FORMAT_I else "lambda"
        out = {"channel": "eta-mu" if key == "eta" else "lambda-mu", key: repr(channel.shape),
               "mu": repr(channel.mu)}
    elif isinstance(channel, KappaMuShadowedChannel):
        out = {"channel": "kappa-mu-shadowed", "kappa": repr(channel.kappa),
               "mu": repr(channel.mu), "m": repr(channel.m)}
    else:
        raise TypeError(f"unsupported channel type {type(channel).__name__}")
    out["mean_snr_db"] = repr(_db(channel.mean_snr))
    out["nt"] = str(stbc.nt)
    out["nr"] = str(stbc.nr)
    return out


def channel_from_config(cfg, mean_snr=None):
    """Inverse of :func:`channel_to_config`; also accepts special-case names.

    ``mean_snr`` (linear) overrides ``mean_snr_db`` when given.
    """
    def get(key):
        v = cfg.get(key)
        return None if v is None or v == "" else float(v)

    name = str(cfg.get("channel", "")).strip().lower()
    if mean_snr is None:
        db = get("mean_snr_db")
        mean_snr = 1.0 if db is None else 10.0 ** (db / 10.0)
    stbc = StbcConfig(int(get("nt") or 1), int(get("nr") or 1))
    if name in ("eta-mu", "eta"):
        return EtaMuChannel(EtaMuFormat.FORMAT_I, _required(get("eta"), "eta"),
                            _required(get("mu"), "mu"), mean_snr), stbc
    if name in ("lambda-mu", "lambda"):
        return EtaMuChannel(EtaMuFormat.FORMAT_II, _required(get("lambda"), "lambda"),
                            _required(get("mu"), "mu"), mean_snr), stbc
    if name in ("kappa-mu-shadowed", "kms"):
        return KappaMuShadowedChannel(_required(get("kappa"), "kappa"), _required(get("mu"), "mu"),
                                      _required(get("m"), "m"), mean_snr), stbc
    try:
        case = SpecialCase(name)
    except ValueError:
        raise DomainError(f"unknown channel {name!r}") from None
    kappa = get("kappa")
    return from_special_case(case, mean_snr, m=get("m"), K=kappa, kappa=kappa, mu=get("mu"),
                             q=get("q")), stbc


def _required(v, name):
    if v is None:
        raise DomainError(f"channel parameter {name!r} is required")
    return v
