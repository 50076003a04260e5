"""Average error probability: closed forms, quadrature and Monte Carlo.

The averaged quantity is ``Pe = A * E[Q_a(sqrt(B * snr))]`` over the combined
fading density. With the exponential-sum fit of ``Q_a`` the average has the
closed forms implemented here; :func:`aber_quadrature` integrates the same
average numerically and :func:`aber_monte_carlo` estimates it by sampling.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, StbcAberError, SweepPointError
from .fading import EtaMuCompact, KmsCompact, StbcConfig, compact, sampler_for
from .ggn import DEFAULT_SEED, ExpApprox, GgnModel, q_approx_sq, q_exact
from .quadrature import quad_semi_infinite
from .specfun import SpecFunResult, hyp2f1

__all__ = [
    "AberPoint", "SweepSpec", "aber_eta_mu_closed", "aber_kms_closed", "aber_kms_elementary",
    "aber_closed", "aber_quadrature", "aber_quadrature_many", "aber_monte_carlo",
    "conditional_error", "sweep", "UNDERFLOW",
]

UNDERFLOW = 1e-300
METHODS = ("closed", "quad", "mc")


def _signed_sum(terms):
    """Sum SpecFunResult terms without overflow; returns a float."""
    terms = [t for t in terms if t.value != 0]
    if not terms:
        return 0.0
    ref = max(t.log_abs() for t in terms)
    total = math.fsum(t.sign * math.exp(t.log_abs() - ref) for t in terms)
    if total == 0:
        return 0.0
    lg = math.log(abs(total)) + ref
    if lg > 709.78:
        return math.copysign(math.inf, total)
    return math.copysign(math.exp(lg), total)


def _log_prefix(mod, c, p):
    return math.log(mod.a_coef) + c.log_psi + math.log(abs(p))


def aber_eta_mu_closed(c, mod, fit):
    """Closed-form average error over combined eta-mu fading.

    Each of the four terms is
    ``Psi_i 2F1((m+nu)/2, (m+nu+1)/2; 1+nu; xi^2 / bt_i^2)`` with
    ``bt_i = beta + q_i B`` and
    ``Psi_i = A psi p_i xi^nu Gamma(m+nu) / (2^nu bt_i^(m+nu) Gamma(nu+1))``,
    assembled in log space.
    """
    m, nu, xi = c.shape_m, c.nu, c.xi
    terms = []
    for p, q in zip(fit.p, fit.q):
        if p == 0:
            continue
        bt = c.beta + q * mod.b_coef
        z = (xi / bt) ** 2
        assert 0 <= z < 1, f"2F1 argument {z} outside [0, 1)"
        log_psi_i = (_log_prefix(mod, c, p) + nu * math.log(xi) + math.lgamma(m + nu)
                     - nu * math.log(2.0) - (m + nu) * math.log(bt) - math.lgamma(nu + 1.0))
        h = hyp2f1((m + nu) / 2.0, (m + nu + 1.0) / 2.0, 1.0 + nu, z)
        terms.append(h * SpecFunResult(math.copysign(1.0, p), log_psi_i))
    return _signed_sum(terms)


def aber_kms_closed(c, mod, fit):
    """Closed-form average error over combined kappa-mu shadowed fading.

    For ``zeta > 0`` each term is ``Psi_i 2F1(m~, mu~; mu~; 1/bt_i)`` with
    ``bt_i = (beta + q_i B) / zeta`` and
    ``Psi_i = A psi p_i Gamma(mu~) / (zeta^mu~ bt_i^mu~)``. For ``zeta = 0``
    the confluent factor is 1 and the term is ``A psi p_i Gamma(mu~) / (beta + q_i B)^mu~``.
    """
    mu_t, m_t = c.mu_t, c.m_t
    terms = []
    for p, q in zip(fit.p, fit.q):
        if p == 0:
            continue
        b = c.beta + q * mod.b_coef
        base = _log_prefix(mod, c, p) + math.lgamma(mu_t)
        sign = math.copysign(1.0, p)
        if c.zeta == 0:
            terms.append(SpecFunResult(sign, base - mu_t * math.log(b)))
            continue
        if not b > c.zeta:
            raise DomainError(f"divergent integral: beta + q B = {b} <= zeta = {c.zeta}")
        # zeta^mu~ bt^mu~ = b^mu~ and 1/bt = zeta/b; this stays finite for tiny zeta
        log_psi_i = base - mu_t * math.log(b)
        h = hyp2f1(m_t, mu_t, mu_t, c.zeta / b)
        terms.append(h * SpecFunResult(sign, log_psi_i))
    return _signed_sum(terms)


def aber_kms_elementary(c, mod, fit):
    """The kappa-mu shadowed closed form after ``2F1(a, b; b; z) = (1 - z)^-a``.

    ``sum_i A psi p_i Gamma(mu~) (beta + q_i B)^(m~ - mu~) (beta + q_i B - zeta)^(-m~)``
    """
    terms = []
    for p, q in zip(fit.p, fit.q):
        if p == 0:
            continue
        b = c.beta + q * mod.b_coef
        lg = (_log_prefix(mod, c, p) + math.lgamma(c.mu_t) + (c.m_t - c.mu_t) * math.log(b)
              - c.m_t * math.log(b - c.zeta))
        terms.append(SpecFunResult(math.copysign(1.0, p), lg))
    return _signed_sum(terms)


def aber_closed(c, mod, fit):
    if isinstance(c, EtaMuCompact):
        return aber_eta_mu_closed(c, mod, fit)
    if isinstance(c, KmsCompact):
        return aber_kms_closed(c, mod, fit)
    raise TypeError(f"unsupported compact block {type(c).__name__}")


def conditional_error(mod, noise, gamma):
    """``A * Q(sqrt(B * gamma))`` with exact or fitted ``Q``."""
    g = np.asarray(gamma, dtype=float)
    if isinstance(noise, ExpApprox):
        return mod.a_coef * q_approx_sq(noise, mod.b_coef * g)
    if isinstance(noise, GgnModel):
        return mod.a_coef * q_exact(noise, np.sqrt(mod.b_coef * g))
    raise TypeError(f"noise must be GgnModel or ExpApprox, got {type(noise).__name__}")


def _density_logpdf(density, mean):
    if hasattr(density, "logpdf"):
        return density.logpdf, density.total_mean if mean is None else mean
    if mean is None:
        raise DomainError("a plain density callable needs its mean as a scale hint")

    def logpdf(g):
        with np.errstate(divide="ignore"):
            return np.log(density(g))
    return logpdf, mean


def aber_quadrature_many(density, cases, mean=None, epsabs=1e-12, epsrel=1e-10):
    """Integrate several ``(modulation, noise)`` averages against one density.

    The density is evaluated once per node for all cases.
    """
    logpdf, center = _density_logpdf(density, mean)

    def factor(g):
        return np.stack([conditional_error(mod, noise, g) for mod, noise in cases], axis=1)

    val, _ = quad_semi_infinite(logpdf, factor, center=center, epsabs=epsabs, epsrel=epsrel)
    return np.asarray(val)


def aber_quadrature(density, mod, noise, mean=None, epsabs=1e-12, epsrel=1e-10):
    """Numerically average ``A Q(sqrt(B g))`` over a fading density.

    Parameters
    ----------
    density : EtaMuCompact, KmsCompact or callable
        A compact block (its log-density is used directly) or a vectorized
        pdf callable, in which case ``mean`` must be given.
    mod : Modulation
    noise : GgnModel or ExpApprox
        Exact tail function or its exponential fit.

    Returns
    -------
    float

    Raises
    ------
    IntegrationError
        If the adaptive rule cannot meet the tolerance.
    """
    return float(aber_quadrature_many(density, [(mod, noise)], mean, epsabs, epsrel)[0])


def aber_monte_carlo(sampler, mod, noise, n, seed=DEFAULT_SEED, chunk=1_000_000):
    """Semi-analytic Monte Carlo estimate of the average error.

    Draws ``n`` fading SNRs and averages the conditional error probability.
    ``seed`` may be anything :func:`numpy.random.default_rng` accepts; equal
    seeds give bit-identical estimates.

    Returns
    -------
    (estimate, stderr)
    """
    n = int(n)
    if n < 10_000:
        raise DomainError(f"Monte Carlo needs n >= 1e4 draws, got {n}")
    rng = np.random.default_rng(seed)
    s1 = s2 = 0.0
    done = 0
    while done < n:
        k = min(chunk, n - done)
        v = conditional_error(mod, noise, sampler(rng, k))
        s1 += math.fsum(v)
        s2 += math.fsum(v * v)
        done += k
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / (n - 1)
    return mean, math.sqrt(var / n)


@dataclass(frozen=True)
class AberPoint:
    snr_db: float
    pe_closed: float
    pe_quad: float = None
    pe_mc: float = None
    mc_stderr: float = None
    rel_gap: float = None
    underflow: bool = False


@dataclass(frozen=True)
class SweepSpec:
    """One error-rate curve.

    ``snr_axis`` is ``"branch"`` (grid values are per-branch mean SNR) or
    ``"total"`` (grid values are the combined mean over all branches).
    ``channel.mean_snr`` is ignored; the grid supplies it.
    """

    channel: object
    modulation: object
    fit: ExpApprox
    snr_db: tuple
    stbc: StbcConfig = field(default_factory=StbcConfig)
    methods: tuple = ("closed",)
    mc_n: int = 100_000
    seed: int = DEFAULT_SEED
    snr_axis: str = "branch"

    def __post_init__(self):
        grid = tuple(float(v) for v in self.snr_db)
        if not grid or not all(math.isfinite(v) for v in grid):
            raise DomainError("SNR grid must be non-empty and finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise DomainError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_db", grid)
        methods = tuple(self.methods)
        if not methods or any(m not in METHODS for m in methods):
            raise DomainError(f"methods must be a non-empty subset of {METHODS}, got {methods}")
        object.__setattr__(self, "methods", methods)
        if self.snr_axis not in ("branch", "total"):
            raise DomainError(f"snr_axis must be 'branch' or 'total', got {self.snr_axis!r}")

    def branch_snr(self, snr_db):
        g = 10.0 ** (snr_db / 10.0)
        return g / self.stbc.branches if self.snr_axis == "total" else g


def evaluate_point(spec, index):
    """Evaluate grid point ``index`` of a sweep; pure given ``(spec, index)``."""
    snr_db = spec.snr_db[index]
    channel = spec.channel.with_mean_snr(spec.branch_snr(snr_db))
    c = compact(channel, spec.stbc)
    closed = aber_closed(c, spec.modulation, spec.fit)
    quad = mc = err = gap = None
    underflow = False
    if "quad" in spec.methods:
        quad = aber_quadrature(c, spec.modulation, spec.fit)
        if abs(quad) < UNDERFLOW:
            underflow = True
        else:
            gap = abs(closed - quad) / abs(quad)
    if "mc" in spec.methods:
        seq = np.random.SeedSequence([int(spec.seed), index])
        mc, err = aber_monte_carlo(sampler_for(channel, spec.stbc), spec.modulation, spec.fit,
                                   spec.mc_n, seed=seq)
    return AberPoint(snr_db, closed, quad, mc, err, gap, underflow)


def sweep(spec):
    """Evaluate a curve over its SNR grid; one :class:`AberPoint` per value.

    Points are independent: each Monte Carlo stream is keyed by
    ``(seed, index)``, so results do not depend on evaluation order.
    """
    points = []
    for i, snr_db in enumerate(spec.snr_db):
        try:
            points.append(evaluate_point(spec, i))
        except StbcAberError as exc:
            raise SweepPointError(snr_db, exc) from exc
    return points
