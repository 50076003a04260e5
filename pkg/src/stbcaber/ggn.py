"""Generalized Gaussian noise tail function and its exponential-sum fits.

Two scalings of the tail function are provided:

``PAPER``
    ``Lambda0**(2/a - 1) * Gamma(1/a, (Lambda0*x)**a) / (2 Gamma(1/a))``,
    the function the tabulated exponential fits approximate.
``NORMALIZED``
    ``Gamma(1/a, (Lambda0*x)**a) / (2 Gamma(1/a))``, the tail probability of
    unit-variance generalized Gaussian noise (equals 1/2 at the origin).

They coincide at ``a = 2``.
"""

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import DomainError, FitError, FitNotFoundError
from .lm import levenberg_marquardt
from .specfun import gamma_upper_reg, log_gamma_upper_reg

__all__ = [
    "Scaling", "GgnModel", "ExpApprox", "lambda0", "q_exact", "log_q_exact",
    "q_approx_sq", "builtin_fit", "refit", "default_grid", "max_abs_error",
    "TABLE_IV", "DEFAULT_SEED", "FIT_HEADER", "write_fit_file", "read_fit_file",
]

DEFAULT_SEED = 20170301
FIT_HEADER = ["a", "p1", "p2", "p3", "p4", "q1", "q2", "q3", "q4", "max_abs_err"]

# a -> (p1..p4, q1..q4)
TABLE_IV = {
    0.5: ((44.920, 126.460, 389.400, 96.540), (0.130, 2.311, 12.52, 0.629)),
    1.0: ((0.068, 0.202, 0.182, 0.255), (0.217, 2.185, 0.657, 12.640)),
    1.5: ((0.065, 0.149, 0.136, 0.125), (0.341, 0.712, 10.57, 1.945)),
    2.0: ((0.099, 0.157, 0.124, 0.119), (1.981, 0.534, 0.852, 10.268)),
    2.5: ((0.126, 1.104, -1.125, 0.442), (9.395, 0.833, 0.994, 1.292)),
}


class Scaling(enum.Enum):
    PAPER = "paper"
    NORMALIZED = "normalized"


def _check_shape(a):
    a = float(a)
    if not math.isfinite(a) or a <= 0:
        raise DomainError(f"noise shape a must be finite and positive, got {a}")
    return a


def lambda0(a):
    """``sqrt(Gamma(3/a) / Gamma(1/a))``."""
    a = _check_shape(a)
    return math.exp(0.5 * (math.lgamma(3.0 / a) - math.lgamma(1.0 / a)))


@dataclass(frozen=True)
class GgnModel:
    a: float
    scaling: Scaling = Scaling.PAPER

    def __post_init__(self):
        object.__setattr__(self, "a", _check_shape(self.a))
        object.__setattr__(self, "scaling", Scaling(self.scaling))

    @property
    def lambda0(self):
        return lambda0(self.a)

    @property
    def prefactor(self):
        """Value of the tail function at the origin."""
        if self.scaling is Scaling.NORMALIZED:
            return 0.5
        return 0.5 * self.lambda0 ** (2.0 / self.a - 1.0)


def _check_x(x):
    xa = np.asarray(x, dtype=float)
    if np.any(np.isnan(xa)) or np.any(xa < 0):
        raise DomainError("tail function argument must be non-negative")
    return xa


def q_exact(model, x):
    """Generalized Gaussian tail ``Q_a(x)`` for ``x >= 0`` (scalar or array)."""
    xa = _check_x(x)
    return model.prefactor * gamma_upper_reg(1.0 / model.a, (model.lambda0 * xa) ** model.a)


def log_q_exact(model, x):
    """Natural log of :func:`q_exact`; finite far beyond the underflow point."""
    xa = _check_x(x)
    return math.log(model.prefactor) + log_gamma_upper_reg(
        1.0 / model.a, (model.lambda0 * xa) ** model.a)


@dataclass(frozen=True)
class ExpApprox:
    """Four-term fit ``Q_a(sqrt(x)) ~ sum_i p_i exp(-q_i x)``.

    ``fit_domain`` is the interval of the squared argument the fit targets;
    ``max_abs_err`` is the worst absolute deviation from the exact target on
    the default grid (NaN when unknown).
    """

    a: float
    p: tuple
    q: tuple
    fit_domain: tuple = (0.0, 30.0)
    max_abs_err: float = float("nan")
    scaling: Scaling = field(default=Scaling.PAPER, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "a", _check_shape(self.a))
        p = tuple(float(v) for v in self.p)
        q = tuple(float(v) for v in self.q)
        if len(p) != 4 or len(q) != 4:
            raise DomainError("an exponential fit needs exactly four (p, q) pairs")
        if not all(math.isfinite(v) for v in p + q) or min(q) <= 0:
            raise DomainError(f"fit decay rates must be positive, got q={q}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "scaling", Scaling(self.scaling))

    @property
    def target(self):
        return GgnModel(self.a, self.scaling)


def q_approx_sq(fit, x):
    """Evaluate ``sum_i p_i exp(-q_i x)``, the fit of ``Q_a(sqrt(x))``.

    ``x`` is the *squared* argument. Values are returned raw and can dip
    slightly below zero for rows with negative amplitudes.
    """
    xa = _check_x(x)
    p = np.asarray(fit.p)
    q = np.asarray(fit.q)
    out = np.exp(-np.multiply.outer(xa, q)) @ p
    return float(out) if np.ndim(out) == 0 else out


def default_grid():
    """200 log-spaced squared arguments on [1e-3, 30], plus 0."""
    grid = np.concatenate([[0.0], np.logspace(-3.0, math.log10(30.0), 200)])
    grid[-1] = 30.0
    return grid


def max_abs_error(fit, grid=None):
    grid = default_grid() if grid is None else np.asarray(grid, dtype=float)
    return float(np.max(np.abs(q_approx_sq(fit, grid) - q_exact(fit.target, np.sqrt(grid)))))


@lru_cache(maxsize=None)
def _builtin(a):
    p, q = TABLE_IV[a]
    fit = ExpApprox(a, p, q)
    return replace(fit, max_abs_err=max_abs_error(fit))


def builtin_fit(a):
    """Return the tabulated fit for ``a`` in {0.5, 1, 1.5, 2, 2.5}.

    Raises
    ------
    FitNotFoundError
        For any other shape; use :func:`refit` instead.
    """
    a = _check_shape(a)
    if a not in TABLE_IV:
        raise FitNotFoundError(
            f"no tabulated fit for a={a:g} (available: {sorted(TABLE_IV)}); use refit()")
    return _builtin(a)


# --------------------------------------------------------------------------
# Refitting
# --------------------------------------------------------------------------

def _model_and_jacobian(theta, x):
    p = theta[:4]
    q = np.exp(theta[4:])
    e = np.exp(-np.outer(x, q))
    f = e @ p
    jac = np.empty((x.size, 8))
    jac[:, :4] = e
    jac[:, 4:] = -e * (x[:, None] * q[None, :] * p[None, :])
    return f, jac


def _amplitudes_for(q, x, y):
    e = np.exp(-np.outer(x, q))
    p, *_ = np.linalg.lstsq(e, y, rcond=None)
    return p


def _seed_from_neighbours(a):
    keys = sorted(TABLE_IV)
    if a < keys[0] or a > keys[-1]:
        return None
    hi = next(k for k in keys if k >= a)
    lo = max(k for k in keys if k <= a)
    if lo == hi:
        return None
    w = (a - lo) / (hi - lo)
    # pair terms by decay rate so the interpolation follows like with like
    rows = []
    for k in (lo, hi):
        p, q = TABLE_IV[k]
        order = np.argsort(q)
        rows.append((np.asarray(p)[order], np.asarray(q)[order]))
    logq = (1 - w) * np.log(rows[0][1]) + w * np.log(rows[1][1])
    return np.exp(logq)


def _starts(a, x, y, init, rng, n_starts):
    starts = []
    if init is not None:
        starts.append(np.concatenate([init.p, np.log(init.q)]))
    if a in TABLE_IV:
        p, q = TABLE_IV[a]
        starts.append(np.concatenate([p, np.log(q)]))
    q_mid = _seed_from_neighbours(a)
    if q_mid is not None:
        starts.append(np.concatenate([_amplitudes_for(q_mid, x, y), np.log(q_mid)]))
    while len(starts) < n_starts:
        q = np.sort(np.exp(rng.uniform(math.log(0.05), math.log(40.0), size=4)))
        starts.append(np.concatenate([_amplitudes_for(q, x, y), np.log(q)]))
    return starts


def _lm_fit(theta0, x, y, w):
    def fun(theta):
        f, jac = _model_and_jacobian(theta, x)
        return (f - y) * w, jac * w[:, None]

    with np.errstate(over="ignore", invalid="ignore"):
        return levenberg_marquardt(fun, theta0, max_iter=400)


def _polish_minimax(theta, x, y, rounds=25):
    """Lawson-style reweighting that trades L2 optimality for a lower max error."""
    best = theta
    f, _ = _model_and_jacobian(theta, x)
    best_err = np.max(np.abs(f - y))
    w = np.ones_like(x)
    for _ in range(rounds):
        f, _ = _model_and_jacobian(theta, x)
        r = np.abs(f - y)
        w = w * np.maximum(r, 1e-3 * r.max()) ** 0.5
        w = w / w.max()
        res = _lm_fit(theta, x, y, np.sqrt(w))
        if not np.all(np.isfinite(res.x)):
            break
        theta = res.x
        f, _ = _model_and_jacobian(theta, x)
        err = np.max(np.abs(f - y))
        if err < best_err:
            best, best_err = theta, err
    return best, best_err


def refit(a, grid=None, init=None, seed=DEFAULT_SEED, n_starts=16, scaling=Scaling.PAPER):
    """Fit ``Q_a(sqrt(x))`` with four decaying exponentials by Levenberg-Marquardt.

    Every start is run through LM on the unweighted squared error, then the
    best few are reweighted towards a minimax fit. The candidate with the
    smallest maximum absolute error on ``grid`` wins.

    Parameters
    ----------
    a : float
        Noise shape.
    grid : array_like, optional
        Squared-argument samples; at least 40 points covering [0, 30].
        Defaults to :func:`default_grid`.
    init : ExpApprox, optional
        Extra starting point (tried first).
    seed : int
        Seed of the random multistart; results are deterministic given
        ``(a, grid, init, seed)``.
    scaling : Scaling
        Which tail function to fit.

    Raises
    ------
    FitError
        When no start produces a finite, valid fit.
    """
    a = _check_shape(a)
    x = default_grid() if grid is None else np.sort(np.asarray(grid, dtype=float))
    if x.size < 40 or x[0] > 0 or x[-1] < 30.0 * (1 - 1e-12):
        raise DomainError("refit grid needs >= 40 points spanning at least [0, 30]")
    target = GgnModel(a, scaling)
    y = q_exact(target, np.sqrt(x))
    rng = np.random.default_rng(seed)
    ones = np.ones_like(x)

    candidates = []
    for theta0 in _starts(a, x, y, init, rng, n_starts):
        res = _lm_fit(theta0, x, y, ones)
        if np.all(np.isfinite(res.x)) and np.isfinite(res.cost):
            f, _ = _model_and_jacobian(res.x, x)
            candidates.append((float(np.max(np.abs(f - y))), res.cost, res.x, res.converged))
    if not candidates:
        raise FitError(f"no multistart produced a finite fit for a={a}")
    candidates.sort(key=lambda c: (c[0], c[1]))

    best_theta, best_err = candidates[0][2], candidates[0][0]
    for err0, _, theta, _ in candidates[:4]:
        theta_p, err_p = _polish_minimax(theta, x, y)
        if err_p < best_err:
            best_theta, best_err = theta_p, err_p

    fit = ExpApprox(a, tuple(best_theta[:4]), tuple(np.exp(best_theta[4:])),
                    fit_domain=(float(x[0]), float(x[-1])), scaling=scaling)
    fit = replace(fit, max_abs_err=max_abs_error(fit, x))
    if not any(c[3] for c in candidates):
        raise FitError(f"Levenberg-Marquardt did not converge for a={a}", best=fit)
    return fit


# --------------------------------------------------------------------------
# Fit files
# --------------------------------------------------------------------------

def _fmt(v):
    return f"{v:.12g}"


def write_fit_file(fits, dest=None):
    """Write fits as CSV text (header ``FIT_HEADER``); returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIT_HEADER)
    for fit in sorted(fits, key=lambda f: f.a):
        w.writerow([_fmt(fit.a), *map(_fmt, fit.p), *map(_fmt, fit.q), _fmt(fit.max_abs_err)])
    text = buf.getvalue()
    if dest is not None:
        Path(dest).write_text(text)
    return text


def read_fit_file(source, scaling=Scaling.PAPER):
    """Parse a fit file (path or text) into ``{a: ExpApprox}``."""
    text = Path(source).read_text() if not (isinstance(source, str) and "\n" in source) else source
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [h.strip() for h in rows[0]] != FIT_HEADER:
        raise DomainError(f"fit file header must be {','.join(FIT_HEADER)}")
    fits = {}
    for row in rows[1:]:
        if not row or not "".join(row).strip():
            continue
        if len(row) != len(FIT_HEADER):
            raise DomainError(f"malformed fit row: {row}")
        v = [float(s) for s in row]
        fits[v[0]] = ExpApprox(v[0], v[1:5], v[5:9], max_abs_err=v[9], scaling=scaling)
    return fits
