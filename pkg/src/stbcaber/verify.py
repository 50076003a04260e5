"""Acceptance suite: every closed form checked against independent oracles.

Run from the command line with ``stbc-aber verify`` or programmatically with
:func:`run_verify`. The report text contains no timings so that repeated
runs are byte-identical; elapsed times are kept on the result objects.
"""

import itertools
import math
import time
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats

from .aber import (SweepSpec, aber_closed, aber_kms_elementary, aber_monte_carlo,
                   aber_quadrature, aber_quadrature_many, sweep)
from .fading import (EtaMuChannel, EtaMuFormat, KappaMuShadowedChannel, StbcConfig, compact,
                     from_special_case, sample_eta_mu, sample_kms, sampler_for)
from .ggn import (TABLE_IV, GgnModel, Scaling, builtin_fit, lambda0, q_approx_sq, q_exact, refit)
from .modulation import modulation_params
from .output import sweep_csv
from .quadrature import gauss_kronrod, quad_semi_infinite

SNR_GRID_DB = tuple(range(0, 31, 5))
STBC_GRID = (StbcConfig(1, 1), StbcConfig(2, 2))
NOISE_GRID = (0.5, 1.0, 2.0)
ETA_GRID = tuple(itertools.product((0.1, 0.5, 0.9), (0.5, 1.0, 2.5)))
KMS_GRID = tuple(itertools.product((0.0, 1.0, 5.0), (0.5, 1.0, 2.0), (0.5, 2.0, 10.0)))

RAYLEIGH_BPSK_10 = 0.5 * (1.0 - math.sqrt(10.0 / 11.0))


def _mods():
    return (modulation_params("bpsk"), modulation_params("mqam-rect", 16))


@dataclass
class CheckResult:
    number: int
    title: str
    passed: bool
    detail: str
    elapsed: float = field(default=0.0, compare=False)

    def line(self):
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.number:2d}. {self.title}: {self.detail}"


class _GridResults:
    """Closed forms and oracles over the eta-mu and kappa-mu shadowed grids.

    Entries are keyed by ``(channel_params, nt, snr_db, a, mod_label)``; the
    STBC grid is square, so ``nt`` identifies it.
    """

    def __init__(self, family):
        self.family = family
        self.closed = {}
        self.quad = {}
        self.exact = {}
        self.elementary = {}
        self.seconds = 0.0
        self.exact_seconds = 0.0

    def channels(self):
        if self.family == "eta":
            return [(p, EtaMuChannel(EtaMuFormat.FORMAT_I, p[0], p[1], 1.0)) for p in ETA_GRID]
        return [(p, KappaMuShadowedChannel(p[0], p[1], p[2], 1.0)) for p in KMS_GRID]

    def blocks(self):
        for (params, ch), stbc, snr in itertools.product(self.channels(), STBC_GRID, SNR_GRID_DB):
            yield (params, stbc.nt, snr), compact(ch.with_mean_snr(10 ** (snr / 10)), stbc)

    def compute(self):
        t0 = time.perf_counter()
        mods = _mods()
        cases = [(a, m) for a in NOISE_GRID for m in mods]
        for key, c in self.blocks():
            quad = aber_quadrature_many(c, [(m, builtin_fit(a)) for a, m in cases])
            for (a, m), q in zip(cases, quad):
                k = key + (a, m.label)
                self.closed[k] = aber_closed(c, m, builtin_fit(a))
                self.quad[k] = float(q)
                if self.family == "kms":
                    self.elementary[k] = aber_kms_elementary(c, m, builtin_fit(a))
        self.seconds = time.perf_counter() - t0
        return self

    def compute_exact(self):
        t0 = time.perf_counter()
        mods = _mods()
        cases = [(a, m) for a in (1.0, 2.0) for m in mods]
        for key, c in self.blocks():
            vals = aber_quadrature_many(c, [(m, GgnModel(a, Scaling.PAPER)) for a, m in cases])
            for (a, m), v in zip(cases, vals):
                self.exact[key + (a, m.label)] = float(v)
        self.exact_seconds = time.perf_counter() - t0
        return self


class Verifier:
    """Criterion methods ``c1`` ... ``c11``; grid results are shared between them."""

    @cached_property
    def eta(self):
        return _GridResults("eta").compute()

    @cached_property
    def kms(self):
        return _GridResults("kms").compute()

    # -- criteria ----------------------------------------------------------

    def c1(self):
        g = self.eta
        worst = max(abs(g.closed[k] - g.quad[k]) / abs(g.quad[k]) for k in g.closed)
        ok = worst <= 1e-6 and g.seconds <= 60.0
        return ok, f"{len(g.closed)} points, worst relative gap {worst:.3e} (tol 1e-6), " \
                   f"runtime budget 60 s {'met' if g.seconds <= 60 else 'EXCEEDED'}"

    def c2(self):
        g = self.kms
        worst = max(abs(g.closed[k] - g.quad[k]) / abs(g.quad[k]) for k in g.closed)
        ok = worst <= 1e-6 and g.seconds <= 60.0
        return ok, f"{len(g.closed)} points, worst relative gap {worst:.3e} (tol 1e-6), " \
                   f"runtime budget 60 s {'met' if g.seconds <= 60 else 'EXCEEDED'}"

    def c3(self):
        g = self.kms
        worst = max(abs(g.closed[k] - g.elementary[k]) / abs(g.elementary[k]) for k in g.closed)
        return worst <= 1e-12, f"{len(g.closed)} points, worst relative gap {worst:.3e} (tol 1e-12)"

    def c4(self):
        ch = from_special_case("rayleigh", 10.0)
        c = compact(ch, StbcConfig(1, 1))
        bpsk = modulation_params("bpsk")
        closed = aber_closed(c, bpsk, builtin_fit(2.0))
        quad = aber_quadrature(c, bpsk, GgnModel(2.0, Scaling.NORMALIZED))
        e1 = abs(closed - RAYLEIGH_BPSK_10) / RAYLEIGH_BPSK_10
        e2 = abs(quad - RAYLEIGH_BPSK_10) / RAYLEIGH_BPSK_10
        return e1 <= 0.05 and e2 <= 1e-6, (
            f"closed {closed:.6f} ({e1:.2%} from {RAYLEIGH_BPSK_10:.6f}, tol 5%), "
            f"exact-Q quadrature rel err {e2:.2e} (tol 1e-6)")

    def c5(self):
        worst = 0.0
        fails = 0
        total = 0
        worst_key = None
        for g in (self.eta, self.kms):
            if not g.exact:
                g.compute_exact()
            for k, ref in g.exact.items():
                if ref < 1e-6:
                    continue
                total += 1
                e = abs(g.closed[k] - ref) / ref
                fails += e > 0.05
                if e > worst:
                    worst, worst_key = e, (g.family,) + k
        detail = f"{total} points with Pe >= 1e-6, {fails} beyond 5%, worst {worst:.2%}"
        if worst_key is not None and fails:
            detail += f" at {worst_key}"
        return fails == 0, detail

    def c6(self):
        parts = []
        ok = True
        for a, (p, _) in sorted(TABLE_IV.items()):
            target = 0.5 * lambda0(a) ** (2.0 / a - 1.0)
            e = abs(sum(p) - target) / target
            ok &= e <= 0.02
            parts.append(f"a={a:g}: {e:.2%}")
        v = q_approx_sq(builtin_fit(2.0), 1.0)
        exact = q_exact(GgnModel(2.0), 1.0)
        ok &= abs(v - 0.1586) <= 1e-3
        return ok, f"row sums vs Q(0) [{', '.join(parts)}] (tol 2%); fit(a=2, x=1) = {v:.4f} " \
                   f"vs exact {exact:.6f} (0.1586 +- 0.001)"

    def c7(self):
        t0 = time.perf_counter()
        parts = []
        ok = True
        for a in sorted(TABLE_IV):
            fit = refit(a)
            ref = builtin_fit(a).max_abs_err
            ok &= fit.max_abs_err <= ref
            parts.append(f"a={a:g}: {fit.max_abs_err:.3e} <= {ref:.3e}")
        elapsed = time.perf_counter() - t0
        ok &= elapsed <= 120.0
        return ok, f"{'; '.join(parts)}; runtime budget 120 s {'met' if elapsed <= 120 else 'EXCEEDED'}"

    def c8(self):
        worst_norm = worst_mean = 0.0
        n = 0
        for g in (self.eta, self.kms):
            for _, c in g.blocks():
                v, _ = quad_semi_infinite(
                    c.logpdf, lambda x: np.stack([np.ones_like(x), x], axis=1), center=c.total_mean)
                worst_norm = max(worst_norm, abs(v[0] - 1.0))
                worst_mean = max(worst_mean, abs(v[1] / c.total_mean - 1.0))
                n += 1
        conv = max(self_convolution_gap(ch) for ch in (
            EtaMuChannel(EtaMuFormat.FORMAT_I, 0.5, 1.0, 1.0),
            KappaMuShadowedChannel(1.0, 1.0, 2.0, 1.0)))
        ok = worst_norm <= 1e-9 and worst_mean <= 1e-8 and conv <= 1e-6
        return ok, (f"{n} densities: |norm-1| <= {worst_norm:.2e} (tol 1e-9), mean rel err "
                    f"<= {worst_mean:.2e} (tol 1e-8); L=2 convolution gap {conv:.2e} (tol 1e-6)")

    def c9(self):
        t0 = time.perf_counter()
        chi = []
        for ch, draw in (
                (EtaMuChannel(EtaMuFormat.FORMAT_I, 0.5, 1.0, 1.0), sample_eta_mu),
                (KappaMuShadowedChannel(1.0, 1.0, 2.0, 1.0), sample_kms)):
            rng = np.random.default_rng(np.random.SeedSequence([9, len(chi)]))
            samples = draw(ch, StbcConfig(2, 2), rng, 1_000_000)
            chi.append(chi_square_test(compact(ch, StbcConfig(2, 2)), samples))
        ok = all(p > 0.01 for _, p in chi)
        mc_parts = []
        for i, (ch, stbc, mod, noise) in enumerate(mc_spot_configs()):
            c = compact(ch, stbc)
            ref = aber_quadrature(c, mod, noise)
            est, se = aber_monte_carlo(sampler_for(ch, stbc), mod, noise, 1_000_000,
                                       seed=np.random.SeedSequence([99, i]))
            z = abs(est - ref) / se
            ok &= z <= 4.0
            mc_parts.append(f"{z:.2f}")
        elapsed = time.perf_counter() - t0
        ok &= elapsed <= 120.0
        return ok, (f"chi2 p-values {chi[0][1]:.3f} (eta-mu), {chi[1][1]:.3f} (kappa-mu shadowed) "
                    f"(need > 0.01); MC-vs-quadrature |z| = {', '.join(mc_parts)} (need <= 4); "
                    f"runtime budget 120 s {'met' if elapsed <= 120 else 'EXCEEDED'}")

    def c10(self):
        # format duality on the criterion-1 channels
        worst_dual = 0.0
        for (eta, mu), stbc, snr, a, mod in itertools.product(
                ETA_GRID, STBC_GRID, SNR_GRID_DB, NOISE_GRID, _mods()):
            g = 10 ** (snr / 10)
            c1 = compact(EtaMuChannel(EtaMuFormat.FORMAT_I, eta, mu, g), stbc)
            c2 = compact(EtaMuChannel(EtaMuFormat.FORMAT_II, (1 - eta) / (1 + eta), mu, g), stbc)
            v1 = aber_closed(c1, mod, builtin_fit(a))
            v2 = aber_closed(c2, mod, builtin_fit(a))
            worst_dual = max(worst_dual, abs(v1 - v2) / abs(v1))
        div_bad = mono_bad = 0
        for g in (self.eta, self.kms):
            curves = {}
            for (params, nt, snr, a, mod), v in g.closed.items():
                curves.setdefault((params, nt, a, mod), []).append((snr, v))
            for (params, nt, a, mod), pts in curves.items():
                vals = [v for _, v in sorted(pts)]
                mono_bad += sum(b >= x for x, b in zip(vals, vals[1:]))
                if nt == 2:
                    single = [v for _, v in sorted(curves[(params, 1, a, mod)])]
                    div_bad += sum(d > s for d, s in zip(vals, single))
        ok = worst_dual <= 1e-12 and div_bad == 0 and mono_bad == 0
        return ok, (f"format duality worst {worst_dual:.2e} (tol 1e-12); diversity violations "
                    f"{div_bad}; monotonicity violations {mono_bad}")

    def c11(self):
        spec = SweepSpec(
            channel=EtaMuChannel(EtaMuFormat.FORMAT_I, 0.5, 1.0, 1.0),
            modulation=modulation_params("bpsk"), fit=builtin_fit(2.0),
            snr_db=tuple(range(0, 31, 5)), stbc=StbcConfig(2, 2),
            methods=("closed", "quad", "mc"), mc_n=20_000, seed=7)
        a = sweep_csv(sweep(spec))
        b = sweep_csv(sweep(spec))
        r1 = format_report(run_verify(only=(4, 6)))
        r2 = format_report(run_verify(only=(4, 6)))
        ok = a == b and r1 == r2
        return ok, f"sweep CSV identical: {a == b}; verify report identical: {r1 == r2}"


CRITERIA = {
    1: ("eta-mu closed form vs quadrature", "c1"),
    2: ("kappa-mu shadowed closed form vs quadrature", "c2"),
    3: ("elementary reduction identity", "c3"),
    4: ("Rayleigh-BPSK anchor", "c4"),
    5: ("approximation fidelity vs exact Q (a in {1, 2})", "c5"),
    6: ("exponential-fit table self-consistency", "c6"),
    7: ("refit quality", "c7"),
    8: ("PDF health", "c8"),
    9: ("sampler validity", "c9"),
    10: ("structural properties", "c10"),
    11: ("determinism", "c11"),
}


def mc_spot_configs():
    """Five (channel, stbc, modulation, noise) spot checks for Monte Carlo."""
    return [
        (from_special_case("rayleigh", 10.0), StbcConfig(1, 1), modulation_params("bpsk"),
         GgnModel(2.0, Scaling.NORMALIZED)),
        (EtaMuChannel(EtaMuFormat.FORMAT_I, 0.5, 1.0, 10.0), StbcConfig(1, 1),
         modulation_params("bpsk"), builtin_fit(2.0)),
        (EtaMuChannel(EtaMuFormat.FORMAT_II, 0.3, 0.5, 10 ** 0.5), StbcConfig(2, 2),
         modulation_params("qpsk"), builtin_fit(1.0)),
        (KappaMuShadowedChannel(1.0, 1.0, 2.0, 10.0), StbcConfig(2, 2),
         modulation_params("mqam-rect", 16), builtin_fit(1.0)),
        (KappaMuShadowedChannel(5.0, 0.5, 0.5, 10 ** 1.5), StbcConfig(1, 1),
         modulation_params("mpsk", 8), builtin_fit(0.5)),
    ]


def self_convolution_gap(channel, points=None):
    """Max |f_L2(g) - (f_1 * f_1)(g)| over a grid, by direct numerical convolution."""
    one = compact(channel, StbcConfig(1, 1))
    two = compact(channel, StbcConfig(1, 2))
    if points is None:
        points = np.linspace(0.05, 8.0, 40) * two.total_mean
    worst = 0.0
    for g in points:
        conv, _ = gauss_kronrod(lambda u: one.pdf(u) * one.pdf(g - u), 0.0, float(g),
                                epsabs=1e-13, epsrel=1e-11)
        worst = max(worst, abs(float(two.pdf(g)) - conv))
    return worst


def chi_square_test(c, samples, bins=50):
    """Pearson chi-square of ``samples`` against the compact density ``c``.

    Bin edges are equiprobable under the density (interpolated from a fine
    CDF table); expected counts are then integrated exactly per bin.
    """
    mean = c.total_mean
    fine = np.concatenate([[0.0], np.geomspace(1e-6 * mean, 60.0 * mean, 3000)])
    cdf = np.concatenate([[0.0], np.cumsum(_bin_masses(c, fine))])
    edges = np.interp(np.arange(1, bins) / bins, cdf, fine)
    probs = _bin_masses(c, np.concatenate([[0.0], edges]))
    probs = np.append(probs, 1.0 - probs.sum())
    counts = np.histogram(samples, bins=np.concatenate([[0.0], edges, [np.inf]]))[0]
    expected = probs * samples.size
    stat = float(np.sum((counts - expected) ** 2 / expected))
    return stat, float(stats.chi2.sf(stat, bins - 1))


def _bin_masses(c, edges):
    return np.array([gauss_kronrod(c.pdf, lo, hi, epsabs=1e-15, epsrel=1e-11)[0]
                     for lo, hi in zip(edges[:-1], edges[1:])])


def run_verify(only=None, progress=None):
    """Run the acceptance criteria; returns a list of :class:`CheckResult`."""
    v = Verifier()
    out = []
    for num, (title, meth) in CRITERIA.items():
        if only is not None and num not in only:
            continue
        t0 = time.perf_counter()
        try:
            passed, detail = getattr(v, meth)()
        except Exception as exc:  # a crash is reported as a failed check
            passed, detail = False, f"error: {type(exc).__name__}: {exc}"
        res = CheckResult(num, title, bool(passed), detail, time.perf_counter() - t0)
        out.append(res)
        if progress is not None:
            progress(res)
    return out


def format_report(results):
    lines = [r.line() for r in results]
    npass = sum(r.passed for r in results)
    lines.append(f"{npass}/{len(results)} criteria passed")
    return "\n".join(lines) + "\n"
