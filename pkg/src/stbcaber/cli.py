"""Command-line front end: ``stbc-aber {aber,sweep,fit,pdf,verify}``.

Settings come from flags and, optionally, a ``--config`` file of flat
``key=value`` lines (``#`` starts a comment). Flags override the file. Keys
are the long flag names with dashes or underscores, e.g. ``noise_a=2``.
``--config`` also accepts the bundled preset names ``fig1`` ... ``fig4``.

Exit status is 0 on success, 1 on numerical failure or failed checks and 2
on usage errors.
"""

import argparse
import math
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from .aber import SweepSpec, evaluate_point, sweep
from .errors import DomainError, FitNotFoundError, StbcAberError
from .fading import channel_from_config, compact
from .ggn import (TABLE_IV, Scaling, builtin_fit, read_fit_file, refit, write_fit_file)
from .modulation import Scheme, parse_modulation
from .output import pdf_csv, sweep_csv
from .verify import format_report, run_verify

PRESETS = ("fig1", "fig2", "fig3", "fig4")

# config key -> value type
_KEYS = {
    "channel": str, "eta": float, "lambda": float, "kappa": float, "mu": float, "m": float,
    "q": float, "nt": int, "nr": int, "mod": str, "mod_order": int, "noise_a": str,
    "scaling": str, "fit_file": str, "snr_db": str, "snr_axis": str, "method": str,
    "mc_n": int, "seed": int, "clamp": bool, "out": str, "mean_snr_db": float,
    "gamma_max": float, "points": int, "a": str, "only": str, "builtin": bool,
}

_DEFAULTS = {
    "channel": "eta-mu", "nt": 1, "nr": 1, "mod": "bpsk", "noise_a": "2", "scaling": "paper",
    "snr_db": "0:30:5", "snr_axis": "branch", "method": "closed,quad", "mc_n": 100_000,
    "seed": 20170301, "clamp": False, "points": 200,
}


class UsageError(Exception):
    pass


def _add_common(p):
    g = p.add_argument_group("channel")
    g.add_argument("--channel", help="eta-mu, lambda-mu, kappa-mu-shadowed or a special case "
                   "(nakagami, rayleigh, rician, rician-shadowed, kappa-mu, one-sided-gaussian, hoyt)")
    g.add_argument("--eta", type=float)
    g.add_argument("--lambda", dest="lambda", type=float)
    g.add_argument("--kappa", type=float)
    g.add_argument("--mu", type=float)
    g.add_argument("--m", type=float)
    g.add_argument("--q", type=float, help="Hoyt q parameter")
    g.add_argument("--nt", type=int)
    g.add_argument("--nr", type=int)
    g = p.add_argument_group("link")
    g.add_argument("--mod", help="scheme, optionally with order (mqam-rect:16); comma list for several curves")
    g.add_argument("--mod-order", type=int)
    g.add_argument("--noise-a", help="noise shape a; comma list for several curves")
    g.add_argument("--scaling", choices=["paper", "normalized"])
    g.add_argument("--fit-file")
    g.add_argument("--snr-db", help="START:STOP:STEP for sweeps, a single value for aber/pdf")
    g.add_argument("--snr-axis", choices=["branch", "total"])
    g.add_argument("--method", help="comma list from closed,quad,mc")
    g.add_argument("--mc-n", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--clamp", action="store_true", default=None,
                   help="clamp reported probabilities to [0, 1]")
    p.add_argument("--out", help="output file (or directory for multi-curve sweeps)")
    p.add_argument("--config", help="key=value config file or preset name (fig1..fig4)")


def build_parser():
    parser = argparse.ArgumentParser(prog="stbc-aber", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (("aber", "average error probability at one SNR"),
                       ("sweep", "error-rate curve(s) over an SNR grid, as CSV")):
        _add_common(sub.add_parser(name, help=text))
    p = sub.add_parser("pdf", help="combined fading density table (gamma, pdf)")
    _add_common(p)
    p.add_argument("--gamma-max", type=float, help="largest gamma (default 5 x combined mean)")
    p.add_argument("--points", type=int)
    p = sub.add_parser("fit", help="refit the exponential approximation and write a fit file")
    p.add_argument("--a", help="comma list of noise shapes")
    p.add_argument("--builtin", action="store_true", default=None,
                   help="export the tabulated rows instead of refitting")
    p.add_argument("--scaling", choices=["paper", "normalized"])
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--config")
    p = sub.add_parser("verify", help="run the acceptance suite")
    p.add_argument("--only", help="comma list of criterion numbers")
    p.add_argument("--out", help="also write the report here")
    return parser


# --------------------------------------------------------------------------
# Settings
# --------------------------------------------------------------------------

def parse_config_text(text, origin="<config>"):
    cfg = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lower().replace("-", "_")
        if not sep or not key:
            raise UsageError(f"{origin}:{lineno}: expected key=value, got {raw.strip()!r}")
        if key not in _KEYS:
            raise UsageError(f"{origin}:{lineno}: unknown key {key!r}")
        cfg[key] = _coerce(key, value.strip(), f"{origin}:{lineno}")
    return cfg


def _coerce(key, value, where):
    kind = _KEYS[key]
    try:
        if kind is bool:
            if value.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(value)
            return value.lower() in ("1", "true", "yes", "on")
        return kind(value)
    except ValueError:
        raise UsageError(f"{where}: bad value {value!r} for {key}") from None


def load_config(ref):
    path = Path(ref)
    if path.is_file():
        return parse_config_text(path.read_text(), str(path))
    if ref in PRESETS:
        text = resources.files("stbcaber").joinpath("presets", f"{ref}.cfg").read_text()
        return parse_config_text(text, f"preset {ref}")
    raise UsageError(f"config {ref!r} is neither a file nor a preset ({', '.join(PRESETS)})")


def merge_settings(args):
    settings = dict(_DEFAULTS)
    if getattr(args, "config", None):
        settings.update(load_config(args.config))
    for k, v in vars(args).items():
        if k in _KEYS and v is not None:
            settings[k] = v
    return settings


def parse_grid(text):
    """``START:STOP:STEP`` (inclusive stop) -> tuple of dB values."""
    parts = text.split(":")
    try:
        vals = [float(v) for v in parts]
    except ValueError:
        raise UsageError(f"bad SNR grid {text!r}") from None
    if len(vals) == 1:
        return (vals[0],)
    if len(vals) != 3:
        raise UsageError(f"SNR grid must be START:STOP:STEP, got {text!r}")
    start, stop, step = vals
    if not step > 0 or stop < start or not all(map(math.isfinite, vals)):
        raise UsageError(f"SNR grid needs start <= stop and step > 0, got {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9))
    return tuple(round(start + k * step, 12) for k in range(n + 1))


def _split(text):
    return [s.strip() for s in str(text).split(",") if s.strip()]


def resolve_modulations(s):
    mods = []
    for item in _split(s["mod"]):
        order = None
        if ":" not in item and Scheme(item.lower()).m_ary:
            order = s.get("mod_order")
        mods.append(parse_modulation(item, order))
    if not mods:
        raise UsageError("no modulation given")
    return mods


def resolve_fit(a, s, _cache={}):
    """Fit source order: fit file, tabulated row (paper scaling), fresh refit."""
    scaling = Scaling(s["scaling"])
    if s.get("fit_file"):
        key = (s["fit_file"], scaling)
        if key not in _cache:
            _cache[key] = read_fit_file(s["fit_file"], scaling)
        fits = _cache[key]
        if a not in fits:
            raise FitNotFoundError(f"fit file {s['fit_file']} has no row for a={a:g}")
        return fits[a]
    if scaling is Scaling.PAPER and a in TABLE_IV:
        return builtin_fit(a)
    return refit(a, scaling=scaling, seed=s["seed"])


def resolve_channel(s):
    cfg = {k: s.get(k) for k in ("channel", "eta", "lambda", "kappa", "mu", "m", "q", "nt", "nr")}
    return channel_from_config(cfg, mean_snr=1.0)


def _methods(s):
    methods = tuple(_split(s["method"]))
    if not methods:
        raise UsageError("at least one method is required")
    if "closed" not in methods:
        methods = ("closed",) + methods
    return methods


def _shapes(text):
    try:
        return [float(v) for v in _split(text)]
    except ValueError:
        raise UsageError(f"bad noise shape list {text!r}") from None


def single_snr(s):
    """The one SNR (dB) used by ``aber`` and ``pdf``.

    An explicit ``--snr-db`` wins, then ``mean_snr_db`` from a config file.
    """
    if "snr_db" in s["_explicit"] or s.get("mean_snr_db") is None:
        grid = parse_grid(s["snr_db"])
        if len(grid) != 1:
            raise UsageError("this command needs a single --snr-db value")
        return grid[0]
    return s["mean_snr_db"]


def build_specs(s, single_point=False):
    """Return ``[(name, SweepSpec)]``, one per (modulation, noise shape) pair."""
    channel, stbc = resolve_channel(s)
    compact(channel, stbc)  # reject degenerate channels before any work
    mods = resolve_modulations(s)
    shapes = _shapes(s["noise_a"])
    if not shapes:
        raise UsageError("no noise shape given")
    grid = (single_snr(s),) if single_point else parse_grid(s["snr_db"])
    specs = []
    for mod in mods:
        for a in shapes:
            spec = SweepSpec(channel=channel, modulation=mod, fit=resolve_fit(a, s), snr_db=grid,
                             stbc=stbc, methods=_methods(s), mc_n=s["mc_n"], seed=s["seed"],
                             snr_axis=s["snr_axis"])
            specs.append((f"{mod.label}_a{a:g}", spec))
    return specs


# --------------------------------------------------------------------------
# Commands
# --------------------------------------------------------------------------

def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)


def cmd_sweep(s):
    specs = build_specs(s)
    if len(specs) > 1 and not s.get("out"):
        raise UsageError("several curves requested (comma lists in mod/noise_a): pass --out DIR")
    results = [(name, sweep(spec)) for name, spec in specs]
    if len(specs) == 1:
        _emit(sweep_csv(results[0][1], clamp=s["clamp"]), s.get("out"))
        return 0
    outdir = Path(s["out"])
    outdir.mkdir(parents=True, exist_ok=True)
    for name, points in results:
        (outdir / f"{name}.csv").write_text(sweep_csv(points, clamp=s["clamp"]))
    return 0


def cmd_aber(s):
    specs = build_specs(s, single_point=True)
    if len(specs) != 1:
        raise UsageError("aber evaluates one modulation and one noise shape")
    _emit(sweep_csv([evaluate_point(specs[0][1], 0)], clamp=s["clamp"]), s.get("out"))
    return 0


def cmd_pdf(s):
    channel, stbc = resolve_channel(s)
    mean = 10.0 ** (single_snr(s) / 10.0)
    if s["snr_axis"] == "total":
        mean /= stbc.branches
    c = compact(channel.with_mean_snr(mean), stbc)
    points = s["points"]
    if points < 2:
        raise UsageError("--points must be at least 2")
    gmax = s.get("gamma_max") or 5.0 * c.total_mean
    if not gmax > 0:
        raise UsageError("--gamma-max must be positive")
    gammas = np.linspace(0.0, gmax, points + 1)[1:]
    _emit(pdf_csv(gammas, c.pdf(gammas)), s.get("out"))
    return 0


def cmd_fit(s):
    scaling = Scaling(s["scaling"])
    if s.get("builtin"):
        if scaling is not Scaling.PAPER:
            raise UsageError("tabulated rows exist only for the paper scaling")
        shapes = _shapes(s["a"]) if s.get("a") else sorted(TABLE_IV)
        fits = [builtin_fit(a) for a in shapes]
    else:
        if not s.get("a"):
            raise UsageError("fit needs --a (comma list of noise shapes) or --builtin")
        fits = [refit(a, scaling=scaling, seed=s["seed"]) for a in _shapes(s["a"])]
    _emit(write_fit_file(fits), s.get("out"))
    return 0


def cmd_verify(s):
    only = None
    if s.get("only"):
        try:
            only = tuple(int(v) for v in _split(s["only"]))
        except ValueError:
            raise UsageError(f"bad --only list {s['only']!r}") from None
    results = run_verify(only=only, progress=lambda r: print(r.line(), flush=True))
    report = format_report(results)
    print(report.splitlines()[-1])
    if s.get("out"):
        _emit(report, s["out"])
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"aber": cmd_aber, "sweep": cmd_sweep, "pdf": cmd_pdf, "fit": cmd_fit,
            "verify": cmd_verify}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = merge_settings(args)
        settings["_explicit"] = {k for k, v in vars(args).items() if v is not None}
        return COMMANDS[args.command](settings)
    except UsageError as exc:
        print(f"stbc-aber: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"stbc-aber: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FitNotFoundError) as exc:
        print(f"stbc-aber: invalid configuration: {exc}", file=sys.stderr)
        return 2
    except StbcAberError as exc:
        print(f"stbc-aber: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # unknown scheme names and malformed modulation orders
        print(f"stbc-aber: invalid configuration: {exc}", file=sys.stderr)
        return 2
