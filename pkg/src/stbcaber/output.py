"""CSV rendering for sweeps and density tables."""

import io

SWEEP_HEADER = ["snr_db", "pe_closed", "pe_quad", "pe_mc", "mc_stderr", "rel_gap"]


def fmt_float(v):
    """Scientific notation with 12 significant digits; empty for missing."""
    if v is None:
        return ""
    return f"{float(v):.11e}"


def _clamp(v):
    return None if v is None else min(max(v, 0.0), 1.0)


def sweep_csv(points, clamp=False):
    """Render sweep points; ``clamp`` limits the probability columns to [0, 1].

    The ``rel_gap`` column is always computed from unclamped values.
    """
    out = io.StringIO()
    out.write(",".join(SWEEP_HEADER) + "\n")
    for p in points:
        closed, quad, mc = p.pe_closed, p.pe_quad, p.pe_mc
        if clamp:
            closed, quad, mc = _clamp(closed), _clamp(quad), _clamp(mc)
        row = [fmt_float(p.snr_db), fmt_float(closed), fmt_float(quad), fmt_float(mc),
               fmt_float(p.mc_stderr), fmt_float(p.rel_gap)]
        out.write(",".join(row) + "\n")
    return out.getvalue()


def pdf_csv(gammas, values):
    out = io.StringIO()
    out.write("gamma,pdf\n")
    for g, f in zip(gammas, values):
        out.write(f"{fmt_float(g)},{fmt_float(f)}\n")
    return out.getvalue()
