"""Average bit-error rates of space-time block coded links over generalized
fading and generalized Gaussian noise, with closed forms cross-checked by
quadrature and Monte Carlo oracles."""

from .aber import (AberPoint, SweepSpec, aber_closed, aber_eta_mu_closed, aber_kms_closed,
                   aber_kms_elementary, aber_monte_carlo, aber_quadrature, sweep)
from .errors import (ConvergenceError, DegenerateChannelError, DomainError, FitError,
                     FitNotFoundError, IntegrationError, StbcAberError, SweepPointError)
from .fading import (EtaMuChannel, EtaMuFormat, KappaMuShadowedChannel, SpecialCase, StbcConfig,
                     compact, from_special_case, pdf_eta_mu, pdf_kms, sample_eta_mu, sample_kms)
from .ggn import (ExpApprox, GgnModel, Scaling, builtin_fit, q_approx_sq, q_exact,
                  read_fit_file, refit, write_fit_file)
from .modulation import Modulation, Scheme, modulation_params

__version__ = "0.1.0"

__all__ = [
    "AberPoint", "SweepSpec", "aber_closed", "aber_eta_mu_closed", "aber_kms_closed",
    "aber_kms_elementary", "aber_monte_carlo", "aber_quadrature", "sweep",
    "ConvergenceError", "DegenerateChannelError", "DomainError", "FitError", "FitNotFoundError",
    "IntegrationError", "StbcAberError", "SweepPointError",
    "EtaMuChannel", "EtaMuFormat", "KappaMuShadowedChannel", "SpecialCase", "StbcConfig",
    "compact", "from_special_case", "pdf_eta_mu", "pdf_kms", "sample_eta_mu", "sample_kms",
    "ExpApprox", "GgnModel", "Scaling", "builtin_fit", "q_approx_sq", "q_exact",
    "read_fit_file", "refit", "write_fit_file",
    "Modulation", "Scheme", "modulation_params",
]
