"""Learning coefficients for deep networks.

Exact values come from :mod:`slct.linear`, :mod:`slct.relu` and
:mod:`slct.softmax`; :mod:`slct.oracle` checks them numerically.
"""
__version__ = "0.1.0"

from .lct import LCT, ZERO, combine_independent  # noqa: E402
from .linear import LinearArchitecture, LinearNetwork, lambda_for, lambda_linear, lambda_linear_with_bias, true_rank  # noqa: E402
from .relu import InputDomain, ReLUNetwork, lambda_relu  # noqa: E402
from .softmax import lambda_softmax_linear  # noqa: E402
from .errorfn import KEvaluator, coeff_sos_linear, k_relu, k_softmax  # noqa: E402
from .oracle import LCTEstimate, estimate_lct_laplace, estimate_lct_volume  # noqa: E402
from .selection import free_energy_penalty, rank_architectures  # noqa: E402

__all__ = [
    "LCT", "ZERO", "combine_independent",
    "LinearArchitecture", "LinearNetwork", "lambda_for", "lambda_linear", "lambda_linear_with_bias", "true_rank",
    "InputDomain", "ReLUNetwork", "lambda_relu", "lambda_softmax_linear",
    "KEvaluator", "coeff_sos_linear", "k_relu", "k_softmax",
    "LCTEstimate", "estimate_lct_volume", "estimate_lct_laplace",
    "free_energy_penalty", "rank_architectures",
]
