"""Numerical construction and verification of lacunary canonical products
that solve second-order linear ODEs with regular-growth coefficients.

Subpackage map:

- ``logdomain``      arbitrary-precision complex values in (log-magnitude, argument) form
- ``product``        the lacunary product f, its schedules, zeros and derivatives
- ``interpolation``  residue data, the rational series g, proximity-function quadrature
- ``coefficients``   the coefficient pair (A0, B0), the perturbation H, residual and contour checks
- ``growth``         max modulus, characteristic functions, order/indicator/witness scans
- ``checks`` / ``cli``  named verification procedures and the command-line front end
"""

from .errors import (
    CancellationError,
    ConfigError,
    DivergenceError,
    LacunaryError,
    NearPoleError,
    NearZeroError,
    PrecisionError,
    PrecisionInsufficient,
    QuadratureError,
    TailError,
    ZeroOnContourError,
)
from .logdomain import (
    DEFAULT_DPS,
    LOG_ONE,
    LOG_ZERO,
    LogComplex,
    log_add,
    log_add_ex,
    log_div,
    log_from_value,
    log_mul,
    log_neg,
    log_pow_int,
    to_value,
)
from .coefficients import (
    CoefficientSystem,
    HProduct,
    build_H,
    cauchy_ratio,
    eval_A0,
    eval_AB,
    eval_B0,
    make_system,
    residual,
)
from .growth import (
    GrowthReport,
    crg_witness,
    indicator_scan,
    log_max_modulus,
    log_max_modulus_bound,
    nevanlinna,
    order_scan,
    verify_thm2_asymptotics,
)
from .interpolation import (
    RationalInterpolant,
    check_summability,
    eval_g,
    proximity_m,
    residues_from_f,
)
from .product import (
    LacunaryConfig,
    config_from_blocks,
    config_from_dict,
    derivs_at_zero,
    eval_f,
    log_derivative,
    make_schedule,
    nearest_zero,
    zero_point,
    zeros,
)

__all__ = [
    "CancellationError",
    "ConfigError",
    "DivergenceError",
    "LacunaryError",
    "NearPoleError",
    "NearZeroError",
    "PrecisionError",
    "PrecisionInsufficient",
    "QuadratureError",
    "TailError",
    "ZeroOnContourError",
    "DEFAULT_DPS",
    "LOG_ONE",
    "LOG_ZERO",
    "LogComplex",
    "log_add",
    "log_add_ex",
    "log_div",
    "log_from_value",
    "log_mul",
    "log_neg",
    "log_pow_int",
    "to_value",
    "LacunaryConfig",
    "config_from_blocks",
    "config_from_dict",
    "make_schedule",
    "eval_f",
    "log_derivative",
    "derivs_at_zero",
    "zeros",
    "zero_point",
    "nearest_zero",
    "RationalInterpolant",
    "residues_from_f",
    "eval_g",
    "check_summability",
    "proximity_m",
    "CoefficientSystem",
    "HProduct",
    "build_H",
    "make_system",
    "eval_A0",
    "eval_B0",
    "eval_AB",
    "residual",
    "cauchy_ratio",
    "GrowthReport",
    "log_max_modulus",
    "log_max_modulus_bound",
    "nevanlinna",
    "order_scan",
    "crg_witness",
    "indicator_scan",
    "verify_thm2_asymptotics",
]

__version__ = "0.1.0"
