"""Weighted-HOSVD tensor completion for deterministic sampling patterns,
with total-variation refinement and recovery-bound evaluation."""

from .bounds import (
    BoundReport,
    ErrorMetrics,
    bound_report,
    bound_theorem1,
    bound_theorem2_terms,
    metrics,
    mode_spectrum,
)
from .exceptions import ConvergenceError
from .lowrank import (
    HosvdFactors,
    NoiseModel,
    add_noise,
    generate_tucker,
    hosvd,
    hosvd_p,
    hosvd_truncate,
    truncated_left_singular,
    weighted_hosvd,
)
from .masks import gen_mask_nonuniform, gen_mask_uniform
from .tensor import (
    fold,
    frobenius_norm,
    hadamard,
    inf_norm,
    khatri_rao,
    mode_product,
    outer,
    pointwise_pow,
    unfold,
)
from .tv import CompletionReport, TvConfig, forward_diff, laplacian, shrink, tv_complete, tv_norm
from .weights import Rank1Weight, SamplingPattern, als_sweep, estimate_weight

__version__ = "0.1.0"
