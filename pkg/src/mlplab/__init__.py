"""Numerical laboratory for multilinear square functions on BMO/BLO spaces.

Submodules: :mod:`mlplab.grid` (sampled functions on boxes),
:mod:`mlplab.spaces` (BMO/BLO/L^p estimators), :mod:`mlplab.kernels`
(kernel builtins and certification), :mod:`mlplab.operators` (the g, S,
and weighted square functions), :mod:`mlplab.lab` (test families and
theorem-level ratio experiments), :mod:`mlplab.cli` (batch front-end).
"""

from .grid import (
    AnalyticTail,
    Box,
    GridFunction,
    NonFiniteSampleError,
    evaluate_extended,
    integrate,
    make_grid_function,
    read_grid_function,
    write_grid_function,
)
from .kernels import KernelSpec, ProbePlan, builtin_kernel, eval_dilated, validate_kernel
from .lab import TestFamily, bmo_blo_ratio_study, generate, linf_blo_ratio_study, lp_sanity, refinement_study
from .operators import (
    ConeSpec,
    OperatorField,
    TGrid,
    area_integral,
    g_function,
    g_star_lambda,
    gt_field,
    split_g,
    tensor_fast_gt,
)
from .spaces import (
    Ball,
    BallFamily,
    blo_constant,
    bmo_seminorm,
    dyadic_family,
    lebesgue_norms,
    make_ball,
    mean_over,
    norm_report,
    oscillation_growth,
)

__version__ = "0.1.0"
