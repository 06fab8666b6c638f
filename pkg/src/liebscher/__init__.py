"""Asymmetric copulas from products of transformed base copulas.

Sampling, closed-form dependence measures for the comonotonic-based family,
rank statistics and likelihood-free inference.
"""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # pragma: no cover
    __version__ = "0.0.0"

from .abc import AbcConfig, AbcResult, CLModel, LiebscherModel, PriorSpec, posterior_summaries, relative_errors, run_abc
from .analytics import (
    CLParams,
    DependenceReport,
    dependence_report,
    eval_cl,
    singular_component,
    tail_coeffs_general,
)
from .core import (
    BaseCopula,
    Clayton,
    Comonotonic,
    GumbelBarnett,
    Independence,
    LiebscherSpec,
    eval_base,
    eval_liebscher,
    gumbel_barnett_fused_theta,
    iterative_to_product,
    liebscher_spec,
    product_to_iterative,
    stick_breaking_exponents,
)
from .empirical import (
    cvm_asymmetry_pvalue,
    hilbert_distance,
    kendall_distribution,
    kendall_tau,
    pseudo_observations,
    spearman_rho,
)
from .errors import LiebscherError
from .mle import CIParams, ci_density, fit_mle
from .rng import Seed
from .sampler import NoiseSpec, Sample, sample_cl, sample_cl_noisy, sample_liebscher

__all__ = [name for name in dir() if not name.startswith("_")]
