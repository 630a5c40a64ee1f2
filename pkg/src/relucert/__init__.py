"""Sparse ReLU network constructions with certificates, plus rate experiments."""

from .network import (
    NetworkFormatError,
    NetworkStats,
    SparseLayer,
    SparseNetwork,
    clip_unit,
    count_active,
    deserialize,
    evaluate,
    evaluate_with_flags,
    layer_from_dense,
    layer_from_triplets,
    remove_inactive,
    serialize,
)
from .calculus import compose, enlarge, identity_network, parallelize, scale_output, sync_depth
from .certificates import (
    CertificateReport,
    ConstructionCertificate,
    check_certificate,
    measure_sup_error,
    standard_grid,
)
from .primitives import (
    RefusalError,
    build_hat,
    build_mon,
    build_mult,
    build_mult_r,
    hat_grid,
    hat_products_ref,
    multi_indices,
    r_wave_ref,
    tri_wave_ref,
)
from .taylor import HolderTarget, eval_monomial_poly, local_taylor_ref, partition_of_unity, taylor_poly
from .holder import build_holder_net, holder_depth, holder_error_bound, largest_grid_M
from .composite import (
    ComponentSpec,
    CompositionSpec,
    build_composite_net,
    composition_error_bound,
    rescale_components,
)
from .rates import (
    ConditionReport,
    RateProfile,
    check_architecture_conditions,
    effective_smoothness,
    entropy_bound,
    entropy_bound_refined,
    rate_phi,
    rate_profile,
    tau_bound,
)
from .regression import (
    FitHyper,
    FitResult,
    RegressionDataset,
    SlopeReport,
    delta_proxy,
    empirical_risk,
    estimate_prediction_risk,
    fit_erm,
    fit_result_from_net,
    loglog_slope,
    rate_experiment,
    sample_dataset,
)
from .wavelets import (
    CounterexampleFn,
    WaveletSpec,
    balanced_level,
    build_counterexample,
    counterexample_floor,
    empirical_coeff,
    fit_wavelet_truncated,
    haar,
    lattice_coefficient,
    lattice_size,
    level_index_set,
    psi_lambda,
    quad_coeff,
    risk_floor,
    wavelet_estimate,
)
from .targets import named_target, target_names

__version__ = "0.1.0"
