"""Subspace classification: geometry, error bounds, classifiers, transforms.

The library models classes as low-rank Gaussians (or general distributions
near subspaces), quantifies pairwise separability through principal
angles, and learns linear feature transforms that enlarge those angles.
"""

from .bounds import (
    BoundReport,
    ErrorFloor,
    ModerateRegimeConstants,
    RegimeViolation,
    bhattacharyya_K,
    bhattacharyya_bound,
    high_snr_bound,
    lemma1_constants,
    logdet_taylor_bounds,
    low_snr_bounds,
    moderate_snr_bound,
    trace_product_bounds,
)
from .data import (
    LabeledDataset,
    case_models,
    case_subspaces,
    gen_gmm_classes,
    gen_uniform_subspace_data,
    load_dataset,
    sample_gmm_dataset,
    sample_uniform_dataset,
    save_dataset,
    split,
)
from .geometry import (
    IntersectionSplit,
    PrincipalAngleSet,
    Subspace,
    ZERO_ANGLE_TOL,
    chordal_distance_sq,
    intersection_split,
    orthonormal_basis,
    principal_angles,
    product_sin_sq_nonzero,
)
from .gmm import (
    ErrorEstimate,
    GaussianClassModel,
    MapClassifier,
    covariance,
    empirical_map_error,
    map_classify,
    sample,
)
from .nsc import (
    CoefficientSampler,
    NscClassifier,
    constant_coefficients,
    empirical_nsc_error,
    er_kernel,
    fixed_energy_coefficients,
    gaussian_coefficients,
    nsc_bound_mc,
    nsc_classify,
    uniform_coefficients,
)
from .transforms import (
    LinearTransform,
    LrtConfig,
    TargetGram,
    TraitConfig,
    build_target_gram,
    closed_form_gram_fit,
    load_transform,
    random_projection,
    save_transform,
    train_lda,
    train_lrt,
    train_trait,
    trait_gradient,
    trait_objective,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
