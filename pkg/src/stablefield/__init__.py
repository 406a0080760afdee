"""Heavy-tailed random fields on finitely generated abelian groups.

Subpackages split along the pipeline: exact group/lattice algebra
(`lattice`), the polytope geometry of box counts (`geometry`), field
simulation and maxima (`simulate`), point-process limits and Laplace
functionals (`pointprocess`), and a batch driver (`cli`).
"""

from .lattice import (
    GroupSpec,
    HElement,
    MathDomainError,
    QuotientStructure,
    analyze_quotient,
    coset_element,
    count_in_box,
    element_coords,
    element_from_coords,
    enumerate_ball,
    group_add,
    group_inverse,
    quotient_norm,
    rebase_structure,
    smith_normal_form,
)
from .geometry import (
    build_body,
    build_fiber_volume,
    fiber_feasible,
    fiber_volume,
    geometry_report,
    integral_fiber_volume,
    kappa0_empirical,
    m_profile,
    membership_grid,
    sample_in_body,
    scaling_constant,
)
from .simulate import (
    FieldSample,
    KernelModel,
    fit_frechet_scale,
    ks_distance_frechet,
    moving_average_model,
    partial_maxima,
    sample_field,
    sample_maxima,
    sample_symmetric_stable,
    stable_tail_constant,
    substream,
)
from .pointprocess import (
    GeometryContext,
    LimitMeasureSample,
    TestFunction,
    WeightedPointMeasure,
    build_normalized_measure,
    convergence_report,
    expected_limit_mass,
    geometry_context,
    laplace_empirical,
    laplace_theoretical,
    sample_limit_measure,
    scaling_diagnostics,
)

__version__ = "0.1.0"

__all__ = [
    "GroupSpec",
    "HElement",
    "MathDomainError",
    "QuotientStructure",
    "analyze_quotient",
    "coset_element",
    "count_in_box",
    "element_coords",
    "element_from_coords",
    "enumerate_ball",
    "group_add",
    "group_inverse",
    "quotient_norm",
    "rebase_structure",
    "smith_normal_form",
    "build_body",
    "build_fiber_volume",
    "fiber_feasible",
    "fiber_volume",
    "geometry_report",
    "integral_fiber_volume",
    "kappa0_empirical",
    "m_profile",
    "membership_grid",
    "sample_in_body",
    "scaling_constant",
    "FieldSample",
    "KernelModel",
    "fit_frechet_scale",
    "ks_distance_frechet",
    "moving_average_model",
    "partial_maxima",
    "sample_field",
    "sample_maxima",
    "sample_symmetric_stable",
    "stable_tail_constant",
    "substream",
    "GeometryContext",
    "LimitMeasureSample",
    "TestFunction",
    "WeightedPointMeasure",
    "build_normalized_measure",
    "convergence_report",
    "expected_limit_mass",
    "geometry_context",
    "laplace_empirical",
    "laplace_theoretical",
    "sample_limit_measure",
    "scaling_diagnostics",
    "__version__",
]
