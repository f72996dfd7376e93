"""Finite, exactly computable models of ample étale groupoids on Cantor-type unit spaces."""

from .builders import (
    BratteliSpec,
    TransformationSpec,
    build,
    from_bratteli,
    from_transformation_action,
    group_bundle,
    load_spec,
    odometer,
    pair_groupoid,
    parse_spec,
    stationary_bratteli,
)
from .comparison import (
    SubequivalenceWitness,
    auto_compare,
    check_hypothesis,
    choose_epsilon,
    run_exhaustion_comparison,
    run_m_comparison,
    verify_witness,
)
from .convolution import GroupoidFunction, convolve, i_norm, involution, reduced_norm, regular_representation
from .errors import (
    DomainError,
    EstimationError,
    EtaleError,
    GenerationError,
    InvariantViolation,
    NumericError,
    PreconditionError,
    ResourceError,
    SearchExhausted,
    SpecError,
    UsageError,
    ValidationError,
)
from .groupoid import (
    Bisection,
    FiniteGroupoid,
    check_axioms,
    decompose_into_bisections,
    generated_subgroupoid,
    isotropy_and_quotient,
    theta_apply,
    theta_inverse,
)
from .growth import (
    ball_range,
    ball_source,
    check_source_surjection,
    compare_length_functions,
    estimate_ord,
    find_doubling_scale,
    folner_index,
    growth_function,
    m_parameter,
    orbital_ball,
    orbital_graph,
)
from .measure import (
    PointMeasure,
    banach_lower_density,
    banach_upper_density,
    empirical_invariance_bound,
    empirical_measure,
    extend_density_by_zero,
    invariance_defect,
    invariant_measures,
    verify_density_certificate,
)
from .unitspace import ClopenSet, DyadicRadius, UnitSpace, fatten, shrink

__version__ = "0.1.0"
