"""rqmkit: random quantum maps between finite-dimensional C*-algebras.

Build multi-matrix algebras and quantum families of maps, derive the unital
CP maps and transitions they induce, synthesize implementations of CP maps,
construct truncated quantum Markov chains, solve for invariant states, and
cross-check everything against its finite classical counterpart.
"""

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    State,
    direct_sum_algebra,
    direct_sum_element,
    is_hermitian_element,
    is_positive_element,
    make_algebra,
    make_state,
    maximally_mixed,
    state_from_probabilities,
    tensor_algebra,
    tensor_element,
    tensor_many,
    tensor_state,
    trivial_algebra,
)
from .chain import (
    ChainSpec,
    MarkovReport,
    SemiCommutativityReport,
    StationarityReport,
    TruncatedChain,
    build_chain,
    chain_spec,
    check_semi_commutative,
    check_stationarity,
    conditional_expectation,
    homogeneous_chain_spec,
    moment,
    verify_markov,
)
from .classical import (
    ClassicalRandomMap,
    FiniteSpace,
    Kernel,
    chain_marginal,
    commutative_algebra,
    diamond_random_maps,
    enumerate_paths_marginal,
    implement_kernel,
    kernel_of_map,
    kernel_of_random_map,
    lift_random_map,
    make_kernel,
    map_of_kernel,
    stationary_distribution,
)
from .errors import (
    AlgebraMismatchError,
    DepthError,
    DimensionCapError,
    InvalidAlgebraError,
    InvalidStateError,
    NotAMorphismError,
    NotCompletelyPositiveError,
    NotUnitalError,
    NumericalFailureError,
    RqmError,
    SpecFormatError,
    UnsupportedShapeError,
)
from .invariant import (
    InvariantReport,
    SkewReport,
    hermitian_basis,
    invariant_states,
    skew_apply,
    transition_matrix,
    verify_invariant,
    verify_skew_invariance,
)
from .maps import (
    LinearMap,
    StinespringDilation,
    Transition,
    adjoint_transition,
    choi_blocks,
    compose,
    direct_sum_map,
    identity_map,
    leg_permutation_map,
    linear_map_from_images,
    make_morphism,
    representation_multiplicities,
    stinespring_dilate,
    tensor_map,
    unit_embedding,
    validate_cp_unital,
    validate_morphism,
)
from .rqm import (
    DilationImplementation,
    QuantumFamily,
    RandomQuantumMap,
    diamond,
    implement_composition,
    implement_convex_combination,
    implement_direct_sum,
    implement_finite_family,
    implement_from_dilation,
    implement_morphism,
    implement_state,
    implement_tensor,
    induced_cp_map,
    induced_transition,
    make_family,
    partial_eval_map,
    trivial_family,
    trivial_rqm,
)

__version__ = "0.1.0"
