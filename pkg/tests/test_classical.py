import itertools

import numpy as np
import pytest

from rqmkit.algebra import make_algebra, state_from_probabilities
from rqmkit.chain import (
    build_chain,
    check_stationarity,
    conditional_expectation,
    homogeneous_chain_spec,
    verify_markov,
)
from rqmkit.classical import (
    ClassicalRandomMap,
    FiniteSpace,
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
from rqmkit.errors import InvalidStateError, UnsupportedShapeError
from rqmkit.invariant import invariant_states, verify_invariant
from rqmkit.maps import identity_map
from rqmkit.rqm import induced_cp_map, induced_transition


def random_classical_map(x_size, y_size, z_size, seed):
    rng = np.random.default_rng(seed)
    nu = rng.random(z_size)
    nu = nu / nu.sum()
    table = rng.integers(0, y_size, size=(x_size, z_size))
    return ClassicalRandomMap(
        FiniteSpace(x_size), FiniteSpace(y_size), FiniteSpace(z_size), table, nu
    )


def test_xor_map_kernel():
    two = FiniteSpace(2)
    xor = ClassicalRandomMap(two, two, two, [[0, 1], [1, 0]], [0.5, 0.5])
    kernel = kernel_of_random_map(xor)
    assert np.array_equal(kernel.matrix, np.full((2, 2), 0.5))


def test_parameter_independent_map_gives_deterministic_kernel():
    two = FiniteSpace(2)
    ident = ClassicalRandomMap(two, two, two, [[0, 0], [1, 1]], [0.5, 0.5])
    assert np.array_equal(kernel_of_random_map(ident).matrix, np.eye(2))


def test_point_mass_weight_gives_deterministic_kernel():
    two = FiniteSpace(2)
    m = ClassicalRandomMap(two, two, two, [[0, 1], [1, 0]], [1.0, 0.0])
    assert np.array_equal(kernel_of_random_map(m).matrix, np.eye(2))


def test_kernel_validation_names_row():
    with pytest.raises(InvalidStateError, match="row 1"):
        make_kernel([[0.5, 0.5], [0.6, 0.6]])
    with pytest.raises(InvalidStateError, match="row 0"):
        make_kernel([[-0.1, 1.1], [0.5, 0.5]])


def test_map_of_identity_kernel():
    f = map_of_kernel(make_kernel(np.eye(3)))
    assert np.abs(f.mat - np.eye(3)).max() == 0.0
    assert f.kind == "cp_unital"


def test_kernel_map_roundtrip():
    rng = np.random.default_rng(0)
    raw = rng.random((3, 4))
    raw = raw / raw.sum(axis=1, keepdims=True)
    kernel = make_kernel(raw)
    back = kernel_of_map(map_of_kernel(kernel))
    assert np.abs(back.matrix - raw).max() <= 1e-12


def test_map_of_kernel_is_unital():
    raw = np.array([[0.2, 0.8], [0.7, 0.3]])
    f = map_of_kernel(make_kernel(raw))
    ones = f.domain.unit()
    assert (f(ones) - f.codomain.unit()).norm() <= 1e-12


def test_kernel_of_map_requires_commutative_algebras():
    with pytest.raises(UnsupportedShapeError):
        kernel_of_map(identity_map(make_algebra([2])))


# ---------------------------------------------------------------------------
# lifting into the quantum modules
# ---------------------------------------------------------------------------

def test_lifted_map_agrees_with_kernel_operator():
    two = FiniteSpace(2)
    xor = ClassicalRandomMap(two, two, two, [[0, 1], [1, 0]], [0.5, 0.5])
    lifted = lift_random_map(xor)
    expected = map_of_kernel(kernel_of_random_map(xor))
    assert np.abs(induced_cp_map(lifted).mat - expected.mat).max() <= 1e-12


def test_deterministic_map_lifts_to_composition_operator():
    two = FiniteSpace(2)
    m = ClassicalRandomMap(two, two, FiniteSpace(1), [[1], [0]], [1.0])
    lifted = lift_random_map(m)
    f = induced_cp_map(lifted)
    # f(delta_y)(x) = delta_y(phi(x)): the permutation matrix of the table
    assert np.abs(f.mat - np.array([[0, 1], [1, 0]])).max() <= 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_lift_agreement_random(seed):
    m = random_classical_map(3, 3, 4, seed)
    lifted = lift_random_map(m)
    expected = map_of_kernel(kernel_of_random_map(m))
    assert np.abs(induced_cp_map(lifted).mat - expected.mat).max() <= 1e-12


def test_classical_chapman_kolmogorov_via_tables():
    m1 = random_classical_map(3, 3, 2, 1)
    m2 = random_classical_map(3, 3, 3, 2)
    composed = diamond_random_maps(m1, m2)
    lhs = kernel_of_random_map(composed).matrix
    rhs = kernel_of_random_map(m1).matrix @ kernel_of_random_map(m2).matrix
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_lifted_transitions_compose_like_kernels():
    m1 = random_classical_map(2, 2, 2, 3)
    m2 = random_classical_map(2, 2, 2, 4)
    sigma = np.array([0.3, 0.7])
    classical = sigma @ kernel_of_random_map(m1).matrix @ kernel_of_random_map(m2).matrix
    state = state_from_probabilities(commutative_algebra(2), list(sigma))
    state = induced_transition(lift_random_map(m1))(state)
    state = induced_transition(lift_random_map(m2))(state)
    quantum = np.array([state.densities[i][0, 0].real for i in range(2)])
    assert np.abs(quantum - classical).max() <= 1e-10


def test_chain_marginal_basics():
    kernel = make_kernel([[0.0, 1.0], [1.0, 0.0]])
    sigma = [0.25, 0.75]
    assert np.array_equal(chain_marginal([kernel], sigma, 0), sigma)
    assert np.array_equal(chain_marginal([kernel], sigma, 1), [0.75, 0.25])


def test_chain_marginal_matches_path_enumeration():
    maps = [random_classical_map(3, 3, 3, s) for s in (5, 6, 7)]
    rng = np.random.default_rng(8)
    sigma = rng.random(3)
    sigma = sigma / sigma.sum()
    kernels = [kernel_of_random_map(m) for m in maps]
    fast = chain_marginal(kernels, sigma, 3)
    brute = enumerate_paths_marginal(maps, sigma, 3)
    assert np.abs(fast - brute).max() <= 1e-12


def test_quantum_chain_marginal_matches_classical():
    m = random_classical_map(3, 3, 2, 9)
    kernel = kernel_of_random_map(m)
    rng = np.random.default_rng(10)
    sigma = rng.random(3)
    sigma = sigma / sigma.sum()
    lifted = lift_random_map(m)
    state = state_from_probabilities(commutative_algebra(3), list(sigma))
    transition = induced_transition(lifted)
    for n in range(1, 4):
        state = transition(state)
        classical = chain_marginal([kernel] * n, sigma, n)
        quantum = np.array([state.densities[i][0, 0].real for i in range(3)])
        assert np.abs(quantum - classical).max() <= 1e-10


# ---------------------------------------------------------------------------
# kernel implementability at finite scale
# ---------------------------------------------------------------------------

def test_quarter_grid_kernels_round_trip_exactly():
    rows = [
        (0.0, 1.0),
        (0.25, 0.75),
        (0.5, 0.5),
        (0.75, 0.25),
        (1.0, 0.0),
    ]
    for r1, r2 in itertools.product(rows, rows):
        kernel = make_kernel([list(r1), list(r2)])
        witness = implement_kernel(kernel)
        back = kernel_of_random_map(witness)
        assert np.array_equal(back.matrix, kernel.matrix), (r1, r2)


@pytest.mark.parametrize("seed", range(5))
def test_random_kernels_round_trip(seed):
    rng = np.random.default_rng(seed)
    raw = rng.random((4, 3)) + 0.05
    raw = raw / raw.sum(axis=1, keepdims=True)
    kernel = make_kernel(raw)
    back = kernel_of_random_map(implement_kernel(kernel))
    assert np.abs(back.matrix - kernel.matrix).max() <= 1e-12


def test_implement_kernel_handles_deterministic_rows():
    kernel = make_kernel([[1.0, 0.0], [0.0, 1.0]])
    witness = implement_kernel(kernel)
    assert witness.z.size == 1
    assert np.array_equal(kernel_of_random_map(witness).matrix, np.eye(2))


# ---------------------------------------------------------------------------
# full classical regression of the quantum pipeline
# ---------------------------------------------------------------------------

def test_stationary_distribution_solver():
    raw = np.array([[0.9, 0.1], [0.5, 0.5]])
    pi = stationary_distribution(make_kernel(raw))
    assert np.abs(pi @ raw - pi).max() <= 1e-10
    assert pi.sum() == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(5))
def test_lifted_invariant_state_matches_classical_stationary(seed):
    rng = np.random.default_rng(seed)
    raw = rng.random((3, 3)) + 0.1
    raw = raw / raw.sum(axis=1, keepdims=True)
    kernel = make_kernel(raw)
    pi = stationary_distribution(kernel)
    lifted = lift_random_map(implement_kernel(kernel))
    report = invariant_states(lifted)
    diag = np.array([report.canonical.densities[i][0, 0].real for i in range(3)])
    assert np.abs(diag - pi).max() <= 1e-8


def test_lifted_chain_markov_and_stationarity():
    rng = np.random.default_rng(11)
    raw = rng.random((2, 2)) + 0.2
    raw = raw / raw.sum(axis=1, keepdims=True)
    kernel = make_kernel(raw)
    lifted = lift_random_map(implement_kernel(kernel))
    pi = stationary_distribution(kernel)
    init = state_from_probabilities(commutative_algebra(2), list(pi))
    chain = build_chain(homogeneous_chain_spec(lifted, init, 3))
    assert verify_markov(chain, 0).passed
    assert verify_markov(chain, 1).passed
    report = check_stationarity(chain, 2, 1)
    assert report.max_violation <= 1e-9
    assert verify_invariant(lifted, init) <= 1e-9


def test_classical_markov_property_pointwise():
    # (E_n f) after step n equals the nu-average of f after step n+1,
    # checked pointwise through the lifted conditional expectation.
    m = random_classical_map(3, 3, 2, 12)
    lifted = lift_random_map(m)
    rng = np.random.default_rng(13)
    sigma = rng.random(3)
    sigma = sigma / sigma.sum()
    init = state_from_probabilities(commutative_algebra(3), list(sigma))
    chain = build_chain(homogeneous_chain_spec(lifted, init, 2))
    cond = conditional_expectation(chain, 0)
    kernel = kernel_of_random_map(m)
    for y in range(3):
        f = commutative_algebra(3).basis_element(y, 0, 0)
        lifted_f = chain.step_maps[1](f)
        averaged = cond(lifted_f)
        # classical answer: E_0 f = K f as a function on X, composed with psi_0
        expected = chain.step_maps[0](
            commutative_algebra(3).unflatten(kernel.matrix[:, y])
        )
        assert (averaged - expected).norm() <= 1e-10
