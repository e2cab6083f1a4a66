import numpy as np
import pytest

from rqmkit.algebra import (
    make_algebra,
    make_state,
    tensor_element,
    tensor_state,
)
from rqmkit.chain import (
    build_chain,
    chain_spec,
    check_semi_commutative,
    check_stationarity,
    conditional_expectation,
    homogeneous_chain_spec,
    moment,
    verify_markov,
)
from rqmkit.errors import DepthError, DimensionCapError
from rqmkit.invariant import invariant_states
from rqmkit.maps import LinearMap, identity_map, tensor_map, unit_embedding, validate_cp_unital
from rqmkit.rand import random_element, random_rqm_on, random_state
from rqmkit.rqm import induced_cp_map, trivial_rqm

M2 = make_algebra([2])
C2 = make_algebra([1, 1])


def random_chain(algebra, params, depth, seed):
    rqm = random_rqm_on(algebra, params, seed)
    sigma = random_state(algebra, seed + 1000)
    return build_chain(homogeneous_chain_spec(rqm, sigma, depth))


def test_trivial_chain_levels_and_steps():
    chain = build_chain(homogeneous_chain_spec(trivial_rqm(M2), random_state(M2, 0), 3))
    assert all(level.blocks == (2,) for level in chain.levels)
    for psi in chain.step_maps:
        assert np.abs(psi.mat - np.eye(4)).max() == 0.0


def test_level_block_bookkeeping():
    chain = random_chain(M2, C2, 2, 0)
    assert chain.levels[2].blocks == (2, 2, 2, 2)
    assert chain.levels[2].dim == 16


def test_step_map_matches_diamond_oracle():
    rqm = random_rqm_on(M2, make_algebra([2]), 1)
    chain = build_chain(homogeneous_chain_spec(rqm, random_state(M2, 2), 2))
    oracle = tensor_map(rqm.phi, identity_map(rqm.params)).mat @ rqm.phi.mat
    assert np.abs(chain.step_maps[2].mat - oracle).max() <= 1e-12


def test_step_maps_are_validated_morphisms():
    chain = random_chain(M2, C2, 3, 3)
    for psi in chain.step_maps:
        assert psi.kind == "morphism"


def test_truncation_consistency():
    chain = random_chain(M2, C2, 2, 4)
    for n in range(chain.depth):
        step = chain.spec.steps[n]
        embed = unit_embedding(chain.levels[n], step.params)
        embed = LinearMap(chain.levels[n], chain.levels[n + 1], embed.mat, embed.kind)
        for x in chain.levels[n].basis():
            assert abs(
                chain.states[n + 1].evaluate(embed(x)) - chain.states[n].evaluate(x)
            ) <= 1e-12


def test_dimension_cap():
    rqm = random_rqm_on(M2, make_algebra([2]), 5)
    spec = homogeneous_chain_spec(rqm, random_state(M2, 6), 12)
    with pytest.raises(DimensionCapError) as info:
        build_chain(spec, dim_cap=10_000)
    assert info.value.required > info.value.allowed == 10_000


# ---------------------------------------------------------------------------
# conditional expectations and the Markov property
# ---------------------------------------------------------------------------

def test_conditional_expectation_formula_at_level_zero():
    chain = random_chain(M2, C2, 2, 7)
    cond = conditional_expectation(chain, 0)
    nu = chain.spec.steps[0].param_state
    for a in M2.basis():
        for c in C2.basis():
            x = chain.levels[1].unflatten(tensor_element(a, c).flatten())
            expected = complex(nu.evaluate(c)) * a
            assert (cond(x) - expected).norm() <= 1e-12


def test_conditional_expectation_fixes_embedded_level():
    chain = random_chain(M2, C2, 2, 8)
    cond = conditional_expectation(chain, 1)
    embed = unit_embedding(chain.levels[1], chain.spec.steps[1].params)
    embed = LinearMap(chain.levels[1], chain.levels[2], embed.mat, embed.kind)
    for x in chain.levels[1].basis():
        assert (cond(embed(x)) - x).norm() <= 1e-12


def test_conditional_expectation_is_cp_unital():
    chain = random_chain(M2, make_algebra([2]), 2, 9)
    cond = conditional_expectation(chain, 0)
    assert cond.kind == "cp_unital"
    validate_cp_unital(LinearMap(cond.domain, cond.codomain, cond.mat))


def test_conditional_expectation_state_compatibility():
    chain = random_chain(M2, C2, 2, 10)
    cond = conditional_expectation(chain, 0)
    rng = np.random.default_rng(0)
    for _ in range(5):
        x = random_element(chain.levels[1], rng)
        assert abs(
            chain.states[1].evaluate(x) - chain.states[0].evaluate(cond(x))
        ) <= 1e-10


def test_conditional_expectation_level_out_of_range():
    chain = random_chain(M2, C2, 2, 11)
    with pytest.raises(DepthError):
        conditional_expectation(chain, 2)


def test_markov_trivial_chain_is_exact():
    chain = build_chain(homogeneous_chain_spec(trivial_rqm(M2), random_state(M2, 1), 2))
    report = verify_markov(chain, 0)
    assert report.max_residual <= 1e-14


@pytest.mark.parametrize("seed", range(5))
def test_markov_random_chain(seed):
    chain = random_chain(M2, C2, 2, seed + 20)
    for level in (0, 1):
        report = verify_markov(chain, level)
        assert report.passed, report
        assert report.max_residual <= 1e-10


def test_markov_containment_on_matrix_unit():
    chain = random_chain(M2, C2, 2, 26)
    cond = conditional_expectation(chain, 0)
    step = chain.spec.steps[0]
    a = M2.basis_element(0, 0, 0)
    lhs = cond(chain.step_maps[1](a))
    rhs = chain.step_maps[0](induced_cp_map(step)(a))
    assert (lhs - rhs).norm() <= 1e-10


# ---------------------------------------------------------------------------
# moments of time words
# ---------------------------------------------------------------------------

def test_moment_of_unit_word_is_one():
    chain = random_chain(M2, C2, 3, 30)
    value = moment(chain, [0, 2, 1], [M2.unit()] * 3)
    assert value == pytest.approx(1.0)


def test_moment_at_time_zero_is_initial_state():
    chain = random_chain(M2, C2, 3, 31)
    a = random_element(M2, 5)
    assert moment(chain, [0], [a]) == pytest.approx(chain.spec.initial.evaluate(a))


def test_moment_against_dense_block_diagonal_oracle():
    chain = random_chain(M2, C2, 2, 32)
    rng = np.random.default_rng(7)
    a1, a2 = random_element(M2, rng), random_element(M2, rng)
    value = moment(chain, [1, 2], [a1, a2])
    # oracle: multiply dense block-diagonal embeddings, trace against the
    # dense block-diagonal density of the top state
    top = chain.levels[-1]

    def dense(el):
        total = sum(top.blocks)
        out = np.zeros((total, total), dtype=complex)
        pos = 0
        for m, n in zip(el.mats, top.blocks):
            out[pos : pos + n, pos : pos + n] = m
            pos += n
        return out

    from rqmkit.algebra import Element

    word = dense(chain.global_step_maps[1](a1)) @ dense(chain.global_step_maps[2](a2))
    rho = dense(Element(top, chain.states[-1].densities))
    assert value == pytest.approx(np.trace(rho @ word))


def test_moment_rejects_times_beyond_depth():
    chain = random_chain(M2, C2, 2, 33)
    with pytest.raises(DepthError):
        moment(chain, [3], [M2.unit()])


# ---------------------------------------------------------------------------
# stationarity and semi-commutativity
# ---------------------------------------------------------------------------

def test_trivial_chain_is_stationary():
    chain = build_chain(homogeneous_chain_spec(trivial_rqm(M2), random_state(M2, 3), 3))
    report = check_stationarity(chain, 2, 1)
    assert report.max_violation <= 1e-12
    assert report.passed


def test_invariant_initial_state_gives_stationary_chain():
    rqm = random_rqm_on(M2, C2, 40)
    canonical = invariant_states(rqm).canonical
    chain = build_chain(homogeneous_chain_spec(rqm, canonical, 3))
    report = check_stationarity(chain, 2, 1, tol=1e-9)
    assert report.passed, report.max_violation


def test_non_invariant_initial_state_is_detected():
    rqm = random_rqm_on(M2, C2, 41)
    canonical = invariant_states(rqm).canonical
    # perturb off the fixed subspace, then renormalize
    perturbed = np.array(canonical.densities[0])
    perturbed[0, 0] += 0.2
    perturbed[1, 1] -= 0.2
    sigma = make_state(M2, [perturbed], tol=1e-6)
    from rqmkit.invariant import verify_invariant

    if verify_invariant(rqm, sigma) > 1e-6:
        chain = build_chain(homogeneous_chain_spec(rqm, sigma, 3))
        report = check_stationarity(chain, 1, 1)
        assert not report.passed
        assert report.violations[(1, 1)] > 1e-6


def test_stationarity_requires_homogeneous_chain():
    r1 = random_rqm_on(M2, C2, 42)
    r2 = random_rqm_on(M2, C2, 43)
    spec = chain_spec([r1, r2], random_state(M2, 44))
    chain = build_chain(spec)
    with pytest.raises(ValueError):
        check_stationarity(chain, 1, 1)


def test_stationarity_requires_enough_depth():
    chain = random_chain(M2, C2, 2, 45)
    with pytest.raises(DepthError):
        check_stationarity(chain, 1, 3)


def test_semi_commutativity_on_commutative_algebra():
    chain = build_chain(
        homogeneous_chain_spec(trivial_rqm(C2), random_state(C2, 4), 2)
    )
    report = check_semi_commutative(chain)
    assert report.holds
    assert report.condition == "sufficient"


def test_semi_commutativity_fails_on_trivial_m2_chain():
    chain = build_chain(homogeneous_chain_spec(trivial_rqm(M2), random_state(M2, 5), 2))
    report = check_semi_commutative(chain)
    assert not report.holds
    # psi_0 and psi_1 both embed M2 identically; e12 and e21 do not commute
    e12 = chain.global_step_maps[0](M2.basis_element(0, 0, 1))
    e21 = chain.global_step_maps[1](M2.basis_element(0, 1, 0))
    assert (e12 * e21 - e21 * e12).norm() > 0.5


def test_semi_commutativity_on_lifted_classical_chain():
    from rqmkit.classical import (
        ClassicalRandomMap,
        FiniteSpace,
        lift_random_map,
    )

    cmap = ClassicalRandomMap(
        FiniteSpace(2), FiniteSpace(2), FiniteSpace(2), [[0, 1], [1, 0]], [0.5, 0.5]
    )
    lifted = lift_random_map(cmap)
    sigma = random_state(make_algebra([1, 1]), 6)
    chain = build_chain(homogeneous_chain_spec(lifted, sigma, 2))
    assert check_semi_commutative(chain).holds


def test_nonhomogeneous_chain_builds():
    r1 = random_rqm_on(M2, C2, 50)
    r2 = random_rqm_on(M2, make_algebra([2]), 51)
    spec = chain_spec([r1, r2], random_state(M2, 52))
    chain = build_chain(spec)
    assert chain.levels[2].blocks == (4, 4)
    report = verify_markov(chain, 0)
    assert report.passed
    report = verify_markov(chain, 1)
    assert report.passed


def test_chain_states_are_product_states():
    chain = random_chain(M2, C2, 2, 60)
    expected = tensor_state(
        tensor_state(chain.spec.initial, chain.spec.steps[0].param_state),
        chain.spec.steps[1].param_state,
    )
    assert max(
        np.abs(a - b).max()
        for a, b in zip(chain.states[2].densities, expected.densities)
    ) == 0.0
