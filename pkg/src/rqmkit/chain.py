"""Truncated quantum Markov chains driven by random quantum maps.

A chain on an algebra A is generated by steps phi_n: A -> A (x) C_n together
with an initial state.  Levels B_n = A (x) C_1 (x) ... (x) C_n, states
mu_n = sigma (x) nu_1 (x) ... (x) nu_n, and step morphisms
psi_n = phi_1 <> ... <> phi_n are built up to a truncation depth, and the
defining identities (conditional expectations, the Markov property, moments
of time words, shift stationarity, semi-commutativity) are checked on them.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    State,
    tensor_state,
)
from .errors import AlgebraMismatchError, DepthError, DimensionCapError
from .maps import LinearMap, compose, left_mult_matrix, unit_embedding
from .rqm import RandomQuantumMap, diamond, induced_cp_map, partial_eval_map, trivial_family

#: Largest number of complex entries a single chain element may need.
DEFAULT_DIM_CAP = 2**24


@dataclass(frozen=True, eq=False)
class ChainSpec:
    """Generator data for a chain: per-step random quantum maps on one algebra."""

    algebra: Algebra
    steps: tuple[RandomQuantumMap, ...]
    initial: State
    homogeneous: bool = False

    def __post_init__(self):
        if not self.steps:
            raise DepthError("chain depth must be at least 1")
        for n, step in enumerate(self.steps, start=1):
            if step.domain != self.algebra or step.target != self.algebra:
                raise AlgebraMismatchError(
                    f"step {n} maps {step.domain} -> {step.target}, "
                    f"expected an endomorphic step on {self.algebra}"
                )
        if self.initial.algebra != self.algebra:
            raise AlgebraMismatchError(
                f"initial state lives on {self.initial.algebra}, chain on {self.algebra}"
            )

    @property
    def depth(self) -> int:
        return len(self.steps)


def homogeneous_chain_spec(
    rqm: RandomQuantumMap, initial: State, depth: int
) -> ChainSpec:
    if depth < 1:
        raise DepthError(f"depth must be at least 1, got {depth}")
    return ChainSpec(rqm.domain, (rqm,) * depth, initial, homogeneous=True)


def chain_spec(steps: Sequence[RandomQuantumMap], initial: State) -> ChainSpec:
    steps = tuple(steps)
    homogeneous = all(s is steps[0] for s in steps)
    return ChainSpec(steps[0].domain if steps else None, steps, initial, homogeneous)


@dataclass(frozen=True, eq=False)
class TruncatedChain:
    """All levels of a chain up to its truncation depth.

    ``levels[n]``, ``states[n]``, and ``step_maps[n]`` hold B_n, mu_n, and
    psi_n; ``embeddings[n]`` is the unital morphism B_n -> B_N tensoring with
    units on the trailing legs, and ``global_step_maps[n]`` is the composite
    A -> B_N used for word evaluation.
    """

    spec: ChainSpec
    levels: tuple[Algebra, ...]
    states: tuple[State, ...]
    step_maps: tuple[LinearMap, ...]
    embeddings: tuple[LinearMap, ...]
    global_step_maps: tuple[LinearMap, ...]

    @property
    def depth(self) -> int:
        return self.spec.depth


def build_chain(
    spec: ChainSpec, dim_cap: int = DEFAULT_DIM_CAP, tol: float = DEFAULT_TOL
) -> TruncatedChain:
    """Construct levels, states, and validated step morphisms up to the depth."""
    required = spec.algebra.dim
    for step in spec.steps:
        required *= step.params.dim
    if required > dim_cap:
        raise DimensionCapError(required, dim_cap)

    levels = [spec.algebra]
    states = [spec.initial]
    families = [trivial_family(spec.algebra)]
    for step in spec.steps:
        families.append(diamond(families[-1], step.family, tol))
        levels.append(families[-1].phi.codomain)
        states.append(tensor_state(states[-1], step.param_state))

    step_maps = [f.phi for f in families]
    # Relabel psi_0 (codomain A (x) scalars has the same blocks as A).
    step_maps[0] = LinearMap(
        spec.algebra, spec.algebra, step_maps[0].mat, step_maps[0].kind
    )
    levels[0] = spec.algebra

    top = levels[-1]
    embeddings = []
    for n, level in enumerate(levels):
        rest_dims = [s.params for s in spec.steps[n:]]
        if rest_dims:
            from .algebra import tensor_many

            emb = unit_embedding(level, tensor_many(rest_dims))
            emb = LinearMap(level, top, emb.mat, emb.kind)
        else:
            emb = LinearMap(top, top, np.eye(top.dim, dtype=complex), "morphism")
        embeddings.append(emb)
    global_step_maps = [compose(emb, psi) for emb, psi in zip(embeddings, step_maps)]
    return TruncatedChain(
        spec=spec,
        levels=tuple(levels),
        states=tuple(states),
        step_maps=tuple(step_maps),
        embeddings=tuple(embeddings),
        global_step_maps=tuple(global_step_maps),
    )


def conditional_expectation(
    chain: TruncatedChain, level: int, tol: float = DEFAULT_TOL
) -> LinearMap:
    """The slot-(level+1) partial evaluation B_{level+1} -> B_{level}."""
    if not 0 <= level < chain.depth:
        raise DepthError(
            f"level {level} out of range for a chain of depth {chain.depth}"
        )
    step = chain.spec.steps[level]
    out = partial_eval_map(
        chain.levels[level], step.params, step.param_state, tol
    )
    # Domain B_level (x) C_{level+1} has the same blocks as B_{level+1}.
    return LinearMap(chain.levels[level + 1], chain.levels[level], out.mat, out.kind)


@dataclass(frozen=True)
class MarkovReport:
    """Residuals of the three Markov-property identities at one level."""

    level: int
    module_residual: float
    compatibility_residual: float
    containment_residual: float
    tolerance: float

    @property
    def max_residual(self) -> float:
        return max(
            self.module_residual,
            self.compatibility_residual,
            self.containment_residual,
        )

    @property
    def passed(self) -> bool:
        return self.max_residual <= self.tolerance


def verify_markov(
    chain: TruncatedChain, level: int, tol: float = DEFAULT_TOL
) -> MarkovReport:
    """Check the module property, state compatibility, and containment.

    (a) E(x y) = x E(y) for x from the embedded lower level, on full bases
        via left-multiplication matrices;
    (b) mu_{n+1} = mu_n o E as functionals;
    (c) E(psi_{n+1}(a)) = psi_n(a') with a' the step's induced map applied to a.
    """
    cond = conditional_expectation(chain, level, tol)
    lower = chain.levels[level]
    step = chain.spec.steps[level]
    embed = unit_embedding(lower, step.params)
    embed = LinearMap(lower, chain.levels[level + 1], embed.mat, embed.kind)

    module_residual = 0.0
    for e in lower.basis():
        lhs = cond.mat @ left_mult_matrix(embed(e))
        rhs = left_mult_matrix(e) @ cond.mat
        module_residual = max(module_residual, float(np.abs(lhs - rhs).max()))

    mu_upper = chain.states[level + 1].functional_vector()
    mu_lower = chain.states[level].functional_vector()
    compatibility_residual = float(
        np.abs(mu_upper - cond.mat.T @ mu_lower).max()
    )

    step_induced = induced_cp_map(step, tol)
    containment_residual = 0.0
    for a in chain.spec.algebra.basis():
        lhs_el = cond(chain.step_maps[level + 1](a))
        rhs_el = chain.step_maps[level](step_induced(a))
        containment_residual = max(containment_residual, (lhs_el - rhs_el).norm())

    return MarkovReport(
        level=level,
        module_residual=module_residual,
        compatibility_residual=compatibility_residual,
        containment_residual=containment_residual,
        tolerance=tol,
    )


def moment(
    chain: TruncatedChain, times: Sequence[int], elements: Sequence[Element]
) -> complex:
    """The value mu(psi_{t_1}(a_1) ... psi_{t_r}(a_r)) of one time word.

    Times may repeat and need not be ordered; each factor is embedded into the
    top level by tensoring with units before multiplying in the given order.
    """
    if len(times) != len(elements):
        raise AlgebraMismatchError("need one element per time index")
    word = chain.levels[-1].unit()
    for t, a in zip(times, elements):
        if not 0 <= t <= chain.depth:
            raise DepthError(f"time {t} exceeds chain depth {chain.depth}")
        word = word * chain.global_step_maps[t](a)
    return chain.states[-1].evaluate(word)


@dataclass(frozen=True)
class StationarityReport:
    """Worst shift violation of time-word values, per word length and shift."""

    violations: dict[tuple[int, int], float]
    max_violation: float
    tolerance: float
    exhaustive: bool
    words_checked: int

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def check_stationarity(
    chain: TruncatedChain,
    r_max: int,
    l_max: int,
    tol: float = DEFAULT_TOL,
    enumeration_limit: int = 4096,
    samples: int = 256,
    seed: int = 0,
) -> StationarityReport:
    """Compare word values against their time-shifted counterparts.

    For every word length r <= r_max and shift l <= l_max, all time tuples
    with entries in 0..N-l are paired with basis-element words; full bases are
    enumerated while the combination count stays under ``enumeration_limit``,
    and seeded random sampling covers larger ranges.  Homogeneous chains only.
    """
    if not chain.spec.homogeneous:
        raise ValueError("stationarity is defined for homogeneous chains only")
    depth = chain.depth
    if l_max < 1 or l_max > depth:
        raise DepthError(
            f"shift bound {l_max} needs depth at least {l_max}, chain has {depth}"
        )

    alg = chain.spec.algebra
    basis = list(alg.basis())
    d = len(basis)
    rng = np.random.default_rng(seed)

    images: dict[tuple[int, int], Element] = {}

    def factor(t: int, k: int) -> Element:
        key = (t, k)
        if key not in images:
            images[key] = chain.global_step_maps[t](basis[k])
        return images[key]

    cache: dict[tuple[tuple[int, ...], tuple[int, ...]], complex] = {}

    def word_value(ts: tuple[int, ...], ks: tuple[int, ...]) -> complex:
        key = (ts, ks)
        if key not in cache:
            word = chain.levels[-1].unit()
            for t, k in zip(ts, ks):
                word = word * factor(t, k)
            cache[key] = chain.states[-1].evaluate(word)
        return cache[key]

    violations: dict[tuple[int, int], float] = {}
    exhaustive = True
    words_checked = 0
    for r in range(1, r_max + 1):
        for shift in range(1, l_max + 1):
            t_range = depth - shift + 1
            total = (t_range**r) * (d**r)
            worst = 0.0
            if total <= enumeration_limit:
                combos = itertools.product(
                    itertools.product(range(t_range), repeat=r),
                    itertools.product(range(d), repeat=r),
                )
            else:
                exhaustive = False
                combos = (
                    (
                        tuple(int(v) for v in rng.integers(0, t_range, size=r)),
                        tuple(int(v) for v in rng.integers(0, d, size=r)),
                    )
                    for _ in range(samples)
                )
            for ts, ks in combos:
                shifted = tuple(t + shift for t in ts)
                delta = abs(word_value(ts, ks) - word_value(shifted, ks))
                worst = max(worst, float(delta))
                words_checked += 1
            violations[(r, shift)] = worst
    return StationarityReport(
        violations=violations,
        max_violation=max(violations.values()),
        tolerance=tol,
        exhaustive=exhaustive,
        words_checked=words_checked,
    )


@dataclass(frozen=True)
class SemiCommutativityReport:
    """Largest commutator between distinct-time step images.

    Vanishing commutators are a SUFFICIENT condition for the process to be
    semi-commutative, not an equivalent one; ``condition`` records that.
    """

    max_commutator: float
    tolerance: float
    condition: str = "sufficient"

    @property
    def holds(self) -> bool:
        return self.max_commutator <= self.tolerance


def check_semi_commutative(
    chain: TruncatedChain, tol: float = DEFAULT_TOL
) -> SemiCommutativityReport:
    alg = chain.spec.algebra
    embedded = [
        [gmap(e) for e in alg.basis()] for gmap in chain.global_step_maps
    ]
    worst = 0.0
    for n in range(chain.depth + 1):
        for n2 in range(n + 1, chain.depth + 1):
            for x in embedded[n]:
                for y in embedded[n2]:
                    worst = max(worst, (x * y - y * x).norm())
    return SemiCommutativityReport(max_commutator=worst, tolerance=tol)
