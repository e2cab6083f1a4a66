"""Seeded pseudorandom fixtures: elements, states, unitaries, morphisms,
families, random quantum maps, and unital CP maps.

Every generator takes a seed or a numpy Generator and is reproducible given
the seed.  Generators that depend on representation-theoretic feasibility
(morphisms into a given algebra) return None when no morphism exists.
"""

from __future__ import annotations

import numpy as np

from .algebra import (
    Algebra,
    Element,
    State,
    make_algebra,
    make_state,
    tensor_algebra,
)
from .maps import (
    LinearMap,
    linear_map_from_images,
    make_morphism,
    representation_multiplicities,
    validate_cp_unital,
)
from .rqm import QuantumFamily, RandomQuantumMap, make_family


def as_rng(seed) -> np.random.Generator:
    """Accept a Generator, an int seed, or None (fresh entropy)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_element(algebra: Algebra, seed=None) -> Element:
    rng = as_rng(seed)
    mats = [
        rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        for n in algebra.blocks
    ]
    return Element(algebra, tuple(mats))


def random_hermitian(algebra: Algebra, seed=None) -> Element:
    g = random_element(algebra, seed)
    return 0.5 * (g + g.adjoint())


def random_state(algebra: Algebra, seed=None) -> State:
    """Normalize G G* for Gaussian G; always a valid state."""
    rng = as_rng(seed)
    raws = []
    for n in algebra.blocks:
        g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        raws.append(g @ g.conj().T)
    total = sum(np.trace(m).real for m in raws)
    return make_state(algebra, [m / total for m in raws])


def random_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-distributed unitary via QR with phase fixing."""
    rng = as_rng(seed)
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(g)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_isometry(rows: int, cols: int, seed=None) -> np.ndarray:
    if cols > rows:
        raise ValueError(f"no isometry with {cols} columns into dimension {rows}")
    rng = as_rng(seed)
    g = rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    q, _ = np.linalg.qr(g)
    return q[:, :cols]


def random_morphism(domain: Algebra, codomain: Algebra, seed=None) -> LinearMap | None:
    """A random unital *-morphism, or None when none exists.

    Each codomain block carries a randomly chosen multiplicity pattern of the
    domain blocks, conjugated by a Haar unitary.
    """
    rng = as_rng(seed)
    per_block = []
    for n in codomain.blocks:
        solutions = representation_multiplicities(domain.blocks, n)
        if not solutions:
            return None
        per_block.append(solutions[rng.integers(len(solutions))])
    unitaries = [random_unitary(n, rng) for n in codomain.blocks]

    images = []
    for j, p, q in domain.basis_labels():
        mats = []
        for i, n in enumerate(codomain.blocks):
            mults = per_block[i]
            big = np.zeros((n, n), dtype=complex)
            pos = 0
            for j2, m in enumerate(domain.blocks):
                for _ in range(mults[j2]):
                    if j2 == j:
                        big[pos + p, pos + q] = 1.0
                    pos += m
            u = unitaries[i]
            mats.append(u @ big @ u.conj().T)
        images.append(Element(codomain, tuple(mats)))
    return make_morphism(domain, codomain, images)


def random_family(
    domain: Algebra, target: Algebra, params: Algebra, seed=None
) -> QuantumFamily | None:
    phi = random_morphism(domain, tensor_algebra(target, params), seed)
    if phi is None:
        return None
    return make_family(target, params, phi)


def random_rqm(
    domain: Algebra, target: Algebra, params: Algebra, seed=None
) -> RandomQuantumMap | None:
    rng = as_rng(seed)
    family = random_family(domain, target, params, rng)
    if family is None:
        return None
    return RandomQuantumMap(family, random_state(params, rng))


def random_rqm_on(algebra: Algebra, params: Algebra, seed=None) -> RandomQuantumMap | None:
    """A random quantum map from an algebra to itself (for chains)."""
    return random_rqm(algebra, algebra, params, seed)


def random_cp_unital(
    domain: Algebra, h: int, seed=None, multiplicities=None
) -> LinearMap:
    """A random unital CP map into M_h, built as V* pi(b) V.

    ``pi`` is a block-diagonal representation with the given (or random)
    multiplicities and V is a Haar isometry, so the result is unital CP by
    construction; it is still validated before being returned.
    """
    rng = as_rng(seed)
    if multiplicities is None:
        mults = [int(rng.integers(1, 3)) for _ in domain.blocks]
    else:
        mults = list(multiplicities)
    k = sum(t * m for t, m in zip(mults, domain.blocks))
    while k < h:
        mults[0] += 1
        k += domain.blocks[0]
    v = random_isometry(k, h, rng)
    codomain = make_algebra([h])
    images = []
    for j, p, q in domain.basis_labels():
        big = np.zeros((k, k), dtype=complex)
        pos = 0
        for j2, m in enumerate(domain.blocks):
            for _ in range(mults[j2]):
                if j2 == j:
                    big[pos + p, pos + q] = 1.0
                pos += m
        images.append(codomain.element([v.conj().T @ big @ v]))
    return validate_cp_unital(
        linear_map_from_images(domain, codomain, images)
    )
