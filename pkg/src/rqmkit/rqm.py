"""Quantum families of maps and random quantum maps.

A quantum family from B to A is a morphism phi: B -> A (x) C into a tensor
with a parameter algebra C; adding a state on C makes it a random quantum
map, which induces a unital CP map b -> (id (x) nu) phi(b) and the dual
transition on states.  This module also provides diamond composition of
families and the constructive implementations of states, morphisms,
compositions, direct sums, tensor products, convex combinations, finite
families, and dilation-based implementations of CP maps into a matrix block.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    State,
    direct_sum_algebra,
    make_algebra,
    make_state,
    state_from_probabilities,
    tensor_algebra,
    tensor_element,
    tensor_state,
    trivial_algebra,
)
from .errors import AlgebraMismatchError, InvalidStateError, NotAMorphismError
from .maps import (
    KIND_CP_UNITAL,
    KIND_MORPHISM,
    LinearMap,
    Transition,
    compose,
    direct_sum_map,
    identity_map,
    leg_permutation_map,
    linear_map_from_images,
    make_morphism,
    representation_multiplicities,
    stinespring_dilate,
    tensor_map,
    validate_cp_unital,
    validate_morphism,
)


@dataclass(frozen=True, eq=False)
class QuantumFamily:
    """A parameterized family of maps: a morphism phi: B -> target (x) params."""

    target: Algebra
    params: Algebra
    phi: LinearMap

    def __post_init__(self):
        expected = tensor_algebra(self.target, self.params)
        if self.phi.codomain != expected:
            raise AlgebraMismatchError(
                f"family map codomain {self.phi.codomain} does not match "
                f"target (x) params = {expected}"
            )
        if self.phi.kind != KIND_MORPHISM:
            raise NotAMorphismError(
                "family map must be a validated morphism; run validate_morphism first"
            )

    @property
    def domain(self) -> Algebra:
        return self.phi.domain


def make_family(target: Algebra, params: Algebra, phi: LinearMap,
                tol: float = DEFAULT_TOL) -> QuantumFamily:
    """Validate phi as a morphism (if untagged) and wrap it as a family."""
    if phi.kind != KIND_MORPHISM:
        phi = validate_morphism(phi, tol)
    return QuantumFamily(target, params, phi)


@dataclass(frozen=True, eq=False)
class RandomQuantumMap:
    """A quantum family together with a state on its parameter algebra."""

    family: QuantumFamily
    param_state: State

    def __post_init__(self):
        if self.param_state.algebra != self.family.params:
            raise InvalidStateError(
                f"parameter state lives on {self.param_state.algebra}, "
                f"family parameters are {self.family.params}"
            )

    @property
    def domain(self) -> Algebra:
        return self.family.domain

    @property
    def target(self) -> Algebra:
        return self.family.target

    @property
    def params(self) -> Algebra:
        return self.family.params

    @property
    def phi(self) -> LinearMap:
        return self.family.phi


def trivial_family(algebra: Algebra) -> QuantumFamily:
    """The identity viewed as a family with scalar parameters."""
    scalars = trivial_algebra()
    phi = LinearMap(
        algebra,
        tensor_algebra(algebra, scalars),
        np.eye(algebra.dim, dtype=complex),
        KIND_MORPHISM,
    )
    return QuantumFamily(algebra, scalars, phi)


def trivial_rqm(algebra: Algebra) -> RandomQuantumMap:
    family = trivial_family(algebra)
    one = make_state(family.params, [np.array([[1.0]], dtype=complex)])
    return RandomQuantumMap(family, one)


# ---------------------------------------------------------------------------
# Diamond composition and induced maps
# ---------------------------------------------------------------------------

def diamond(f1: QuantumFamily, f2: QuantumFamily, tol: float = DEFAULT_TOL) -> QuantumFamily:
    """Compose families: the result maps a -> (phi1 (x) id) phi2(a).

    The codomain (target1 (x) params1) (x) params2 is re-read as
    target1 (x) (params1 (x) params2); under the global lexicographic block
    convention this re-association is the identity on coordinates.
    """
    if f1.domain != f2.target:
        raise AlgebraMismatchError(
            f"families do not compose: {f1.domain} vs {f2.target}"
        )
    step = tensor_map(f1.phi, identity_map(f2.params))
    phi = compose(step, f2.phi)
    params = tensor_algebra(f1.params, f2.params)
    relabeled = LinearMap(
        phi.domain, tensor_algebra(f1.target, params), phi.mat, phi.kind
    )
    return make_family(f1.target, params, relabeled, tol)


def partial_eval_map(
    target: Algebra, params: Algebra, nu: State, tol: float = DEFAULT_TOL,
    validate: bool = True,
) -> LinearMap:
    """The slot-2 partial evaluation (id (x) nu): target (x) params -> target."""
    if nu.algebra != params:
        raise InvalidStateError(
            f"state lives on {nu.algebra}, expected parameter algebra {params}"
        )
    dom = tensor_algebra(target, params)
    mat = np.zeros((target.dim, dom.dim), dtype=complex)
    block = 0
    for i, n in enumerate(target.blocks):
        t_off = target.block_offsets[i]
        for l, c in enumerate(params.blocks):
            rho = nu.densities[l]
            d_off = dom.block_offsets[block]
            block += 1
            for p in range(n):
                for q in range(n):
                    row = t_off + p * n + q
                    for r in range(c):
                        for s in range(c):
                            col = d_off + (p * c + r) * (n * c) + (q * c + s)
                            mat[row, col] = rho[s, r]
    out = LinearMap(dom, target, mat)
    return validate_cp_unital(out, tol) if validate else out.with_kind(KIND_CP_UNITAL)


def induced_cp_map(r: RandomQuantumMap, tol: float = DEFAULT_TOL) -> LinearMap:
    """The unital CP map b -> (id (x) nu) phi(b) induced by a random quantum map."""
    contraction = partial_eval_map(r.target, r.params, r.param_state, tol, validate=False)
    return validate_cp_unital(compose(contraction, r.phi), tol)


def induced_transition(r: RandomQuantumMap) -> Transition:
    """The induced transition rho -> (rho (x) nu) phi, assembled directly.

    This is an independent computation path from
    ``adjoint_transition(induced_cp_map(r))``; the two must agree.
    """
    from .layout import kron_to_flat

    perm = kron_to_flat(r.target, r.params)
    nu_vec = r.param_state.functional_vector()
    dim_c = r.params.dim
    # S maps functional vectors on target to functional vectors on target (x) params
    rows = np.arange(r.target.dim * dim_c)
    tensorize = np.zeros((r.target.dim * dim_c, r.target.dim), dtype=complex)
    tensorize[rows, perm[rows] // dim_c] = nu_vec[perm[rows] % dim_c]
    return Transition(
        source=r.target, target=r.domain, dual_mat=r.phi.mat.T @ tensorize
    )


# ---------------------------------------------------------------------------
# Implementation constructions
# ---------------------------------------------------------------------------

def state_as_map(sigma: State) -> LinearMap:
    """A state viewed as the unital CP map a -> sigma(a) * 1 into the scalars."""
    scalars = trivial_algebra()
    mat = sigma.functional_vector().reshape(1, -1)
    return LinearMap(sigma.algebra, scalars, mat, KIND_CP_UNITAL)


def implement_state(sigma: State) -> RandomQuantumMap:
    """Implement a state: parameters are the algebra itself, the map is the identity."""
    alg = sigma.algebra
    scalars = trivial_algebra()
    phi = LinearMap(
        alg,
        tensor_algebra(scalars, alg),
        np.eye(alg.dim, dtype=complex),
        KIND_MORPHISM,
    )
    return RandomQuantumMap(QuantumFamily(scalars, alg, phi), sigma)


def implement_morphism(phi: LinearMap, tol: float = DEFAULT_TOL) -> RandomQuantumMap:
    """Implement a morphism with scalar parameters and the unique scalar state."""
    if phi.kind != KIND_MORPHISM:
        phi = validate_morphism(phi, tol)
    scalars = trivial_algebra()
    relabeled = LinearMap(
        phi.domain, tensor_algebra(phi.codomain, scalars), phi.mat, KIND_MORPHISM
    )
    one = make_state(scalars, [np.array([[1.0]], dtype=complex)])
    return RandomQuantumMap(QuantumFamily(phi.codomain, scalars, relabeled), one)


def implement_composition(
    r1: RandomQuantumMap, r2: RandomQuantumMap, tol: float = DEFAULT_TOL
) -> RandomQuantumMap:
    """Implement the composition of the induced maps: diamond the families,
    tensor the parameter states."""
    family = diamond(r1.family, r2.family, tol)
    return RandomQuantumMap(family, tensor_state(r1.param_state, r2.param_state))


def _direct_sum_mixer(
    a1: Algebra, c1: Algebra, a2: Algebra, c2: Algebra, tol: float
) -> LinearMap:
    """(a1 (x) c1, a2 (x) c2) -> (a1, 0) (x) (c1 (x) 1) + (0, a2) (x) (1 (x) c2)."""
    dom = direct_sum_algebra(tensor_algebra(a1, c1), tensor_algebra(a2, c2))
    a_sum = direct_sum_algebra(a1, a2)
    c_prod = tensor_algebra(c1, c2)
    images = []
    n1 = tensor_algebra(a1, c1).n_blocks
    for blk, p, q in dom.basis_labels():
        if blk < n1:
            i, l = divmod(blk, c1.n_blocks)
            n, c = a1.blocks[i], c1.blocks[l]
            pa, r = divmod(p, c)
            qa, s = divmod(q, c)
            a_part = a1.basis_element(i, pa, qa)
            left = Element(a_sum, a_part.mats + tuple(np.zeros((m, m), complex) for m in a2.blocks))
            right = tensor_element(c1.basis_element(l, r, s), c2.unit())
        else:
            blk2 = blk - n1
            i, l = divmod(blk2, c2.n_blocks)
            n, c = a2.blocks[i], c2.blocks[l]
            pa, r = divmod(p, c)
            qa, s = divmod(q, c)
            a_part = a2.basis_element(i, pa, qa)
            left = Element(a_sum, tuple(np.zeros((m, m), complex) for m in a1.blocks) + a_part.mats)
            right = tensor_element(c1.unit(), c2.basis_element(l, r, s))
        images.append(tensor_element(left, right))
    return make_morphism(dom, tensor_algebra(a_sum, c_prod), images, tol)


def implement_direct_sum(
    r1: RandomQuantumMap, r2: RandomQuantumMap, tol: float = DEFAULT_TOL
) -> RandomQuantumMap:
    """Implement the direct sum of the induced maps on B1 (+) B2."""
    mixer = _direct_sum_mixer(r1.target, r1.params, r2.target, r2.params, tol)
    phi = compose(mixer, direct_sum_map(r1.phi, r2.phi))
    family = make_family(
        direct_sum_algebra(r1.target, r2.target),
        tensor_algebra(r1.params, r2.params),
        phi,
        tol,
    )
    return RandomQuantumMap(family, tensor_state(r1.param_state, r2.param_state))


def implement_tensor(
    r1: RandomQuantumMap, r2: RandomQuantumMap, tol: float = DEFAULT_TOL
) -> RandomQuantumMap:
    """Implement the tensor product of the induced maps on B1 (x) B2.

    The middle tensor legs are flipped by the canonical leg permutation:
    (a1 (x) c1) (x) (a2 (x) c2) -> (a1 (x) a2) (x) (c1 (x) c2).
    """
    flip = leg_permutation_map(
        [r1.target, r1.params, r2.target, r2.params], [0, 2, 1, 3]
    )
    phi = compose(flip, tensor_map(r1.phi, r2.phi))
    a_prod = tensor_algebra(r1.target, r2.target)
    c_prod = tensor_algebra(r1.params, r2.params)
    relabeled = LinearMap(
        phi.domain, tensor_algebra(a_prod, c_prod), phi.mat, phi.kind
    )
    family = make_family(a_prod, c_prod, relabeled, tol)
    return RandomQuantumMap(family, tensor_state(r1.param_state, r2.param_state))


def _diagonal_morphism(algebra: Algebra, copies: int) -> LinearMap:
    """b -> (b, ..., b) into the n-fold direct sum."""
    cod = reduce(direct_sum_algebra, [algebra] * copies)
    images = []
    for j, p, q in algebra.basis_labels():
        e = algebra.basis_element(j, p, q)
        images.append(Element(cod, e.mats * copies))
    return linear_map_from_images(algebra, cod, images, KIND_MORPHISM)


def _selector_morphism(
    target: Algebra, copies: int, params: Algebra, tol: float
) -> LinearMap:
    """(a_1, ..., a_n) (x) c -> sum_i a_i (x) (e_i (x) c)."""
    a_sum = reduce(direct_sum_algebra, [target] * copies)
    dom = tensor_algebra(a_sum, params)
    selectors = make_algebra([1] * copies)
    cod = tensor_algebra(target, tensor_algebra(selectors, params))
    images = []
    for blk, p, q in dom.basis_labels():
        sum_blk, l = divmod(blk, params.n_blocks)
        copy_idx, mu = divmod(sum_blk, target.n_blocks)
        c = params.blocks[l]
        pa, r = divmod(p, c)
        qa, s = divmod(q, c)
        a_part = target.basis_element(mu, pa, qa)
        e_i = selectors.basis_element(copy_idx, 0, 0)
        images.append(
            tensor_element(a_part, tensor_element(e_i, params.basis_element(l, r, s)))
        )
    return make_morphism(dom, cod, images, tol)


def implement_convex_combination(
    weights: Sequence[float],
    rqms: Sequence[RandomQuantumMap],
    tol: float = DEFAULT_TOL,
) -> RandomQuantumMap:
    """Implement sum_i t_i F_i for maps F_i implemented between the same algebras."""
    weights = [float(w) for w in weights]
    if len(weights) != len(rqms) or not rqms:
        raise InvalidStateError("need one weight per random quantum map")
    if any(w < -DEFAULT_TOL for w in weights) or abs(sum(weights) - 1.0) > DEFAULT_TOL:
        raise InvalidStateError(f"weights {weights} are not a probability vector")
    first = rqms[0]
    for r in rqms[1:]:
        if r.domain != first.domain or r.target != first.target:
            raise AlgebraMismatchError("all maps must share domain and target")

    summed = reduce(implement_direct_sum, rqms)
    n = len(rqms)
    diag = _diagonal_morphism(first.domain, n)
    selector = _selector_morphism(first.target, n, summed.params, tol)
    phi = compose(selector, compose(summed.phi, diag))
    selectors = make_algebra([1] * n)
    c_total = tensor_algebra(selectors, summed.params)
    family = make_family(first.target, c_total, phi, tol)
    weight_state = state_from_probabilities(selectors, weights)
    return RandomQuantumMap(family, tensor_state(weight_state, summed.param_state))


def implement_finite_family(
    morphisms: Sequence[LinearMap],
    weights: Sequence[float],
    tol: float = DEFAULT_TOL,
) -> RandomQuantumMap:
    """Implement the weighted average of finitely many morphisms B -> A.

    The parameter algebra is the functions on the finite index set; phi packs
    the family block-diagonally, x -> (f_x(b))_x.
    """
    if len(morphisms) != len(weights) or not morphisms:
        raise InvalidStateError("need one weight per morphism")
    validated = []
    for f in morphisms:
        validated.append(f if f.kind == KIND_MORPHISM else validate_morphism(f, tol))
    first = validated[0]
    for f in validated[1:]:
        if f.domain != first.domain or f.codomain != first.codomain:
            raise AlgebraMismatchError("all morphisms must share domain and codomain")
    k = len(validated)
    points = make_algebra([1] * k)
    images = []
    for e in first.domain.basis():
        acc = None
        for x, f in enumerate(validated):
            term = tensor_element(f(e), points.basis_element(x, 0, 0))
            acc = term if acc is None else acc + term
        images.append(acc)
    phi = make_morphism(
        first.domain, tensor_algebra(first.codomain, points), images, tol
    )
    family = QuantumFamily(first.codomain, points, phi)
    return RandomQuantumMap(family, state_from_probabilities(points, weights))


# ---------------------------------------------------------------------------
# Dilation-based implementation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DilationImplementation:
    """Outcome of the dilation-plus-padding implementation attempt.

    On success, ``rqm`` carries the witness and ``residual`` the worst basis
    deviation of its induced map from the target.  On failure, ``rqm`` is None
    and ``unreachable`` lists the padding dimensions for which the domain has
    no unital representation.
    """

    succeeded: bool
    k_dim: int
    copies: int | None = None
    padding: int | None = None
    residual: float | None = None
    rqm: RandomQuantumMap | None = None
    unreachable: tuple[int, ...] = ()
    message: str = ""


def implement_from_dilation(
    f: LinearMap,
    tol: float = DEFAULT_TOL,
    gram_cutoff: float = 1e-10,
    max_extra_copies: int = 8,
) -> DilationImplementation:
    """Implement a unital CP map into M_h through its Stinespring dilation.

    The dilation space K is padded to H (x) C^n for the smallest workable
    number of copies n: the pad n*h - K_dim must carry a unital representation
    of the domain, i.e. be a nonnegative integer combination of its block
    sizes.  Copy counts n are scanned upward from ceil(K_dim / h) through
    ``max_extra_copies`` extra values; if none admits a representation the
    attempt is reported as a failure naming the unreachable dimensions.
    """
    dilation = stinespring_dilate(f, tol, gram_cutoff)
    h = f.codomain.blocks[0]
    k_dim = dilation.k_dim
    dom = f.domain

    n_start = -(-k_dim // h)
    unreachable: list[int] = []
    for n in range(n_start, n_start + max_extra_copies + 1):
        pad = n * h - k_dim
        if pad == 0:
            pi_images = [img.mats[0] for img in dilation.pi.basis_images()]
            v_full = dilation.v
        else:
            solutions = representation_multiplicities(dom.blocks, pad)
            if not solutions:
                unreachable.append(pad)
                continue
            from .maps import block_diagonal_representation

            theta = block_diagonal_representation(dom, solutions[0])
            pi_images = []
            for base, extra in zip(dilation.pi.basis_images(), theta.basis_images()):
                big = np.zeros((n * h, n * h), dtype=complex)
                big[:k_dim, :k_dim] = base.mats[0]
                big[k_dim:, k_dim:] = extra.mats[0]
                pi_images.append(big)
            v_full = np.vstack(
                [dilation.v, np.zeros((pad, h), dtype=complex)]
            )

        # Unitary frame whose first h columns are exactly the isometry.
        total = n * h
        complement = np.eye(total, dtype=complex) - v_full @ v_full.conj().T
        eigvals, eigvecs = np.linalg.eigh(complement)
        frame = np.hstack([v_full, eigvecs[:, eigvals > 0.5]])
        # Column order realizing K (+) pad ~ H (x) C^n with V into the u = 0 slice.
        col_order = np.array([u * h + p for p in range(h) for u in range(n)])
        w = frame[:, col_order]

        target = f.codomain
        copies = make_algebra([n])
        cod = tensor_algebra(target, copies)
        images = [
            cod.element([w.conj().T @ big @ w]) for big in pi_images
        ]
        try:
            phi = make_morphism(dom, cod, images, tol=max(tol, 1e-8))
        except NotAMorphismError as exc:
            return DilationImplementation(
                succeeded=False,
                k_dim=k_dim,
                copies=n,
                padding=pad,
                unreachable=tuple(unreachable),
                message=f"padded dilation failed morphism validation: {exc}",
            )
        corner = np.zeros((n, n), dtype=complex)
        corner[0, 0] = 1.0
        nu = make_state(copies, [corner])
        rqm = RandomQuantumMap(QuantumFamily(target, copies, phi), nu)
        residual = float(np.abs(induced_cp_map(rqm).mat - f.mat).max())
        if residual <= max(tol, 1e-8):
            return DilationImplementation(
                succeeded=True,
                k_dim=k_dim,
                copies=n,
                padding=pad,
                residual=residual,
                rqm=rqm,
                unreachable=tuple(unreachable),
                message=f"implemented with {n} copies, padding {pad}",
            )
        return DilationImplementation(
            succeeded=False,
            k_dim=k_dim,
            copies=n,
            padding=pad,
            residual=residual,
            unreachable=tuple(unreachable),
            message=f"witness residual {residual:.3e} exceeds tolerance",
        )
    return DilationImplementation(
        succeeded=False,
        k_dim=k_dim,
        unreachable=tuple(unreachable),
        message=(
            f"no unital representation of {dom} exists for any padding in "
            f"{unreachable}: dimension unreachable"
        ),
    )
