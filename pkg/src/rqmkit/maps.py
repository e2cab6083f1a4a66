"""Linear maps between multi-block algebras.

Provides validated unital *-morphisms, unital completely positive maps
certified by blockwise Choi matrices, closure operations (compose, direct
sum, tensor), trace-dual transitions acting on states, and Stinespring
dilations of unital CP maps into a single matrix block.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import layout
from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    State,
    make_algebra,
    make_state,
    tensor_element,
)
from .errors import (
    AlgebraMismatchError,
    NotAMorphismError,
    NotCompletelyPositiveError,
    NotUnitalError,
    UnsupportedShapeError,
)

KIND_RAW = "raw"
KIND_MORPHISM = "morphism"
KIND_CP_UNITAL = "cp_unital"

# Validated kinds form a small ladder: every morphism is unital CP.
_CP_KINDS = (KIND_MORPHISM, KIND_CP_UNITAL)


@dataclass(frozen=True, eq=False)
class LinearMap:
    """A linear map between algebras in flattened matrix-unit coordinates.

    ``mat`` has shape (codomain.dim, domain.dim); applying the map is a
    matrix-vector product on flattened elements.  ``kind`` records which
    validation the map has passed: "raw", "morphism", or "cp_unital".
    """

    domain: Algebra
    codomain: Algebra
    mat: np.ndarray
    kind: str = KIND_RAW

    def __post_init__(self):
        arr = np.array(self.mat, dtype=complex)
        if arr.shape != (self.codomain.dim, self.domain.dim):
            raise AlgebraMismatchError(
                f"matrix shape {arr.shape} does not match "
                f"({self.codomain.dim}, {self.domain.dim})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "mat", arr)

    def __call__(self, x: Element) -> Element:
        if x.algebra != self.domain:
            raise AlgebraMismatchError(
                f"element algebra {x.algebra} does not match domain {self.domain}"
            )
        return self.codomain.unflatten(self.mat @ x.flatten())

    def basis_images(self) -> list[Element]:
        """Images of the domain matrix-unit basis, in flat order."""
        return [self.codomain.unflatten(col) for col in self.mat.T]

    def with_kind(self, kind: str) -> "LinearMap":
        return replace(self, kind=kind)

    def __repr__(self) -> str:
        return f"LinearMap({self.domain!r} -> {self.codomain!r}, kind={self.kind})"


def linear_map_from_images(
    domain: Algebra,
    codomain: Algebra,
    images: Sequence[Element],
    kind: str = KIND_RAW,
) -> LinearMap:
    if len(images) != domain.dim:
        raise AlgebraMismatchError(
            f"expected {domain.dim} basis images, got {len(images)}"
        )
    cols = []
    for img in images:
        if img.algebra != codomain:
            raise AlgebraMismatchError(
                f"image algebra {img.algebra} does not match codomain {codomain}"
            )
        cols.append(img.flatten())
    return LinearMap(domain, codomain, np.array(cols, dtype=complex).T, kind)


def identity_map(algebra: Algebra) -> LinearMap:
    return LinearMap(algebra, algebra, np.eye(algebra.dim, dtype=complex), KIND_MORPHISM)


# ---------------------------------------------------------------------------
# Morphism validation
# ---------------------------------------------------------------------------

def validate_morphism(f: LinearMap, tol: float = DEFAULT_TOL) -> LinearMap:
    """Check multiplicativity, adjoint preservation, and unit preservation.

    Multiplicativity is checked on all ordered basis pairs, which suffices by
    bilinearity; the pairs sharing a left factor are compared at once through
    left-multiplication matrices.  Raises NotAMorphismError naming the first
    violated identity; returns the map tagged kind="morphism" on success.
    """
    dom, cod = f.domain, f.codomain
    unit_residual = (f(dom.unit()) - cod.unit()).norm()
    if unit_residual > tol:
        raise NotAMorphismError(
            f"unit preservation violated: residual {unit_residual:.3e} > {tol}"
        )
    labels = dom.basis_labels()
    images = f.basis_images()
    for idx, (j, p, q) in enumerate(labels):
        flipped = dom.basis_index(j, q, p)
        residual = (images[idx].adjoint() - images[flipped]).norm()
        if residual > tol:
            raise NotAMorphismError(
                f"adjoint preservation violated at basis ({j},{p},{q}): "
                f"residual {residual:.3e} > {tol}"
            )
    for idx, (j, p, q) in enumerate(labels):
        # f(e_a x) = f(e_a) f(x) for all x, as one matrix identity per e_a
        lhs = f.mat @ left_mult_matrix(dom.basis_element(j, p, q))
        rhs = left_mult_matrix(images[idx]) @ f.mat
        gap = np.abs(lhs - rhs)
        residual = float(gap.max())
        if residual > tol:
            other = labels[int(np.argmax(gap.max(axis=0)))]
            raise NotAMorphismError(
                f"multiplicativity violated at basis pair "
                f"(({j},{p},{q}), {other}): residual {residual:.3e} > {tol}"
            )
    return f.with_kind(KIND_MORPHISM)


def make_morphism(
    domain: Algebra,
    codomain: Algebra,
    images: Sequence[Element],
    tol: float = DEFAULT_TOL,
) -> LinearMap:
    """Build a map from basis images and validate it as a unital *-morphism."""
    return validate_morphism(linear_map_from_images(domain, codomain, images), tol)


# ---------------------------------------------------------------------------
# Complete positivity via Choi blocks
# ---------------------------------------------------------------------------

def choi_blocks(f: LinearMap) -> list[list[np.ndarray]]:
    """Choi matrices of all block components, indexed [codomain i][domain j].

    The (i, j) block is sum_{pq} F_ij(e_pq) (x) e_pq in M_{n_i * m_j}, where
    F_ij restricts the map to domain block j and projects to codomain block i.
    All blocks PSD is equivalent to complete positivity for multi-block
    algebras.
    """
    dom, cod = f.domain, f.codomain
    images = f.basis_images()
    out = [
        [
            np.zeros((n * m, n * m), dtype=complex)
            for m in dom.blocks
        ]
        for n in cod.blocks
    ]
    for idx, (j, p, q) in enumerate(dom.basis_labels()):
        m = dom.blocks[j]
        unit_pq = np.zeros((m, m), dtype=complex)
        unit_pq[p, q] = 1.0
        for i in range(cod.n_blocks):
            out[i][j] += np.kron(images[idx].mats[i], unit_pq)
    return out


def validate_cp_unital(f: LinearMap, tol: float = DEFAULT_TOL) -> LinearMap:
    """Accept iff every Choi block is PSD and the unit maps to the unit.

    Raises NotCompletelyPositiveError reporting the worst block and
    eigenvalue, or NotUnitalError.  Returns the map tagged kind="cp_unital".
    """
    worst_block, worst_eig = None, np.inf
    for i, row in enumerate(choi_blocks(f)):
        for j, choi in enumerate(row):
            herm_defect = float(np.abs(choi - choi.conj().T).max())
            if herm_defect > tol:
                raise NotCompletelyPositiveError(
                    f"Choi block ({i},{j}) is not Hermitian: defect {herm_defect:.3e}",
                    worst_block=(i, j),
                )
            lo = float(np.linalg.eigvalsh((choi + choi.conj().T) / 2.0).min())
            if lo < worst_eig:
                worst_block, worst_eig = (i, j), lo
    if worst_eig < -tol:
        raise NotCompletelyPositiveError(
            f"Choi block {worst_block} has negative eigenvalue {worst_eig:.3e}",
            worst_block=worst_block,
            min_eigenvalue=worst_eig,
        )
    unit_residual = (f(f.domain.unit()) - f.codomain.unit()).norm()
    if unit_residual > tol:
        raise NotUnitalError(
            f"image of the unit differs from the unit by {unit_residual:.3e} > {tol}"
        )
    kind = KIND_MORPHISM if f.kind == KIND_MORPHISM else KIND_CP_UNITAL
    return f.with_kind(kind)


# ---------------------------------------------------------------------------
# Closure operations
# ---------------------------------------------------------------------------

def _combined_kind(k1: str, k2: str) -> str:
    if k1 == KIND_MORPHISM and k2 == KIND_MORPHISM:
        return KIND_MORPHISM
    if k1 in _CP_KINDS and k2 in _CP_KINDS:
        return KIND_CP_UNITAL
    return KIND_RAW


def compose(f1: LinearMap, f2: LinearMap) -> LinearMap:
    """The composition f1 after f2."""
    if f2.codomain != f1.domain:
        raise AlgebraMismatchError(
            f"cannot compose: {f2.codomain} does not match {f1.domain}"
        )
    return LinearMap(
        f2.domain, f1.codomain, f1.mat @ f2.mat, _combined_kind(f1.kind, f2.kind)
    )


def direct_sum_map(f1: LinearMap, f2: LinearMap) -> LinearMap:
    from .algebra import direct_sum_algebra

    dom = direct_sum_algebra(f1.domain, f2.domain)
    cod = direct_sum_algebra(f1.codomain, f2.codomain)
    mat = np.zeros((cod.dim, dom.dim), dtype=complex)
    mat[: f1.codomain.dim, : f1.domain.dim] = f1.mat
    mat[f1.codomain.dim :, f1.domain.dim :] = f2.mat
    return LinearMap(dom, cod, mat, _combined_kind(f1.kind, f2.kind))


def tensor_map(f1: LinearMap, f2: LinearMap) -> LinearMap:
    """Tensor product of maps, respecting the global block-order convention."""
    from .algebra import tensor_algebra

    dom = tensor_algebra(f1.domain, f2.domain)
    cod = tensor_algebra(f1.codomain, f2.codomain)
    perm_dom = layout.kron_to_flat(f1.domain, f2.domain)
    perm_cod = layout.kron_to_flat(f1.codomain, f2.codomain)
    big = np.kron(f1.mat, f2.mat)
    mat = big[np.ix_(perm_cod, perm_dom)]
    return LinearMap(dom, cod, mat, _combined_kind(f1.kind, f2.kind))


def leg_permutation_map(legs: Sequence[Algebra], order: Sequence[int]) -> LinearMap:
    """The *-isomorphism reordering tensor legs, as an explicit coordinate map."""
    from .algebra import tensor_many

    src_alg = tensor_many(list(legs))
    tgt_alg = tensor_many([legs[o] for o in order])
    src = layout.leg_order_permutation(legs, order)
    mat = np.zeros((tgt_alg.dim, src_alg.dim), dtype=complex)
    mat[np.arange(tgt_alg.dim), src] = 1.0
    return LinearMap(src_alg, tgt_alg, mat, KIND_MORPHISM)


def unit_embedding(a: Algebra, c: Algebra) -> LinearMap:
    """The unital morphism x -> x (x) 1 from ``a`` into ``a (x) c``."""
    unit_c = c.unit()
    images = [tensor_element(e, unit_c) for e in a.basis()]
    from .algebra import tensor_algebra

    return linear_map_from_images(a, tensor_algebra(a, c), images, KIND_MORPHISM)


def left_mult_matrix(x: Element) -> np.ndarray:
    """Matrix of left multiplication by x on flattened coordinates."""
    alg = x.algebra
    out = np.zeros((alg.dim, alg.dim), dtype=complex)
    for m, n, off in zip(x.mats, alg.blocks, alg.block_offsets):
        # row-major vec(b x) = (b (x) I) vec(x) blockwise
        out[off : off + n * n, off : off + n * n] = np.kron(m, np.eye(n))
    return out


# ---------------------------------------------------------------------------
# Transitions: trace-dual maps on states
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Transition:
    """The adjoint of a unital CP map, acting on states by rho -> rho o F.

    ``dual_mat`` acts on functional vectors (transposed-density coordinates);
    states of ``source`` map to states of ``target``.
    """

    source: Algebra
    target: Algebra
    dual_mat: np.ndarray

    def __post_init__(self):
        arr = np.array(self.dual_mat, dtype=complex)
        if arr.shape != (self.target.dim, self.source.dim):
            raise AlgebraMismatchError(
                f"dual matrix shape {arr.shape} does not match "
                f"({self.target.dim}, {self.source.dim})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "dual_mat", arr)

    def apply_densities(
        self, densities: Sequence[np.ndarray]
    ) -> tuple[np.ndarray, ...]:
        """Apply the dual map to raw density blocks (no state validation)."""
        vec = np.concatenate([np.asarray(m, dtype=complex).T.reshape(-1) for m in densities])
        if vec.size != self.source.dim:
            raise AlgebraMismatchError(
                f"density coordinates of size {vec.size} do not match {self.source.dim}"
            )
        out_vec = self.dual_mat @ vec
        mats = []
        for n, off in zip(self.target.blocks, self.target.block_offsets):
            mats.append(out_vec[off : off + n * n].reshape(n, n).T)
        return tuple(mats)

    def __call__(self, state: State, tol: float = DEFAULT_TOL) -> State:
        if state.algebra != self.source:
            raise AlgebraMismatchError(
                f"state algebra {state.algebra} does not match source {self.source}"
            )
        return make_state(self.target, self.apply_densities(state.densities), tol=tol)


def adjoint_transition(f: LinearMap, tol: float = DEFAULT_TOL) -> Transition:
    """Transition of a unital CP map F: B -> A, sending states of A to states of B."""
    if f.kind not in _CP_KINDS:
        f = validate_cp_unital(f, tol)
    return Transition(source=f.codomain, target=f.domain, dual_mat=f.mat.T)


# ---------------------------------------------------------------------------
# Representations of multi-block algebras
# ---------------------------------------------------------------------------

def representation_multiplicities(
    block_sizes: Sequence[int], size: int
) -> list[tuple[int, ...]]:
    """All nonnegative integer solutions of sum_j k_j * m_j == size.

    A unital representation of the algebra with the given block sizes on a
    ``size``-dimensional space exists iff a solution exists.
    """
    block_sizes = list(block_sizes)
    solutions: list[tuple[int, ...]] = []

    def extend(prefix: list[int], remaining: int, idx: int) -> None:
        if idx == len(block_sizes) - 1:
            m = block_sizes[idx]
            if remaining % m == 0:
                solutions.append(tuple(prefix + [remaining // m]))
            return
        m = block_sizes[idx]
        for k in range(remaining // m + 1):
            extend(prefix + [k], remaining - k * m, idx + 1)

    if size >= 0:
        extend([], size, 0)
    return solutions


def block_diagonal_representation(
    domain: Algebra, multiplicities: Sequence[int]
) -> LinearMap:
    """The unital morphism packing k_j copies of block j along the diagonal."""
    mults = list(multiplicities)
    if len(mults) != domain.n_blocks:
        raise AlgebraMismatchError(
            f"expected {domain.n_blocks} multiplicities, got {len(mults)}"
        )
    size = sum(k * m for k, m in zip(mults, domain.blocks))
    if size < 1:
        raise UnsupportedShapeError("representation size must be at least 1")
    codomain = make_algebra([size])
    # slot offsets: copies of block j sit consecutively, blocks in order
    slots: list[list[int]] = []
    pos = 0
    for k, m in zip(mults, domain.blocks):
        offs = []
        for _ in range(k):
            offs.append(pos)
            pos += m
        slots.append(offs)
    images = []
    for j, p, q in domain.basis_labels():
        big = np.zeros((size, size), dtype=complex)
        for off in slots[j]:
            big[off + p, off + q] = 1.0
        images.append(codomain.element([big]))
    return linear_map_from_images(domain, codomain, images, KIND_MORPHISM)


# ---------------------------------------------------------------------------
# Stinespring dilation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class StinespringDilation:
    """A dilation F(b) = V* pi(b) V with isometry V: H -> K and morphism pi."""

    k_dim: int
    v: np.ndarray
    pi: LinearMap

    def reproduction_residual(self, f: LinearMap) -> float:
        """max over basis b of || V* pi(b) V - F(b) ||."""
        worst = 0.0
        for b, img in zip(f.domain.basis(), f.basis_images()):
            approx = self.v.conj().T @ self.pi(b).mats[0] @ self.v
            worst = max(worst, float(np.abs(approx - img.mats[0]).max()))
        return worst


def stinespring_dilate(
    f: LinearMap,
    tol: float = DEFAULT_TOL,
    gram_cutoff: float = 1e-10,
) -> StinespringDilation:
    """Dilate a unital CP map into a single matrix block M_h.

    Uses the GNS-type construction on B (x) H with the semi-inner product
    <b (x) xi, b' (x) xi'> = <xi, F(b* b') xi'>; Gram eigenvalues below
    ``gram_cutoff`` are treated as zero, which quotients the null space and
    keeps the dilation minimal up to that rank cutoff.  K_dim <= h * dim(B).
    """
    if f.codomain.n_blocks != 1:
        raise UnsupportedShapeError(
            f"dilation requires a single-block codomain, got {f.codomain}"
        )
    if f.kind not in _CP_KINDS:
        f = validate_cp_unital(f, tol)
    h = f.codomain.blocks[0]
    dom = f.domain
    d_total = dom.dim * h

    images = [img.mats[0] for img in f.basis_images()]

    # Gram over basis pairs: e_{(j,p,q)}* e_{(j',r,s)} = d_{jj'} d_{pr} e_{(j,q,s)}
    gram = np.zeros((d_total, d_total), dtype=complex)
    labels = dom.basis_labels()
    for a_idx, (j, p, q) in enumerate(labels):
        for s in range(dom.blocks[j]):
            b_idx = dom.basis_index(j, p, s)
            blk = images[dom.basis_index(j, q, s)]
            gram[a_idx * h : (a_idx + 1) * h, b_idx * h : (b_idx + 1) * h] = blk

    eigvals, eigvecs = np.linalg.eigh((gram + gram.conj().T) / 2.0)
    keep = eigvals > gram_cutoff
    lam = eigvals[keep]
    u = eigvecs[:, keep]
    k_dim = int(lam.size)
    to_k = (u * np.sqrt(lam)).conj().T          # K x D, preserves the Gram pairing
    from_k = u / np.sqrt(lam)                   # D x K, right inverse modulo null space

    unit_flat = dom.unit().flatten()
    embed_unit = np.kron(unit_flat.reshape(-1, 1), np.eye(h, dtype=complex))
    v = to_k @ embed_unit

    pi_codomain = make_algebra([k_dim])
    pi_images = []
    eye_h = np.eye(h, dtype=complex)
    for e in dom.basis():
        left = np.kron(left_mult_matrix(e), eye_h)
        pi_images.append(pi_codomain.element([to_k @ left @ from_k]))
    pi = make_morphism(dom, pi_codomain, pi_images, tol=max(tol, 1e-8))
    return StinespringDilation(k_dim=k_dim, v=v, pi=pi)
