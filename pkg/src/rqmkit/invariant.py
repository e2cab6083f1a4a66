"""Invariant states of random quantum self-maps and the skew product.

The induced transition is linearized over a real orthonormal Hermitian basis
(generalized Gell-Mann matrices per block plus normalized block identities),
which turns the invariant-state problem into a real fixed-point problem.  The
canonical invariant state is the Cesaro average started from the maximally
mixed state, cleaned by projecting onto the fixed subspace; the skew product
is exposed levelwise on truncated tensor powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    Element,
    State,
    make_state,
    maximally_mixed,
    tensor_many,
    tensor_state,
)
from .errors import AlgebraMismatchError, InvalidStateError, NumericalFailureError
from .maps import LinearMap, identity_map, tensor_map
from .rqm import RandomQuantumMap, induced_transition


def hermitian_basis(algebra: Algebra) -> list[Element]:
    """An orthonormal real basis of the Hermitian part, tr(H_a H_b) = delta_ab."""
    out = []
    for j, n in enumerate(algebra.blocks):
        def with_block(mat):
            mats = [np.zeros((m, m), dtype=complex) for m in algebra.blocks]
            mats[j] = mat
            return Element(algebra, tuple(mats))

        for p in range(n):
            for q in range(p + 1, n):
                sym = np.zeros((n, n), dtype=complex)
                sym[p, q] = sym[q, p] = 1.0 / math.sqrt(2.0)
                out.append(with_block(sym))
                antisym = np.zeros((n, n), dtype=complex)
                antisym[p, q] = -1j / math.sqrt(2.0)
                antisym[q, p] = 1j / math.sqrt(2.0)
                out.append(with_block(antisym))
        for l in range(1, n):
            diag = np.zeros((n, n), dtype=complex)
            for m in range(l):
                diag[m, m] = 1.0
            diag[l, l] = -l
            out.append(with_block(diag / math.sqrt(l * (l + 1))))
        out.append(with_block(np.eye(n, dtype=complex) / math.sqrt(n)))
    return out


def hermitian_coordinates(basis: list[Element], mats) -> np.ndarray:
    """Real coordinates of Hermitian density blocks in the given basis."""
    coords = np.empty(len(basis))
    for a, h in enumerate(basis):
        coords[a] = sum(
            np.einsum("pq,qp->", hm, m) for hm, m in zip(h.mats, mats)
        ).real
    return coords


def densities_from_coordinates(basis: list[Element], coords) -> tuple[np.ndarray, ...]:
    alg = basis[0].algebra
    mats = [np.zeros((n, n), dtype=complex) for n in alg.blocks]
    for c, h in zip(coords, basis):
        for m, hm in zip(mats, h.mats):
            m += c * hm
    return tuple(mats)


def transition_matrix(r: RandomQuantumMap) -> np.ndarray:
    """The induced transition as a real matrix on Hermitian coordinates."""
    if r.domain != r.target:
        raise AlgebraMismatchError(
            f"transition matrix needs a self-map, got {r.domain} -> {r.target}"
        )
    basis = hermitian_basis(r.target)
    transition = induced_transition(r)
    cols = []
    for h in basis:
        out = transition.apply_densities(h.mats)
        cols.append(hermitian_coordinates(basis, out))
    return np.array(cols).T


@dataclass(frozen=True)
class InvariantReport:
    """The fixed subspace dimension and a canonical invariant state."""

    fixed_dim: int
    canonical: State
    residual: float
    iterations: int


def _fixed_space_projector(mat: np.ndarray) -> tuple[np.ndarray, int]:
    d = mat.shape[0]
    _, svals, vt = np.linalg.svd(mat - np.eye(d))
    threshold = 1e-8 * max(1.0, float(svals[0]) if svals.size else 1.0)
    null_rows = vt[svals <= threshold] if svals.size else vt
    fixed_dim = d - int(np.count_nonzero(svals > threshold))
    projector = null_rows.T @ null_rows
    return projector, fixed_dim


def fixed_subspace_projector(r: RandomQuantumMap) -> np.ndarray:
    """Orthogonal projector onto the transition's fixed subspace, in
    Hermitian coordinates."""
    projector, _ = _fixed_space_projector(transition_matrix(r))
    return projector


def invariant_states(
    r: RandomQuantumMap,
    tol: float = DEFAULT_TOL,
    max_iterations: int = 100_000,
) -> InvariantReport:
    """Find the fixed subspace and a canonical invariant state.

    The fixed subspace always contains a state (the invariant set is nonempty);
    the canonical representative is the Cesaro average of the maximally mixed
    state, projected onto the fixed subspace, trace-renormalized, and
    re-validated.  Raises NumericalFailureError if the iteration cap is hit
    before a valid fixed state emerges.
    """
    mat = transition_matrix(r)
    basis = hermitian_basis(r.target)
    projector, fixed_dim = _fixed_space_projector(mat)

    start = hermitian_coordinates(basis, maximally_mixed(r.target).densities)
    current = start.copy()
    average = start.copy()
    last_residual = np.inf
    for k in range(1, max_iterations + 1):
        candidate = projector @ average
        mats = densities_from_coordinates(basis, candidate)
        total = sum(np.trace(m).real for m in mats)
        if abs(total) > 0.5:
            mats = tuple(m / total for m in mats)
            residual_vec = mat @ hermitian_coordinates(basis, mats)
            residual = float(
                np.linalg.norm(residual_vec - hermitian_coordinates(basis, mats))
            )
            last_residual = residual
            if residual <= tol:
                try:
                    canonical = make_state(r.target, mats, tol=tol)
                except InvalidStateError:
                    canonical = None
                if canonical is not None:
                    return InvariantReport(
                        fixed_dim=fixed_dim,
                        canonical=canonical,
                        residual=residual,
                        iterations=k,
                    )
        current = mat @ current
        average = (average * k + current) / (k + 1)
    raise NumericalFailureError(
        "invariant-state iteration did not converge",
        diagnostics={
            "fixed_dim": fixed_dim,
            "iterations": max_iterations,
            "last_residual": float(last_residual),
        },
    )


def verify_invariant(r: RandomQuantumMap, sigma: State) -> float:
    """|| T(sigma) - sigma || in the Frobenius norm on densities."""
    transition = induced_transition(r)
    out = transition.apply_densities(sigma.densities)
    return float(
        math.sqrt(
            sum(
                np.linalg.norm(a - b) ** 2
                for a, b in zip(out, sigma.densities)
            )
        )
    )


def _skew_level_map(r: RandomQuantumMap, level: int) -> LinearMap:
    """phi applied to the A-leg of A (x) C^(x)level, new C-leg first."""
    legs = tensor_many([r.params] * level)
    step = tensor_map(r.phi, identity_map(legs))
    from .algebra import tensor_algebra

    codomain = tensor_algebra(r.target, tensor_many([r.params] * (level + 1)))
    return LinearMap(step.domain, codomain, step.mat, step.kind)


def skew_apply(r: RandomQuantumMap, level: int, x: Element) -> Element:
    """One step of the skew product at the given truncation level.

    Maps a (x) c_1 (x) ... (x) c_level to phi(a) (x) c_1 (x) ... (x) c_level,
    an element one level up with the fresh parameter leg sitting first.
    """
    if r.domain != r.target:
        raise AlgebraMismatchError("skew product needs a self-map")
    step = _skew_level_map(r, level)
    if x.algebra != step.domain:
        raise AlgebraMismatchError(
            f"element lives on {x.algebra}, expected {step.domain}"
        )
    return step(x)


@dataclass(frozen=True)
class SkewReport:
    """Pullback residuals of the skew product at the top level.

    ``unconditional_residual`` checks the identity
    mu_N o skew = (T sigma) (x) nu^(x)(N-1), which holds for every sigma;
    ``max_violation`` compares against mu_{N-1} itself and vanishes exactly
    when sigma is invariant (residual ``invariant_residual``).
    """

    max_violation: float
    unconditional_residual: float
    invariant_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance


def verify_skew_invariance(
    r: RandomQuantumMap, sigma: State, depth: int, tol: float = DEFAULT_TOL
) -> SkewReport:
    if depth < 1:
        raise AlgebraMismatchError(f"depth must be at least 1, got {depth}")
    nu = r.param_state
    mu_low = sigma
    for _ in range(depth - 1):
        mu_low = tensor_state(mu_low, nu)
    mu_top = tensor_state(mu_low, nu)

    transition = induced_transition(r)
    # The pushed functional need not be a valid state for the identity to hold.
    mu_pushed = State(r.target, transition.apply_densities(sigma.densities))
    for _ in range(depth - 1):
        mu_pushed = tensor_state(mu_pushed, nu)

    step = _skew_level_map(r, depth - 1)
    # mu_top o skew as a functional on the lower level
    pulled = step.mat.T @ mu_top.functional_vector()
    max_violation = float(np.abs(pulled - mu_low.functional_vector()).max())
    unconditional = float(np.abs(pulled - mu_pushed.functional_vector()).max())
    return SkewReport(
        max_violation=max_violation,
        unconditional_residual=unconditional,
        invariant_residual=verify_invariant(r, sigma),
        tolerance=tol,
    )
