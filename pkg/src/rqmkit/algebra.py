"""Finite-dimensional C*-algebras realized as direct sums of matrix blocks.

An algebra is described by its block sizes (n_1, ..., n_k); its elements are
tuples of complex matrices, one n_i x n_i block each.  States are stored as
density blocks paired with elements through the trace, so positivity checks
reduce to eigenvalue checks.  All values are immutable after construction and
every operation is a pure function, safe for concurrent use.

Convention used throughout the package: tensor products order blocks
lexicographically with the LEFT factor outer, and elements flatten to
coordinate vectors by concatenating row-major blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Iterator, Sequence

import numpy as np

from .errors import AlgebraMismatchError, InvalidAlgebraError, InvalidStateError

#: Default tolerance for PSD and equality checks, overridable per call.
DEFAULT_TOL = 1e-9


def _frozen_complex(data) -> np.ndarray:
    arr = np.array(data, dtype=complex)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Algebra:
    """A direct sum of full complex matrix algebras, keyed by block sizes."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(n) for n in self.blocks))

    @cached_property
    def dim(self) -> int:
        """Complex dimension: the sum of squared block sizes."""
        return int(sum(n * n for n in self.blocks))

    @cached_property
    def block_offsets(self) -> tuple[int, ...]:
        """Starting flat coordinate of each block."""
        offsets, acc = [], 0
        for n in self.blocks:
            offsets.append(acc)
            acc += n * n
        return tuple(offsets)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def unit(self) -> "Element":
        return Element(self, tuple(np.eye(n, dtype=complex) for n in self.blocks))

    def zero(self) -> "Element":
        return Element(
            self, tuple(np.zeros((n, n), dtype=complex) for n in self.blocks)
        )

    def element(self, mats: Sequence[np.ndarray]) -> "Element":
        return Element(self, tuple(mats))

    def basis_labels(self) -> list[tuple[int, int, int]]:
        """All (block, row, col) matrix-unit labels in flat coordinate order."""
        return [
            (j, p, q)
            for j, n in enumerate(self.blocks)
            for p in range(n)
            for q in range(n)
        ]

    def basis_index(self, block: int, row: int, col: int) -> int:
        n = self.blocks[block]
        return self.block_offsets[block] + row * n + col

    def basis_element(self, block: int, row: int, col: int) -> "Element":
        mats = [np.zeros((n, n), dtype=complex) for n in self.blocks]
        mats[block][row, col] = 1.0
        return Element(self, tuple(mats))

    def basis(self) -> Iterator["Element"]:
        for j, p, q in self.basis_labels():
            yield self.basis_element(j, p, q)

    def unflatten(self, vec: np.ndarray) -> "Element":
        """Inverse of :meth:`Element.flatten`."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != self.dim:
            raise AlgebraMismatchError(
                f"coordinate vector has size {vec.size}, algebra has dim {self.dim}"
            )
        mats = [
            vec[off : off + n * n].reshape(n, n)
            for n, off in zip(self.blocks, self.block_offsets)
        ]
        return Element(self, tuple(mats))

    def __repr__(self) -> str:
        return f"Algebra{list(self.blocks)}"


def make_algebra(blocks: Sequence[int]) -> Algebra:
    """Validate a block list and build the algebra descriptor."""
    blocks = tuple(blocks)
    if not blocks:
        raise InvalidAlgebraError("block list must be nonempty")
    for n in blocks:
        if int(n) != n or int(n) < 1:
            raise InvalidAlgebraError(f"block sizes must be positive integers, got {n!r}")
    return Algebra(tuple(int(n) for n in blocks))


def trivial_algebra() -> Algebra:
    """The scalars, a single 1x1 block."""
    return Algebra((1,))


@dataclass(frozen=True, eq=False)
class Element:
    """A value of an :class:`Algebra`: one complex matrix per block."""

    algebra: Algebra
    mats: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.mats) != self.algebra.n_blocks:
            raise AlgebraMismatchError(
                f"expected {self.algebra.n_blocks} blocks, got {len(self.mats)}"
            )
        frozen = []
        for m, n in zip(self.mats, self.algebra.blocks):
            arr = _frozen_complex(m)
            if arr.shape != (n, n):
                raise AlgebraMismatchError(
                    f"block of shape {arr.shape} does not match size {n}"
                )
            frozen.append(arr)
        object.__setattr__(self, "mats", tuple(frozen))

    def _require_same_algebra(self, other: "Element") -> None:
        if not isinstance(other, Element):
            raise TypeError(f"expected Element, got {type(other).__name__}")
        if other.algebra != self.algebra:
            raise AlgebraMismatchError(
                f"elements live in different algebras: {self.algebra} vs {other.algebra}"
            )

    def __add__(self, other: "Element") -> "Element":
        self._require_same_algebra(other)
        return Element(self.algebra, tuple(a + b for a, b in zip(self.mats, other.mats)))

    def __sub__(self, other: "Element") -> "Element":
        self._require_same_algebra(other)
        return Element(self.algebra, tuple(a - b for a, b in zip(self.mats, other.mats)))

    def __neg__(self) -> "Element":
        return Element(self.algebra, tuple(-a for a in self.mats))

    def __mul__(self, other) -> "Element":
        if isinstance(other, Element):
            self._require_same_algebra(other)
            return Element(
                self.algebra, tuple(a @ b for a, b in zip(self.mats, other.mats))
            )
        return Element(self.algebra, tuple(complex(other) * a for a in self.mats))

    def __rmul__(self, other) -> "Element":
        return Element(self.algebra, tuple(complex(other) * a for a in self.mats))

    def adjoint(self) -> "Element":
        """Blockwise conjugate transpose."""
        return Element(self.algebra, tuple(a.conj().T for a in self.mats))

    def flatten(self) -> np.ndarray:
        """Row-major concatenation of the blocks into one coordinate vector."""
        return np.concatenate([a.reshape(-1) for a in self.mats])

    def norm(self) -> float:
        """Largest entry magnitude across all blocks."""
        return max(float(np.abs(a).max()) if a.size else 0.0 for a in self.mats)

    def __repr__(self) -> str:
        return f"Element({self.algebra!r})"


def is_hermitian_element(a: Element, tol: float = DEFAULT_TOL) -> bool:
    return all(np.abs(m - m.conj().T).max() <= tol for m in a.mats)


def is_positive_element(a: Element, tol: float = DEFAULT_TOL) -> bool:
    """True iff every block is Hermitian within tol with eigenvalues >= -tol."""
    if not is_hermitian_element(a, tol):
        return False
    for m in a.mats:
        herm = (m + m.conj().T) / 2.0
        if np.linalg.eigvalsh(herm).min() < -tol:
            return False
    return True


# ---------------------------------------------------------------------------
# Tensor products and direct sums
# ---------------------------------------------------------------------------

def tensor_algebra(a: Algebra, b: Algebra) -> Algebra:
    """Blocks are the products n_i * m_j ordered lexicographically, left outer."""
    return Algebra(tuple(n * m for n in a.blocks for m in b.blocks))


def tensor_many(algebras: Sequence[Algebra]) -> Algebra:
    """Iterated tensor product; the empty product is the scalars."""
    return reduce(tensor_algebra, algebras, trivial_algebra())


def tensor_element(x: Element, y: Element) -> Element:
    out = tensor_algebra(x.algebra, y.algebra)
    mats = tuple(np.kron(a, b) for a in x.mats for b in y.mats)
    return Element(out, mats)


def direct_sum_algebra(a: Algebra, b: Algebra) -> Algebra:
    return Algebra(a.blocks + b.blocks)


def direct_sum_element(x: Element, y: Element) -> Element:
    return Element(direct_sum_algebra(x.algebra, y.algebra), x.mats + y.mats)


# ---------------------------------------------------------------------------
# States
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class State:
    """A positive unital functional stored as one density block per algebra block.

    Evaluation pairs densities with elements by the trace:
    ``state.evaluate(a) == sum_i tr(rho_i a_i)``.  Use :func:`make_state` to
    construct validated states.
    """

    algebra: Algebra
    densities: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.densities) != self.algebra.n_blocks:
            raise InvalidStateError(
                f"expected {self.algebra.n_blocks} density blocks, "
                f"got {len(self.densities)}"
            )
        frozen = []
        for m, n in zip(self.densities, self.algebra.blocks):
            arr = _frozen_complex(m)
            if arr.shape != (n, n):
                raise InvalidStateError(
                    f"density block of shape {arr.shape} does not match size {n}"
                )
            frozen.append(arr)
        object.__setattr__(self, "densities", tuple(frozen))

    def evaluate(self, a: Element) -> complex:
        if a.algebra != self.algebra:
            raise AlgebraMismatchError(
                f"element algebra {a.algebra} does not match state algebra {self.algebra}"
            )
        return complex(
            sum(np.einsum("pq,qp->", rho, m) for rho, m in zip(self.densities, a.mats))
        )

    def functional_vector(self) -> np.ndarray:
        """Coordinates of the functional: ``evaluate(a) == vec @ a.flatten()``."""
        return np.concatenate([rho.T.reshape(-1) for rho in self.densities])

    def __repr__(self) -> str:
        return f"State({self.algebra!r})"


def make_state(
    algebra: Algebra, densities: Sequence[np.ndarray], tol: float = DEFAULT_TOL
) -> State:
    """Validate density blocks (Hermitian, PSD, total trace one) and build a State."""
    state = State(algebra, tuple(densities))
    for i, rho in enumerate(state.densities):
        if np.abs(rho - rho.conj().T).max() > tol:
            raise InvalidStateError(f"density block {i} is not Hermitian within {tol}")
        herm = (rho + rho.conj().T) / 2.0
        lo = float(np.linalg.eigvalsh(herm).min())
        if lo < -tol:
            raise InvalidStateError(
                f"density block {i} has negative eigenvalue {lo:.3e}"
            )
    total = complex(sum(np.trace(rho) for rho in state.densities))
    if abs(total - 1.0) > tol:
        raise InvalidStateError(f"total trace is {total}, expected 1 within {tol}")
    return state


def maximally_mixed(algebra: Algebra) -> State:
    """The normalized trace: identity blocks divided by the total matrix size."""
    total = sum(algebra.blocks)
    return State(
        algebra, tuple(np.eye(n, dtype=complex) / total for n in algebra.blocks)
    )


def state_from_probabilities(
    algebra: Algebra, probs: Sequence[float], tol: float = DEFAULT_TOL
) -> State:
    """Diagonal state on a commutative algebra (all blocks of size one)."""
    if any(n != 1 for n in algebra.blocks):
        raise InvalidStateError("probability states require all blocks of size 1")
    if len(probs) != algebra.n_blocks:
        raise InvalidStateError(
            f"expected {algebra.n_blocks} probabilities, got {len(probs)}"
        )
    return make_state(
        algebra, [np.array([[p]], dtype=complex) for p in probs], tol=tol
    )


def tensor_state(s: State, t: State) -> State:
    """Kronecker products of densities in the tensor block order."""
    out = tensor_algebra(s.algebra, t.algebra)
    densities = tuple(np.kron(a, b) for a in s.densities for b in t.densities)
    return State(out, densities)
