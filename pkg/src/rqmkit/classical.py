"""Finite-space probability: kernels, random maps, and their quantum lifts.

Finite spaces stand in for compact spaces, row-stochastic matrices for
kernels, and tables X x Z -> Y with a weight vector on Z for random
continuous maps.  Everything lifts into the quantum modules over commutative
algebras, so the classical formulas double as a regression oracle for the
quantum ones.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    Algebra,
    make_algebra,
    state_from_probabilities,
)
from .errors import AlgebraMismatchError, InvalidStateError, UnsupportedShapeError
from .maps import (
    LinearMap,
    linear_map_from_images,
    validate_cp_unital,
    validate_morphism,
)
from .rqm import QuantumFamily, RandomQuantumMap


@dataclass(frozen=True)
class FiniteSpace:
    """A finite set of points, optionally labeled."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise InvalidStateError(f"space size must be at least 1, got {self.size}")
        if self.labels is not None and len(self.labels) != self.size:
            raise InvalidStateError("label count does not match space size")


@dataclass(frozen=True, eq=False)
class Kernel:
    """A row-stochastic matrix; row x is the distribution of the next point."""

    matrix: np.ndarray

    def __post_init__(self):
        arr = np.array(self.matrix, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    @property
    def x_size(self) -> int:
        return self.matrix.shape[0]

    @property
    def y_size(self) -> int:
        return self.matrix.shape[1]


def make_kernel(matrix, tol: float = DEFAULT_TOL) -> Kernel:
    """Validate nonnegativity and unit row sums; errors name the bad row."""
    arr = np.array(matrix, dtype=float)
    if arr.ndim != 2:
        raise UnsupportedShapeError(f"kernel must be a matrix, got shape {arr.shape}")
    for x, row in enumerate(arr):
        if row.min() < -tol:
            raise InvalidStateError(
                f"kernel row {x} has negative entry {row.min():.3e}"
            )
        if abs(row.sum() - 1.0) > tol:
            raise InvalidStateError(
                f"kernel row {x} sums to {row.sum()}, expected 1 within {tol}"
            )
    return Kernel(arr)


@dataclass(frozen=True, eq=False)
class ClassicalRandomMap:
    """A table phi: X x Z -> Y with a probability vector on Z."""

    x: FiniteSpace
    y: FiniteSpace
    z: FiniteSpace
    table: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=int)
        if table.shape != (self.x.size, self.z.size):
            raise UnsupportedShapeError(
                f"table shape {table.shape} does not match (|X|, |Z|) = "
                f"({self.x.size}, {self.z.size})"
            )
        if table.min() < 0 or table.max() >= self.y.size:
            raise InvalidStateError("table values must be points of Y")
        nu = np.array(self.nu, dtype=float)
        if nu.shape != (self.z.size,):
            raise UnsupportedShapeError(
                f"weight vector of shape {nu.shape} does not match |Z| = {self.z.size}"
            )
        if nu.min() < -DEFAULT_TOL or abs(nu.sum() - 1.0) > DEFAULT_TOL:
            raise InvalidStateError(f"weights {nu} are not a probability vector")
        table.setflags(write=False)
        nu.setflags(write=False)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "nu", nu)


def kernel_of_random_map(m: ClassicalRandomMap) -> Kernel:
    """K[x, y] = total weight of parameters sending x to y."""
    mat = np.zeros((m.x.size, m.y.size))
    for x in range(m.x.size):
        for z in range(m.z.size):
            mat[x, m.table[x, z]] += m.nu[z]
    return Kernel(mat)


def commutative_algebra(space: FiniteSpace | int) -> Algebra:
    size = space.size if isinstance(space, FiniteSpace) else int(space)
    return make_algebra([1] * size)


def map_of_kernel(k: Kernel, tol: float = DEFAULT_TOL) -> LinearMap:
    """The averaging operator f -> (x -> sum_y K[x,y] f(y)) on point functions."""
    domain = commutative_algebra(k.y_size)
    codomain = commutative_algebra(k.x_size)
    out = LinearMap(domain, codomain, k.matrix.astype(complex))
    return validate_cp_unital(out, tol)


def kernel_of_map(f: LinearMap, tol: float = DEFAULT_TOL) -> Kernel:
    """Inverse of :func:`map_of_kernel` for maps between commutative algebras."""
    if any(n != 1 for n in f.domain.blocks) or any(n != 1 for n in f.codomain.blocks):
        raise UnsupportedShapeError("kernel extraction needs commutative algebras")
    if np.abs(f.mat.imag).max() > tol:
        raise InvalidStateError("map has imaginary entries; not a kernel operator")
    return make_kernel(f.mat.real, tol)


def lift_random_map(m: ClassicalRandomMap, tol: float = DEFAULT_TOL) -> RandomQuantumMap:
    """Re-express a classical random map as a random quantum map.

    The family morphism sends the point function delta_y to the indicator of
    {(x, z): table[x, z] = y} inside C(X) (x) C(Z); the parameter state is the
    diagonal state with weights nu.
    """
    from .algebra import tensor_algebra

    cx = commutative_algebra(m.x)
    cz = commutative_algebra(m.z)
    cy = commutative_algebra(m.y)
    cxz = tensor_algebra(cx, cz)
    images = []
    for y in range(m.y.size):
        mats = [
            np.array([[1.0 if m.table[x, z] == y else 0.0]], dtype=complex)
            for x in range(m.x.size)
            for z in range(m.z.size)
        ]
        images.append(cxz.element(mats))
    phi = validate_morphism(linear_map_from_images(cy, cxz, images), tol)
    family = QuantumFamily(cx, cz, phi)
    return RandomQuantumMap(family, state_from_probabilities(cz, list(m.nu)))


def diamond_random_maps(
    first: ClassicalRandomMap, then: ClassicalRandomMap
) -> ClassicalRandomMap:
    """Compose tables: apply ``first``, then ``then``; parameters multiply."""
    if first.y.size != then.x.size:
        raise AlgebraMismatchError(
            f"maps do not compose: first lands in {first.y.size} points, "
            f"second starts from {then.x.size}"
        )
    z_total = FiniteSpace(first.z.size * then.z.size)
    table = np.zeros((first.x.size, z_total.size), dtype=int)
    nu = np.zeros(z_total.size)
    for z1 in range(first.z.size):
        for z2 in range(then.z.size):
            zz = z1 * then.z.size + z2
            nu[zz] = first.nu[z1] * then.nu[z2]
            for x in range(first.x.size):
                table[x, zz] = then.table[first.table[x, z1], z2]
    return ClassicalRandomMap(first.x, then.y, z_total, table, nu)


def chain_marginal(
    kernels: Sequence[Kernel], sigma: Sequence[float], n: int
) -> np.ndarray:
    """The distribution sigma K_1 ... K_n after n steps."""
    dist = np.array(sigma, dtype=float)
    if n > len(kernels):
        raise AlgebraMismatchError(
            f"marginal at step {n} needs {n} kernels, got {len(kernels)}"
        )
    for k in kernels[:n]:
        if k.x_size != dist.size:
            raise AlgebraMismatchError("kernel sizes do not chain")
        dist = dist @ k.matrix
    return dist


def implement_kernel(k: Kernel) -> ClassicalRandomMap:
    """Construct a classical random map whose kernel is exactly ``k``.

    The parameter space is the common refinement of the cumulative partitions
    of all rows: each atom is an interval of [0, 1] lying inside exactly one
    cumulative cell of every row, so sending (x, atom) to that row's cell
    reproduces every row weight as a telescoping sum.  With dyadic kernel
    entries the round trip is exact in floating point.
    """
    cums = np.cumsum(k.matrix, axis=1)
    cums[:, -1] = 1.0  # pin the common endpoint; rows sum to 1 within tolerance
    points = sorted(
        {0.0, 1.0} | {float(c) for row in cums for c in row if 0.0 < c < 1.0}
    )
    atoms = [(lo, hi) for lo, hi in zip(points, points[1:]) if hi > lo]
    z = FiniteSpace(len(atoms))
    nu = np.array([hi - lo for lo, hi in atoms])
    table = np.zeros((k.x_size, z.size), dtype=int)
    for x in range(k.x_size):
        for t, (_, hi) in enumerate(atoms):
            table[x, t] = int(np.searchsorted(cums[x], hi, side="left"))
    return ClassicalRandomMap(
        FiniteSpace(k.x_size), FiniteSpace(k.y_size), z, table, nu
    )


def stationary_distribution(k: Kernel, tol: float = 1e-9) -> np.ndarray:
    """Stationary row vector of a stochastic matrix via its eigenvectors.

    Independent of the quantum fixed-point solver; meant for cross-checks on
    irreducible kernels, where the stationary distribution is unique.
    """
    eigvals, eigvecs = np.linalg.eig(k.matrix.T)
    idx = int(np.argmin(np.abs(eigvals - 1.0)))
    if abs(eigvals[idx] - 1.0) > 1e-6:
        raise InvalidStateError("kernel has no eigenvalue close to 1")
    vec = eigvecs[:, idx].real
    total = vec.sum()
    if abs(total) < tol:
        raise InvalidStateError("stationary eigenvector has vanishing total mass")
    vec = vec / total
    return np.where(np.abs(vec) < tol, 0.0, vec)


def enumerate_paths_marginal(
    maps: Sequence[ClassicalRandomMap], sigma: Sequence[float], n: int
) -> np.ndarray:
    """Brute-force marginal at step n by summing over all parameter paths."""
    sigma = np.array(sigma, dtype=float)
    out = np.zeros(maps[n - 1].y.size if n else sigma.size)
    z_ranges = [range(m.z.size) for m in maps[:n]]
    for x0 in range(sigma.size):
        for zs in itertools.product(*z_ranges):
            weight = sigma[x0]
            point = x0
            for m, zv in zip(maps[:n], zs):
                weight *= m.nu[zv]
                point = m.table[point, zv]
            out[point] += weight
    return out
