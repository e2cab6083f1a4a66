"""Index bookkeeping for tensor-product coordinates.

Flattened coordinates of a tensor product differ from the Kronecker product
of flattened coordinates by a fixed permutation; the same is true for
reordering tensor legs.  Both permutations are computed here, once, as index
arrays.  They are the single audited primitive behind tensor products of
maps, the flip in tensor implementations, and leg reordering, so associativity
and ordering bugs are confined to this module.
"""

from __future__ import annotations

import itertools
from typing import Sequence

import numpy as np

from .algebra import Algebra, tensor_many


def kron_to_flat(a: Algebra, b: Algebra) -> np.ndarray:
    """Permutation aligning Kronecker coordinates with tensor coordinates.

    Returns ``perm`` such that for all elements x of ``a`` and y of ``b``::

        tensor_element(x, y).flatten() == np.kron(x.flatten(), y.flatten())[perm]
    """
    dim_b = b.dim
    perm = np.empty(a.dim * b.dim, dtype=np.intp)
    t = 0
    for i, n in enumerate(a.blocks):
        off_a = a.block_offsets[i]
        for j, m in enumerate(b.blocks):
            off_b = b.block_offsets[j]
            for p in range(n):
                for r in range(m):
                    for q in range(n):
                        for s in range(m):
                            alpha = off_a + p * n + q
                            beta = off_b + r * m + s
                            perm[t] = alpha * dim_b + beta
                            t += 1
    return perm


def _mixed_radix(digits: Sequence[int], sizes: Sequence[int]) -> int:
    acc = 0
    for d, s in zip(digits, sizes):
        acc = acc * s + d
    return acc


def leg_order_permutation(
    legs: Sequence[Algebra], order: Sequence[int]
) -> np.ndarray:
    """Source indices realizing a reordering of tensor legs.

    ``order[l]`` names the source leg that lands in target position ``l``.
    Returns ``src`` such that for any element x of the source product::

        reordered.flatten()[t] == x.flatten()[src[t]]

    where ``reordered`` carries the same per-leg factors in the new order.
    """
    legs = list(legs)
    order = list(order)
    if sorted(order) != list(range(len(legs))):
        raise ValueError(f"order {order} is not a permutation of the legs")
    target_legs = [legs[o] for o in order]
    src_alg = tensor_many(legs)
    tgt_alg = tensor_many(target_legs)
    src = np.empty(tgt_alg.dim, dtype=np.intp)

    m = len(legs)
    src_block_counts = [leg.n_blocks for leg in legs]
    tgt_offset = 0
    for bt in itertools.product(*(range(leg.n_blocks) for leg in target_legs)):
        sb = [0] * m
        for l, o in enumerate(order):
            sb[o] = bt[l]
        sizes_t = [target_legs[l].blocks[bt[l]] for l in range(m)]
        sizes_s = [legs[l].blocks[sb[l]] for l in range(m)]
        size = int(np.prod(sizes_t)) if m else 1
        src_block = _mixed_radix(sb, src_block_counts)
        src_off = src_alg.block_offsets[src_block]
        ps = [0] * m
        qs = [0] * m
        for pt in itertools.product(*(range(s) for s in sizes_t)):
            for l, o in enumerate(order):
                ps[o] = pt[l]
            row_s = _mixed_radix(ps, sizes_s)
            row_t = _mixed_radix(pt, sizes_t)
            for qt in itertools.product(*(range(s) for s in sizes_t)):
                for l, o in enumerate(order):
                    qs[o] = qt[l]
                col_s = _mixed_radix(qs, sizes_s)
                col_t = _mixed_radix(qt, sizes_t)
                src[tgt_offset + row_t * size + col_t] = src_off + row_s * size + col_s
        tgt_offset += size * size
    return src
