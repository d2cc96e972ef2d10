"""Arithmetic in TT formats: addition, scaling, inner products and norms,
operator-vector and operator-operator products.

Products are exact (bond ranks multiply); recompression is explicit via the
``policy`` argument and never happens behind the caller's back.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .train import (
    TruncationPolicy,
    TTMatrix,
    TTVector,
    mpo_round,
    orthogonalize,
    tt_round,
)

__all__ = [
    "tt_add",
    "tt_scale",
    "tt_inner",
    "tt_norm",
    "mpo_apply",
    "mpo_mul",
    "mpo_transpose",
    "eye_mpo",
    "diagonal_mpo",
]


def tt_add(x: TTVector, y: TTVector) -> TTVector:
    """Exact sum; interior bond ranks add (block-diagonal core stacking)."""
    if x.mode_sizes != y.mode_sizes:
        raise ValueError(f"mode sizes differ: {x.mode_sizes} vs {y.mode_sizes}")
    n_modes = x.order
    if n_modes == 1:
        return TTVector([x.cores[0] + y.cores[0]])
    cores = []
    for n, (a, b) in enumerate(zip(x.cores, y.cores)):
        if n == 0:
            cores.append(np.concatenate([a, b], axis=2))
        elif n == n_modes - 1:
            cores.append(np.concatenate([a, b], axis=0))
        else:
            core = np.zeros((a.shape[0] + b.shape[0], a.shape[1], a.shape[2] + b.shape[2]))
            core[: a.shape[0], :, : a.shape[2]] = a
            core[a.shape[0] :, :, a.shape[2] :] = b
            cores.append(core)
    return TTVector(cores, copy=False)


def tt_scale(x: TTVector, alpha: float) -> TTVector:
    """Scale by multiplying the first core; ranks are unchanged."""
    cores = [x.cores[0] * float(alpha)] + [c.copy() for c in x.cores[1:]]
    return TTVector(cores, copy=False)


def tt_inner(x: TTVector, y: TTVector) -> float:
    """Euclidean inner product of the represented vectors, evaluated by a
    left-to-right zip contraction (cost O(N I R^3); no dense intermediate)."""
    if x.mode_sizes != y.mode_sizes:
        raise ValueError(f"mode sizes differ: {x.mode_sizes} vs {y.mode_sizes}")
    v = np.ones((1, 1))
    for a, b in zip(x.cores, y.cores):
        t = np.tensordot(v, a, axes=(0, 0))  # (rb, i, ra')
        v = np.tensordot(t, b, axes=((0, 1), (0, 1)))  # (ra', rb')
    return float(v[0, 0])


def tt_norm(x: TTVector) -> float:
    """Frobenius norm, computed stably as the norm of the center core of the
    mixed-canonical form."""
    return float(np.linalg.norm(orthogonalize(x, x.order - 1).cores[-1]))


def mpo_apply(a: TTMatrix, x: TTVector, policy: Optional[TruncationPolicy] = None) -> TTVector:
    """Operator-vector product in TT format.

    Site cores combine pairwise, so before rounding the bond ranks are the
    exact products ``Q[n] = P[n] * R[n]``.  Pass a :class:`TruncationPolicy`
    to recompress the result; ``None`` keeps the exact product.
    """
    if a.col_sizes != x.mode_sizes:
        raise ValueError(
            f"operator columns {a.col_sizes} do not match vector modes {x.mode_sizes}"
        )
    cores = []
    for ac, xc in zip(a.cores, x.cores):
        c = np.einsum("aijb,cjd->acibd", ac, xc)
        p0, r0, i, p1, r1 = c.shape
        cores.append(c.reshape(p0 * r0, i, p1 * r1))
    y = TTVector(cores, copy=False)
    return y if policy is None else tt_round(y, policy)


def mpo_mul(a: TTMatrix, b: TTMatrix, policy: Optional[TruncationPolicy] = None) -> TTMatrix:
    """Operator-operator product; pre-rounding bond ranks multiply."""
    if a.col_sizes != b.row_sizes:
        raise ValueError(
            f"inner mode sizes differ: {a.col_sizes} vs {b.row_sizes}"
        )
    cores = []
    for ac, bc in zip(a.cores, b.cores):
        c = np.einsum("aijb,cjkd->acikbd", ac, bc)
        p0, r0, i, k, p1, r1 = c.shape
        cores.append(c.reshape(p0 * r0, i, k, p1 * r1))
    y = TTMatrix(cores, copy=False)
    return y if policy is None else mpo_round(y, policy)


def mpo_transpose(a: TTMatrix) -> TTMatrix:
    """Transpose by swapping the row/column index of every core."""
    return TTMatrix([c.transpose(0, 2, 1, 3) for c in a.cores])


def eye_mpo(mode_sizes) -> TTMatrix:
    """Identity operator with all bond ranks 1."""
    cores = [np.eye(int(i))[None, :, :, None] for i in mode_sizes]
    return TTMatrix(cores, copy=False)


def diagonal_mpo(x: TTVector) -> TTMatrix:
    """Diagonal operator whose diagonal is the vector represented by ``x``;
    ranks are inherited."""
    cores = []
    for g in x.cores:
        r0, i, r1 = g.shape
        c = np.zeros((r0, i, i, r1))
        idx = np.arange(i)
        c[:, idx, idx, :] = g
        cores.append(c)
    return TTMatrix(cores, copy=False)
