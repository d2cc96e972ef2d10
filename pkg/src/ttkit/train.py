"""Tensor trains: TT/MPS vectors, TT/MPO matrices and block TT.

Construction from dense data by successive truncated SVDs, entry evaluation,
dense reconstruction, orthogonalization and rounding (recompression).

A TT vector is a chain of order-3 cores ``G[n]`` of shape
``(R[n], I[n], R[n+1])`` with boundary ranks ``R[0] = R[N] = 1``; the
represented entry is the product of the slice matrices ``G[n][:, i_n, :]``.
A TT matrix uses order-4 cores ``(P[n], I[n], J[n], P[n+1])`` with the row
and column indices of each site paired up.  A block TT is a TT vector whose
core at one position carries an extra index of size K, representing K
vectors jointly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

__all__ = [
    "TruncationPolicy",
    "TTVector",
    "TTMatrix",
    "BlockTT",
    "tt_svd",
    "tt_to_full",
    "tt_entry",
    "mpo_svd",
    "mpo_to_full",
    "orthogonalize",
    "tt_round",
    "mpo_round",
    "block_extract",
    "block_move",
    "block_from_tts",
    "random_tt",
    "random_mpo",
    "feasible_ranks",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Relative accuracy target and optional per-bond rank cap."""

    tol: float = 0.0
    max_rank: Optional[int] = None

    def __post_init__(self):
        if not math.isfinite(self.tol) or self.tol < 0:
            raise ValueError(f"tolerance must be finite and >= 0, got {self.tol}")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError(f"max_rank must be positive, got {self.max_rank}")


EXACT = TruncationPolicy(0.0)


def _prepare_cores(cores, ndim: int, copy: bool):
    out = []
    for c in cores:
        arr = (
            np.array(c, dtype=np.float64, order="C")
            if copy
            else np.ascontiguousarray(c, dtype=np.float64)
        )
        if arr.ndim != ndim:
            raise ValueError(f"core must be {ndim}-way, got shape {arr.shape}")
        out.append(arr)
    if not out:
        raise ValueError("a tensor train needs at least one core")
    if out[0].shape[0] != 1 or out[-1].shape[-1] != 1:
        raise ValueError("boundary ranks must equal 1")
    for a, b in zip(out, out[1:]):
        if a.shape[-1] != b.shape[0]:
            raise ValueError(
                f"rank chain broken: {a.shape} does not link to {b.shape}"
            )
    return out


class TTVector:
    """Chain of order-3 cores representing an N-way tensor."""

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray], copy: bool = True):
        self.cores = _prepare_cores(cores, 3, copy)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def mode_sizes(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        return (1,) + tuple(c.shape[2] for c in self.cores)

    def full(self) -> np.ndarray:
        return tt_to_full(self)

    def entry(self, multi_index) -> float:
        return tt_entry(self, multi_index)

    def __repr__(self):
        return f"TTVector(modes={self.mode_sizes}, ranks={self.ranks})"


class TTMatrix:
    """Chain of order-4 cores representing a matrix with paired site indices."""

    __slots__ = ("cores",)

    def __init__(self, cores: Sequence[np.ndarray], copy: bool = True):
        self.cores = _prepare_cores(cores, 4, copy)

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def row_sizes(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def col_sizes(self) -> tuple:
        return tuple(c.shape[2] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        return (1,) + tuple(c.shape[3] for c in self.cores)

    @property
    def shape(self) -> tuple:
        return (
            int(np.prod(self.row_sizes, dtype=np.int64)),
            int(np.prod(self.col_sizes, dtype=np.int64)),
        )

    def full(self) -> np.ndarray:
        return mpo_to_full(self)

    def __repr__(self):
        return (
            f"TTMatrix(rows={self.row_sizes}, cols={self.col_sizes}, "
            f"ranks={self.ranks})"
        )


class BlockTT:
    """TT chain whose core at ``position`` carries an extra index of size K.

    The block core has shape ``(R[p], I[p], K, R[p+1])``; extracting slice k
    of that index yields an ordinary TT vector.
    """

    __slots__ = ("cores", "position")

    def __init__(self, cores: Sequence[np.ndarray], position: int, copy: bool = True):
        position = int(position)
        if not 0 <= position < len(cores):
            raise ValueError(f"block position {position} out of range")
        prepared = []
        for n, c in enumerate(cores):
            want = 4 if n == position else 3
            arr = (
                np.array(c, dtype=np.float64, order="C")
                if copy
                else np.ascontiguousarray(c, dtype=np.float64)
            )
            if arr.ndim != want:
                raise ValueError(
                    f"core {n} must be {want}-way, got shape {arr.shape}"
                )
            prepared.append(arr)
        if prepared[0].shape[0] != 1 or prepared[-1].shape[-1] != 1:
            raise ValueError("boundary ranks must equal 1")
        for a, b in zip(prepared, prepared[1:]):
            if a.shape[-1] != b.shape[0]:
                raise ValueError(
                    f"rank chain broken: {a.shape} does not link to {b.shape}"
                )
        self.cores = prepared
        self.position = position

    @property
    def order(self) -> int:
        return len(self.cores)

    @property
    def num_vectors(self) -> int:
        return self.cores[self.position].shape[2]

    @property
    def mode_sizes(self) -> tuple:
        return tuple(c.shape[1] for c in self.cores)

    @property
    def ranks(self) -> tuple:
        return (1,) + tuple(c.shape[-1] for c in self.cores)

    def full_matrix(self) -> np.ndarray:
        """Dense (prod(modes), K) matrix of the represented vectors."""
        cols = [block_extract(self, k).full().reshape(-1) for k in range(self.num_vectors)]
        return np.stack(cols, axis=1)

    def __repr__(self):
        return (
            f"BlockTT(modes={self.mode_sizes}, ranks={self.ranks}, "
            f"K={self.num_vectors}, position={self.position})"
        )


# ---------------------------------------------------------------------------
# factorization helpers shared by construction, rounding and the solvers


def fix_svd_signs(u: np.ndarray, vt: np.ndarray):
    """Make the largest-magnitude entry of each left singular vector
    nonnegative, compensating in ``vt``; gives reproducible factors."""
    j = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[j, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, vt * signs[:, None]


def _fix_qr_signs(q: np.ndarray, r: np.ndarray):
    d = np.sign(np.diagonal(r)).copy()
    d[d == 0] = 1.0
    return q * d, r * d[:, None]


def select_rank(s: np.ndarray, threshold: float, max_rank: Optional[int]) -> int:
    """Smallest rank whose discarded tail has 2-norm <= threshold (>= 1)."""
    if s.size == 0:
        return 1
    tail = np.cumsum(s[::-1] ** 2)[::-1]
    rank = int(np.count_nonzero(tail > threshold * threshold))
    rank = max(rank, 1)
    if max_rank is not None:
        rank = min(rank, max_rank)
    return rank


def qr_left(core: np.ndarray):
    """QR-factor a 3-way core so its left unfolding has orthonormal columns.

    Returns ``(q_core, r)`` with ``core == q_core . r`` contracted over the
    last axis; the diagonal of ``r`` is forced nonnegative.
    """
    r0, i, r1 = core.shape
    q, r = np.linalg.qr(core.reshape(r0 * i, r1))
    q, r = _fix_qr_signs(q, r)
    return q.reshape(r0, i, -1), r


def qr_right(core: np.ndarray):
    """Mirror of :func:`qr_left`: returns ``(l, q_core)`` with
    ``core == l . q_core`` contracted over the first axis and the right
    unfolding of ``q_core`` having orthonormal rows."""
    r0, i, r1 = core.shape
    q, r = np.linalg.qr(core.reshape(r0, i * r1).T)
    q, r = _fix_qr_signs(q, r)
    return r.T, np.ascontiguousarray(q.T).reshape(-1, i, r1)


# ---------------------------------------------------------------------------
# TT-SVD and reconstruction


def tt_svd(t: np.ndarray, policy: TruncationPolicy = EXACT) -> TTVector:
    """Decompose a dense tensor by a sequence of truncated SVDs.

    The per-bond threshold is ``policy.tol * ||t||_F / sqrt(N-1)``, which
    guarantees overall relative reconstruction error at most ``policy.tol``.
    Cores left of the last are left-orthogonal by construction.
    """
    t = np.ascontiguousarray(t, dtype=np.float64)
    if t.ndim == 0:
        t = t.reshape(1)
    if t.size == 0:
        raise ValueError("cannot decompose an empty tensor")
    shape = t.shape
    n_modes = len(shape)
    if n_modes == 1:
        return TTVector([t.reshape(1, shape[0], 1)], copy=False)
    threshold = policy.tol * np.linalg.norm(t) / math.sqrt(n_modes - 1)
    cores = []
    rank = 1
    rest = t.reshape(-1)
    for n in range(n_modes - 1):
        mat = rest.reshape(rank * shape[n], -1)
        u, s, vt = np.linalg.svd(mat, full_matrices=False)
        new_rank = select_rank(s, threshold, policy.max_rank)
        u, vt = fix_svd_signs(u[:, :new_rank], vt[:new_rank])
        cores.append(u.reshape(rank, shape[n], new_rank))
        rest = s[:new_rank, None] * vt
        rank = new_rank
    cores.append(rest.reshape(rank, shape[-1], 1))
    return TTVector(cores, copy=False)


def tt_to_full(x: TTVector) -> np.ndarray:
    """Contract the chain into a dense tensor of shape ``mode_sizes``."""
    res = x.cores[0][0]  # (I0, R1)
    for core in x.cores[1:]:
        res = np.tensordot(res, core, axes=(res.ndim - 1, 0))
    return np.ascontiguousarray(res[..., 0])


def tt_entry(x: TTVector, multi_index) -> float:
    """Single entry as a product of slice matrices; cost O(sum R R')."""
    idx = tuple(int(i) for i in multi_index)
    if len(idx) != x.order:
        raise ValueError(f"index {idx} does not match order {x.order}")
    v = None
    for core, i in zip(x.cores, idx):
        if not 0 <= i < core.shape[1]:
            raise IndexError(f"index {idx} out of bounds")
        s = core[:, i, :]
        v = s if v is None else v @ s
    return float(v[0, 0])


def mpo_svd(
    mat: np.ndarray,
    row_shape: Sequence[int],
    col_shape: Sequence[int],
    policy: TruncationPolicy = EXACT,
) -> TTMatrix:
    """Decompose a dense matrix into TT/MPO form.

    Reshapes to an order-2N tensor, permutes to the interleaved index order
    (i1, j1, i2, j2, ...), fuses each (i_n, j_n) pair (row index slower) and
    runs the TT-SVD.
    """
    mat = np.ascontiguousarray(mat, dtype=np.float64)
    rows = tuple(int(s) for s in row_shape)
    cols = tuple(int(s) for s in col_shape)
    if len(rows) != len(cols):
        raise ValueError("row and column shapes must have the same length")
    if mat.ndim != 2 or mat.shape != (
        int(np.prod(rows, dtype=np.int64)),
        int(np.prod(cols, dtype=np.int64)),
    ):
        raise ValueError(
            f"matrix {mat.shape} does not factor as {rows} x {cols}"
        )
    n_modes = len(rows)
    t = mat.reshape(rows + cols)
    perm = [x for n in range(n_modes) for x in (n, n_modes + n)]
    fused = t.transpose(perm).reshape([i * j for i, j in zip(rows, cols)])
    vec = tt_svd(fused, policy)
    cores = [
        c.reshape(c.shape[0], i, j, c.shape[2])
        for c, i, j in zip(vec.cores, rows, cols)
    ]
    return TTMatrix(cores, copy=False)


def mpo_to_full(a: TTMatrix) -> np.ndarray:
    """Assemble the dense matrix (prod(rows) x prod(cols))."""
    res = a.cores[0][0]  # (I0, J0, P1)
    for core in a.cores[1:]:
        res = np.tensordot(res, core, axes=(res.ndim - 1, 0))
    res = res[..., 0]  # (I0, J0, I1, J1, ...)
    n_modes = a.order
    perm = list(range(0, 2 * n_modes, 2)) + list(range(1, 2 * n_modes, 2))
    return np.ascontiguousarray(res.transpose(perm)).reshape(a.shape)


# ---------------------------------------------------------------------------
# canonical forms


def orthogonalize(x: TTVector, site: int) -> TTVector:
    """Mixed-canonical form: cores left of ``site`` left-orthogonal, cores
    right of it right-orthogonal; the represented tensor is unchanged."""
    if not 0 <= site < x.order:
        raise ValueError(f"site {site} out of range for order {x.order}")
    cores = [c.copy() for c in x.cores]
    for k in range(site):
        q, r = qr_left(cores[k])
        cores[k] = q
        cores[k + 1] = np.tensordot(r, cores[k + 1], axes=(1, 0))
    for k in range(len(cores) - 1, site, -1):
        l, q = qr_right(cores[k])
        cores[k] = q
        cores[k - 1] = np.tensordot(cores[k - 1], l, axes=(2, 0))
    return TTVector(cores, copy=False)


def tt_round(x: TTVector, policy: TruncationPolicy) -> TTVector:
    """Recompress to (at most) the input ranks within relative accuracy
    ``policy.tol``.

    Two passes: right-to-left QR orthogonalization, then a left-to-right
    truncated-SVD sweep with per-bond threshold ``tol * ||x|| / sqrt(N-1)``.
    The result is left-canonical.
    """
    cores = [c.copy() for c in x.cores]
    n_modes = len(cores)
    if n_modes == 1:
        return TTVector(cores, copy=False)
    for k in range(n_modes - 1, 0, -1):
        l, q = qr_right(cores[k])
        cores[k] = q
        cores[k - 1] = np.tensordot(cores[k - 1], l, axes=(2, 0))
    norm = np.linalg.norm(cores[0])
    threshold = policy.tol * norm / math.sqrt(n_modes - 1)
    for k in range(n_modes - 1):
        r0, i, r1 = cores[k].shape
        u, s, vt = np.linalg.svd(cores[k].reshape(r0 * i, r1), full_matrices=False)
        rank = select_rank(s, threshold, policy.max_rank)
        u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
        cores[k] = u.reshape(r0, i, rank)
        cores[k + 1] = np.tensordot(s[:rank, None] * vt, cores[k + 1], axes=(1, 0))
    return TTVector(cores, copy=False)


def mpo_round(a: TTMatrix, policy: TruncationPolicy) -> TTMatrix:
    """Recompress a TT matrix by rounding its (i, j)-fused TT vector."""
    fused = TTVector(
        [c.reshape(c.shape[0], c.shape[1] * c.shape[2], c.shape[3]) for c in a.cores],
        copy=False,
    )
    rounded = tt_round(fused, policy)
    cores = [
        c.reshape(c.shape[0], i, j, c.shape[2])
        for c, i, j in zip(rounded.cores, a.row_sizes, a.col_sizes)
    ]
    return TTMatrix(cores, copy=False)


# ---------------------------------------------------------------------------
# block TT


def block_extract(x: BlockTT, k: int) -> TTVector:
    """Column ``k`` of a block TT as an ordinary TT vector."""
    if not 0 <= k < x.num_vectors:
        raise IndexError(f"block column {k} out of range [0, {x.num_vectors})")
    cores = []
    for n, c in enumerate(x.cores):
        cores.append(c[:, :, k, :] if n == x.position else c)
    return TTVector(cores)


_BLOCK_TRIM = 1e-14  # relative cut for numerically-zero singular values


def _split_rank(s: np.ndarray) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 1
    return max(1, int(np.count_nonzero(s > s[0] * _BLOCK_TRIM)))


def block_move(x: BlockTT, new_position: int) -> BlockTT:
    """Relocate the block index core by core via SVD-mediated merge/split.

    The block index is fused with the bond being split, so the K represented
    vectors are preserved (up to numerically-zero singular values).
    """
    if not 0 <= new_position < x.order:
        raise ValueError(f"position {new_position} out of range")
    cores = [c.copy() for c in x.cores]
    pos = x.position
    while pos < new_position:
        b, g = cores[pos], cores[pos + 1]
        r0, i, k, r1 = b.shape
        merged = np.tensordot(b, g, axes=(3, 0))  # (r0, i, k, j, r2)
        j, r2 = merged.shape[3], merged.shape[4]
        u, s, vt = np.linalg.svd(merged.reshape(r0 * i, k * j * r2), full_matrices=False)
        rank = _split_rank(s)
        u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
        cores[pos] = u.reshape(r0, i, rank)
        right = (s[:rank, None] * vt).reshape(rank, k, j, r2)
        cores[pos + 1] = np.ascontiguousarray(right.transpose(0, 2, 1, 3))
        pos += 1
    while pos > new_position:
        b, g = cores[pos], cores[pos - 1]
        r1, i, k, r2 = b.shape
        merged = np.tensordot(g, b, axes=(2, 0))  # (r0, j, i, k, r2)
        r0, j = merged.shape[0], merged.shape[1]
        m = merged.transpose(0, 1, 3, 2, 4).reshape(r0 * j * k, i * r2)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        rank = _split_rank(s)
        u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
        cores[pos] = vt.reshape(rank, i, r2)
        left = (u * s[:rank]).reshape(r0, j, k, rank)
        cores[pos - 1] = left
        pos -= 1
    return BlockTT(cores, pos, copy=False)


def block_from_tts(tts: Sequence[TTVector]) -> BlockTT:
    """Join K TT vectors of identical mode sizes into one block TT.

    Uses a direct-sum construction (bond ranks add); the block index sits on
    the last core.
    """
    if not tts:
        raise ValueError("need at least one TT vector")
    modes = tts[0].mode_sizes
    for t in tts:
        if t.mode_sizes != modes:
            raise ValueError("all TT vectors must share mode sizes")
    n_modes = len(modes)
    k_cols = len(tts)
    if n_modes == 1:
        core = np.stack([t.cores[0][:, :, 0] for t in tts], axis=2)[..., None]
        return BlockTT([core], 0, copy=False)
    cores = []
    for n in range(n_modes):
        parts = [t.cores[n] for t in tts]
        if n == 0:
            cores.append(np.concatenate(parts, axis=2))
        elif n < n_modes - 1:
            r0 = sum(p.shape[0] for p in parts)
            r1 = sum(p.shape[2] for p in parts)
            core = np.zeros((r0, modes[n], r1))
            a = b = 0
            for p in parts:
                core[a : a + p.shape[0], :, b : b + p.shape[2]] = p
                a += p.shape[0]
                b += p.shape[2]
            cores.append(core)
        else:
            r0 = sum(p.shape[0] for p in parts)
            core = np.zeros((r0, modes[n], k_cols, 1))
            a = 0
            for col, p in enumerate(parts):
                core[a : a + p.shape[0], :, col, :] = p
                a += p.shape[0]
            cores.append(core)
    return BlockTT(cores, n_modes - 1, copy=False)


# ---------------------------------------------------------------------------
# random construction (used for solver initialization and tests)


def feasible_ranks(mode_sizes: Sequence[int], bond_ranks: Sequence[int]) -> list:
    """Clip an interior rank profile so it is achievable for generic cores.

    Enforces ``r[n] <= min(prod(modes[:n]), prod(modes[n:]))`` together with
    the chain conditions ``r[n] <= r[n-1]*I[n-1]`` and ``r[n] <= I[n]*r[n+1]``.
    Returns the full profile including the boundary 1s.
    """
    modes = [int(m) for m in mode_sizes]
    n_modes = len(modes)
    if len(bond_ranks) != n_modes - 1:
        raise ValueError(f"need {n_modes - 1} interior ranks, got {len(bond_ranks)}")
    r = [1] + [int(v) for v in bond_ranks] + [1]
    for n in range(1, n_modes):
        left = int(np.prod(modes[:n], dtype=np.int64))
        right = int(np.prod(modes[n:], dtype=np.int64))
        r[n] = max(1, min(r[n], left, right))
    for n in range(1, n_modes):
        r[n] = min(r[n], r[n - 1] * modes[n - 1])
    for n in range(n_modes - 1, 0, -1):
        r[n] = min(r[n], modes[n] * r[n + 1])
    return r


def random_tt(mode_sizes, rank, rng) -> TTVector:
    """Random TT with interior ranks clipped to a feasible profile."""
    modes = [int(m) for m in mode_sizes]
    if isinstance(rank, int):
        rank = [rank] * (len(modes) - 1)
    r = feasible_ranks(modes, rank)
    cores = [rng.standard_normal((r[n], modes[n], r[n + 1])) for n in range(len(modes))]
    return TTVector(cores, copy=False)


def random_mpo(row_sizes, col_sizes, rank, rng) -> TTMatrix:
    """Random TT matrix; ranks are clipped against the fused (i, j) modes."""
    rows = [int(m) for m in row_sizes]
    cols = [int(m) for m in col_sizes]
    if len(rows) != len(cols):
        raise ValueError("row and column shapes must have the same length")
    fused = [i * j for i, j in zip(rows, cols)]
    if isinstance(rank, int):
        rank = [rank] * (len(fused) - 1)
    r = feasible_ranks(fused, rank)
    cores = [
        rng.standard_normal((r[n], rows[n], cols[n], r[n + 1]))
        for n in range(len(fused))
    ]
    return TTMatrix(cores, copy=False)
