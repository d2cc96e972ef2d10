"""Chain splitting machinery: interface matrices, frame matrices, and the
cached environment blocks that all sweep solvers consume.

For a TT vector x the frame matrix ``G_neq(n)`` maps the vectorized site-n
core to the full vectorized tensor, ``vec(x) = G_neq(n) @ vec(G[n])``; it is
the Kronecker product of the left interface, an identity of the site's mode
size, and the right interface.  Explicit frame/interface matrices exist to
verify contractions at desk scale and are guarded by a row cap; solvers only
ever touch the cached three-layer environments.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .train import TTMatrix, TTVector

__all__ = [
    "FRAME_ROW_CAP",
    "LOCAL_DIM_CAP",
    "left_interface",
    "right_interface",
    "frame_matrix",
    "frame_matrix_two",
    "merged_core",
    "EnvStack",
    "env_build",
    "env_update_left",
    "env_update_right",
    "effective_operator",
    "effective_operator_two",
    "effective_rhs",
    "effective_rhs_two",
]

FRAME_ROW_CAP = 1 << 16
LOCAL_DIM_CAP = 4096


def _cores_of(x) -> list:
    if isinstance(x, (TTVector, TTMatrix)):
        return x.cores
    if isinstance(x, list):
        return x  # shared on purpose: sweeps mutate cores in place
    return list(x)


def left_interface(x: TTVector, site: int) -> np.ndarray:
    """Unfolding of the subtrain left of ``site``: shape
    ``(R[site], I[0]*...*I[site-1])``.  For site 0 this is the 1x1 identity."""
    cores = x.cores
    if not 0 <= site < len(cores):
        raise ValueError(f"site {site} out of range")
    acc = np.ones((1, 1))  # (prod I, rank)
    for core in cores[:site]:
        acc = np.tensordot(acc, core, axes=(1, 0))
        acc = acc.reshape(-1, acc.shape[-1])
    return np.ascontiguousarray(acc.T)


def right_interface(x: TTVector, site: int) -> np.ndarray:
    """Unfolding of the subtrain right of ``site``: shape
    ``(R[site+1], I[site+1]*...*I[N-1])``."""
    cores = x.cores
    if not 0 <= site < len(cores):
        raise ValueError(f"site {site} out of range")
    acc = np.ones((1, 1))  # (rank, prod I)
    for core in reversed(cores[site + 1 :]):
        acc = np.tensordot(core, acc, axes=(2, 0))
        acc = acc.reshape(acc.shape[0], -1)
    return np.ascontiguousarray(acc)


def _check_frame_size(x: TTVector):
    total = int(np.prod(x.mode_sizes, dtype=np.int64))
    if total > FRAME_ROW_CAP:
        raise ValueError(
            f"dense frame would have {total} rows, above the cap {FRAME_ROW_CAP}"
        )
    return total


def frame_matrix(x: TTVector, site: int) -> np.ndarray:
    """Dense frame matrix at ``site``: ``kron(Lᵀ, I_mode, Rᵀ)`` with L, R the
    interface matrices; satisfies ``vec(x) = frame @ vec(core)``."""
    _check_frame_size(x)
    left = left_interface(x, site).T
    right = right_interface(x, site).T
    mode = x.mode_sizes[site]
    return np.kron(np.kron(left, np.eye(mode)), right)


def frame_matrix_two(x: TTVector, site: int) -> np.ndarray:
    """Two-core frame at sites ``(site, site+1)``; satisfies
    ``vec(x) = frame @ vec(merged_core)``."""
    if site >= x.order - 1:
        raise ValueError(f"two-core frame needs site < {x.order - 1}")
    _check_frame_size(x)
    left = left_interface(x, site).T
    right = right_interface(x, site + 1).T
    i1, i2 = x.mode_sizes[site], x.mode_sizes[site + 1]
    return np.kron(np.kron(left, np.eye(i1 * i2)), right)


def merged_core(x: TTVector, site: int) -> np.ndarray:
    """Supercore contracting sites ``site`` and ``site+1``; shape
    ``(R[site], I[site], I[site+1], R[site+2])``."""
    if site >= x.order - 1:
        raise ValueError(f"merged core needs site < {x.order - 1}")
    return np.tensordot(x.cores[site], x.cores[site + 1], axes=(2, 0))


# ---------------------------------------------------------------------------
# environments


def _absorb_left(env: np.ndarray, bra: np.ndarray, op: np.ndarray, ket: np.ndarray):
    # env (a,p,c); bra (a,i,b); op (p,i,j,q); ket (c,j,d) -> (b,q,d)
    t = np.einsum("apc,aib->pcib", env, bra)
    t = np.einsum("pcib,pijq->cbjq", t, op)
    return np.einsum("cbjq,cjd->bqd", t, ket)


def _absorb_right(env: np.ndarray, bra: np.ndarray, op: np.ndarray, ket: np.ndarray):
    # env (b,q,d); bra (a,i,b); op (p,i,j,q); ket (c,j,d) -> (a,p,c)
    t = np.einsum("bqd,aib->qdai", env, bra)
    t = np.einsum("qdai,pijq->dapj", t, op)
    return np.einsum("dapj,cjd->apc", t, ket)


class EnvStack:
    """Cached left/right partial contractions of ``<bra| op |ket>``.

    ``left[n]`` contracts sites ``< n`` (shape: bra-rank x op-rank x
    ket-rank at bond n); ``right[n]`` contracts sites ``>= n``.  Both ends
    start as 1x1x1 ones.  The stack keeps references to the three core
    lists, so callers that mutate a core must :meth:`invalidate` that site;
    a validity cursor then rejects reads of stale entries.
    """

    def __init__(self, bra, op: TTMatrix, ket):
        self.bra = _cores_of(bra)
        self.op = _cores_of(op)
        self.ket = _cores_of(ket)
        n = len(self.op)
        if len(self.bra) != n or len(self.ket) != n:
            raise ValueError("bra, operator and ket must have equal length")
        self.left = [None] * (n + 1)
        self.right = [None] * (n + 1)
        self.left[0] = np.ones((1, 1, 1))
        self.right[n] = np.ones((1, 1, 1))
        self._lvalid = 0
        self._rvalid = n

    @property
    def order(self) -> int:
        return len(self.op)

    def invalidate(self, site: int):
        """Mark environments that depend on the core at ``site`` stale."""
        self._lvalid = min(self._lvalid, site)
        self._rvalid = max(self._rvalid, site + 1)

    def update_left(self, site: int):
        """Absorb ``site`` into the left environment (computes left[site+1])."""
        if site > self._lvalid:
            raise RuntimeError(f"left environment at site {site} is stale")
        self.left[site + 1] = _absorb_left(
            self.left[site], self.bra[site], self.op[site], self.ket[site]
        )
        self._lvalid = max(self._lvalid, site + 1)

    def update_right(self, site: int):
        """Absorb ``site`` into the right environment (computes right[site])."""
        if site + 1 < self._rvalid:
            raise RuntimeError(f"right environment at site {site} is stale")
        self.right[site] = _absorb_right(
            self.right[site + 1], self.bra[site], self.op[site], self.ket[site]
        )
        self._rvalid = min(self._rvalid, site)

    def left_env(self, n: int) -> np.ndarray:
        if n > self._lvalid:
            raise RuntimeError(f"left environment {n} is stale (valid up to {self._lvalid})")
        return self.left[n]

    def right_env(self, n: int) -> np.ndarray:
        if n < self._rvalid:
            raise RuntimeError(f"right environment {n} is stale (valid from {self._rvalid})")
        return self.right[n]


def env_build(bra, op: TTMatrix, ket) -> EnvStack:
    """Stack primed for a left-to-right sweep: all right environments built."""
    stack = EnvStack(bra, op, ket)
    for site in range(stack.order - 1, -1, -1):
        stack.update_right(site)
    return stack


def env_update_left(stack: EnvStack, site: int):
    stack.update_left(site)


def env_update_right(stack: EnvStack, site: int):
    stack.update_right(site)


def _check_local_dim(dim: int, cap: Optional[int]):
    cap = LOCAL_DIM_CAP if cap is None else cap
    if dim > cap:
        raise ValueError(
            f"local problem of size {dim} exceeds the cap {cap}; "
            "reduce ranks or raise the cap explicitly"
        )


def effective_operator(stack: EnvStack, site: int, cap: Optional[int] = None) -> np.ndarray:
    """Dense local operator at ``site``: rows pair with the bra core's
    vectorization, columns with the ket core's."""
    env_l = stack.left_env(site)
    env_r = stack.right_env(site + 1)
    op = stack.op[site]
    rows = env_l.shape[0] * op.shape[1] * env_r.shape[0]
    cols = env_l.shape[2] * op.shape[2] * env_r.shape[2]
    _check_local_dim(max(rows, cols), cap)
    h = np.einsum("apc,pijq,bqd->aibcjd", env_l, op, env_r, optimize=True)
    return h.reshape(rows, cols)


def effective_operator_two(stack: EnvStack, site: int, cap: Optional[int] = None) -> np.ndarray:
    """Two-site local operator over the merged supercore at (site, site+1)."""
    env_l = stack.left_env(site)
    env_r = stack.right_env(site + 2)
    op = np.einsum("pabq,qcdr->pacbdr", stack.op[site], stack.op[site + 1])
    rows = env_l.shape[0] * op.shape[1] * op.shape[2] * env_r.shape[0]
    cols = env_l.shape[2] * op.shape[3] * op.shape[4] * env_r.shape[2]
    _check_local_dim(max(rows, cols), cap)
    h = np.einsum("apc,pikjlq,bqd->aikbcjld", env_l, op, env_r, optimize=True)
    return h.reshape(rows, cols)


def effective_rhs(stack: EnvStack, site: int, cap: Optional[int] = None) -> np.ndarray:
    """Local right-hand side at ``site``: the stack's ket chain contracted
    against the bra frame, ``frame(bra)ᵀ · op · ket``."""
    env_l = stack.left_env(site)
    env_r = stack.right_env(site + 1)
    op, ket = stack.op[site], stack.ket[site]
    dim = env_l.shape[0] * op.shape[1] * env_r.shape[0]
    _check_local_dim(dim, cap)
    t = np.einsum("apc,cjd->apjd", env_l, ket)
    t = np.einsum("apjd,pijq->aidq", t, op)
    v = np.einsum("aidq,bqd->aib", t, env_r)
    return v.reshape(dim)


def effective_rhs_two(stack: EnvStack, site: int, cap: Optional[int] = None) -> np.ndarray:
    """Two-site analogue of :func:`effective_rhs`."""
    env_l = stack.left_env(site)
    env_r = stack.right_env(site + 2)
    op = np.einsum("pabq,qcdr->pacbdr", stack.op[site], stack.op[site + 1])
    ket = np.tensordot(stack.ket[site], stack.ket[site + 1], axes=(2, 0))
    dim = env_l.shape[0] * op.shape[1] * op.shape[2] * env_r.shape[0]
    _check_local_dim(dim, cap)
    v = np.einsum("apc,pikjlq,cjld,bqd->aikb", env_l, op, ket, env_r, optimize=True)
    return v.reshape(dim)
