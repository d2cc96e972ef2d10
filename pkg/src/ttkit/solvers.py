"""Alternating-sweep optimizers in TT format.

All solvers share one engine: the iterate is kept mixed-canonical with an
"active" site holding the current local solution (K columns for the block
solvers); dense local problems are assembled from cached environments,
solved exactly, and the active site travels with the sweep, left to right
and back.  Because the frames are orthonormal, every local solve can only
improve the global objective, so the per-half-sweep trajectory is monotone.

Rank policies: the default is single-site updates at the initial bond ranks
(the block index carries its exact rank across bonds); ``adaptive=True``
switches to two-site updates where the merged supercore is solved and split
by a truncated SVD, letting ranks grow or shrink as needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg

from .algebra import mpo_apply, mpo_mul, mpo_transpose, tt_add, tt_norm, tt_scale
from .frames import (
    EnvStack,
    effective_operator,
    effective_operator_two,
    effective_rhs,
    effective_rhs_two,
    env_build,
)
from .train import (
    BlockTT,
    TruncationPolicy,
    TTMatrix,
    TTVector,
    feasible_ranks,
    fix_svd_signs,
    qr_right,
    select_rank,
)

__all__ = [
    "SweepConfig",
    "SolveReport",
    "eig_min",
    "eig_block",
    "svd_dominant",
    "svd_small_k",
    "gevd",
    "cca",
    "linsolve",
]

_OP_ROUND = TruncationPolicy(1e-14)  # recompression of composed operators


@dataclass
class SweepConfig:
    """Stopping rules, rank policy and seeding for the sweep solvers."""

    max_sweeps: int = 20
    objective_tol: float = 1e-8
    residual_tol: float = 1e-8
    rank: int = 8
    adaptive: bool = False
    trunc_tol: float = 1e-10
    max_rank: Optional[int] = None
    local_cap: int = 4096
    seed: int = 0
    identity_grams: bool = False  # CCA only: treat the data Grams as identity

    def __post_init__(self):
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be at least 1")
        for name in ("objective_tol", "residual_tol", "trunc_tol"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.rank < 1:
            raise ValueError("rank must be positive")
        if self.max_rank is not None and self.max_rank < 1:
            raise ValueError("max_rank must be positive")
        if self.local_cap < 1:
            raise ValueError("local_cap must be positive")


@dataclass
class SolveReport:
    """Objective trajectory (one value per half-sweep) plus convergence data."""

    sense: str = "min"
    objective: List[float] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)
    ranks: List[int] = field(default_factory=list)
    sweeps: int = 0
    converged: bool = False
    regularized: int = 0

    def is_monotone(self, slack: float = 1e-10) -> bool:
        if len(self.objective) < 2:
            return True
        traj = np.asarray(self.objective)
        allow = slack * max(1.0, float(np.max(np.abs(traj))))
        diffs = np.diff(traj)
        if self.sense == "min":
            return bool(np.all(diffs <= allow))
        return bool(np.all(diffs >= -allow))

    def to_keyvalue(self) -> str:
        lines = [
            f"sense={self.sense}",
            f"converged={'true' if self.converged else 'false'}",
            f"sweeps={self.sweeps}",
            f"objective={_fmt(self.objective[-1]) if self.objective else 'nan'}",
            "residuals=" + ",".join(_fmt(r) for r in self.residuals),
            "ranks=" + ",".join(str(r) for r in self.ranks),
            f"regularized={self.regularized}",
        ]
        return "\n".join(lines) + "\n"

    def trajectory_csv(self) -> str:
        rows = ["half_sweep,objective"]
        rows += [f"{i + 1},{_fmt(v)}" for i, v in enumerate(self.objective)]
        return "\n".join(rows) + "\n"


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


# ---------------------------------------------------------------------------
# the sweep engine


class _Chain:
    """Mixed-canonical working chain with the active site holding K columns.

    ``cores`` are plain 3-way arrays; the entry at ``pos`` is stale (its
    content lives in ``x``, a ``(R_left, I, R_right, K)`` block).  Cores left
    of ``pos`` are left-orthogonal, cores right of it right-orthogonal, so
    environments built from them are exact frames.
    """

    def __init__(self, modes, rank: int, k: int, rng):
        modes = [int(m) for m in modes]
        n = len(modes)
        profile = feasible_ranks(modes, [rank] * (n - 1)) if n > 1 else [1, 1]
        for site in range(n):
            if profile[site] * modes[site] * profile[site + 1] < k:
                raise ValueError(
                    f"K={k} exceeds the local dimension at site {site}; "
                    "increase the rank"
                )
        cores = [
            rng.standard_normal((profile[j], modes[j], profile[j + 1]))
            for j in range(n)
        ]
        for j in range(n - 1, 0, -1):
            l, q = qr_right(cores[j])
            cores[j] = q
            cores[j - 1] = np.tensordot(cores[j - 1], l, axes=(2, 0))
        self.modes = tuple(modes)
        self.k = k
        self.cores = cores
        self.pos = 0
        ra, i, rb = cores[0].shape
        q, _ = np.linalg.qr(rng.standard_normal((ra * i * rb, k)))
        self.x = np.ascontiguousarray(q).reshape(ra, i, rb, k)

    @property
    def order(self) -> int:
        return len(self.cores)

    def local_dim(self) -> int:
        ra, i, rb, _ = self.x.shape
        return ra * i * rb

    def set_solution(self, mat: np.ndarray):
        ra, i, rb, k = self.x.shape
        self.x = np.ascontiguousarray(mat).reshape(ra, i, rb, k)

    def ranks(self) -> list:
        out = [1]
        for j, core in enumerate(self.cores):
            out.append(self.x.shape[2] if j == self.pos else core.shape[2])
        # the bond left of the active site comes from the block itself
        if self.pos > 0:
            out[self.pos] = self.x.shape[0]
        out[-1] = 1
        return out

    def move_right(self, max_rank: Optional[int] = None):
        ra, i, rb, k = self.x.shape
        m = self.x.transpose(0, 1, 3, 2).reshape(ra * i, k * rb)
        if k == 1:
            q, carry = np.linalg.qr(m)
            q, carry = _fix_qr(q, carry)
        else:
            q, carry = _trimmed_svd(m, max_rank)
        self.cores[self.pos] = np.ascontiguousarray(q).reshape(ra, i, -1)
        s3 = carry.reshape(-1, k, rb)
        nxt = self.cores[self.pos + 1]
        self.x = np.einsum("skb,bjc->sjck", s3, nxt)
        self.pos += 1

    def move_left(self, max_rank: Optional[int] = None):
        ra, i, rb, k = self.x.shape
        m = self.x.transpose(0, 3, 1, 2).reshape(ra * k, i * rb)
        if k == 1:
            qt, rt = np.linalg.qr(m.T)
            qt, rt = _fix_qr(qt, rt)
            q, carry = qt.T, rt.T
        else:
            u, s, vt = np.linalg.svd(m, full_matrices=False)
            rank = _noise_rank(s, max_rank)
            u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
            q, carry = vt, u * s[:rank]
        self.cores[self.pos] = np.ascontiguousarray(q).reshape(-1, i, rb)
        s3 = carry.reshape(ra, k, -1)
        prev = self.cores[self.pos - 1]
        self.x = np.einsum("zja,aks->zjsk", prev, s3)
        self.pos -= 1

    def split_pair_right(self, solution: np.ndarray, policy: TruncationPolicy):
        """Install a two-site solution for (pos, pos+1), active moving right."""
        n = self.pos
        ra = self.x.shape[0]
        i1, i2 = self.modes[n], self.modes[n + 1]
        rc = self.cores[n + 1].shape[2]
        x5 = solution.reshape(ra, i1, i2, rc, self.k)
        m = x5.transpose(0, 1, 4, 2, 3).reshape(ra * i1, self.k * i2 * rc)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        rank = select_rank(s, policy.tol * float(np.linalg.norm(s)), policy.max_rank)
        u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
        self.cores[n] = np.ascontiguousarray(u).reshape(ra, i1, rank)
        rest = (s[:rank, None] * vt).reshape(rank, self.k, i2, rc)
        self.x = np.ascontiguousarray(rest.transpose(0, 2, 3, 1))
        self.pos = n + 1

    def split_pair_left(self, solution: np.ndarray, policy: TruncationPolicy):
        """Install a two-site solution for (pos-1, pos), active moving left."""
        n = self.pos - 1
        rc = self.x.shape[2]
        ra = self.cores[n].shape[0]
        i1, i2 = self.modes[n], self.modes[n + 1]
        x5 = solution.reshape(ra, i1, i2, rc, self.k)
        m = x5.transpose(0, 1, 4, 2, 3).reshape(ra * i1 * self.k, i2 * rc)
        u, s, vt = np.linalg.svd(m, full_matrices=False)
        rank = select_rank(s, policy.tol * float(np.linalg.norm(s)), policy.max_rank)
        u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
        self.cores[n + 1] = np.ascontiguousarray(vt).reshape(rank, i2, rc)
        left = (u * s[:rank]).reshape(ra, i1, self.k, rank)
        self.x = np.ascontiguousarray(left.transpose(0, 1, 3, 2))
        self.pos = n

    def snapshot(self):
        """Freeze the current iterate as a TTVector (K=1) or BlockTT."""
        cores = [c.copy() for c in self.cores]
        if self.k == 1:
            cores[self.pos] = np.ascontiguousarray(self.x[:, :, :, 0])
            return TTVector(cores, copy=False)
        cores[self.pos] = np.ascontiguousarray(self.x.transpose(0, 1, 3, 2))
        return BlockTT(cores, self.pos, copy=False)


def _fix_qr(q, r):
    d = np.sign(np.diagonal(r)).copy()
    d[d == 0] = 1.0
    return q * d, r * d[:, None]


def _noise_rank(s: np.ndarray, max_rank: Optional[int]) -> int:
    """Keep every singular value above the numerical-noise floor."""
    if s.size == 0 or s[0] == 0.0:
        return 1
    rank = max(1, int(np.count_nonzero(s > s[0] * 1e-14)))
    if max_rank is not None:
        rank = min(rank, max_rank)
    return rank


def _trimmed_svd(m: np.ndarray, max_rank: Optional[int]):
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    rank = _noise_rank(s, max_rank)
    u, vt = fix_svd_signs(u[:, :rank], vt[:rank])
    return u, s[:rank, None] * vt


def _run_sweeps(
    chains: List[_Chain],
    stacks: List[EnvStack],
    solve_one: Callable,
    solve_two: Callable,
    residual_fn: Callable,
    config: SweepConfig,
    report: SolveReport,
):
    n_sites = chains[0].order
    adaptive = config.adaptive and n_sites > 1
    policy = TruncationPolicy(config.trunc_tol, config.max_rank)
    prev = None
    for sweep in range(1, config.max_sweeps + 1):
        if adaptive:
            for n in range(n_sites - 1):
                obj, sols = solve_two(n)
                for chain, sol in zip(chains, sols):
                    chain.split_pair_right(sol, policy)
                for stack in stacks:
                    stack.invalidate(n)
                    stack.invalidate(n + 1)
                    stack.update_left(n)
            report.objective.append(obj)
            for n in range(n_sites - 2, -1, -1):
                obj, sols = solve_two(n)
                for chain, sol in zip(chains, sols):
                    chain.split_pair_left(sol, policy)
                for stack in stacks:
                    stack.invalidate(n)
                    stack.invalidate(n + 1)
                    stack.update_right(n + 1)
            report.objective.append(obj)
        else:
            for n in range(n_sites):
                obj, sols = solve_one(n)
                for chain, sol in zip(chains, sols):
                    chain.set_solution(sol)
                if n < n_sites - 1:
                    for chain in chains:
                        chain.move_right(config.max_rank)
                    for stack in stacks:
                        stack.invalidate(n)
                        stack.invalidate(n + 1)
                        stack.update_left(n)
            report.objective.append(obj)
            for n in range(n_sites - 1, -1, -1):
                obj, sols = solve_one(n)
                for chain, sol in zip(chains, sols):
                    chain.set_solution(sol)
                if n > 0:
                    for chain in chains:
                        chain.move_left(config.max_rank)
                    for stack in stacks:
                        stack.invalidate(n - 1)
                        stack.invalidate(n)
                        stack.update_right(n)
            report.objective.append(obj)
        report.sweeps = sweep
        report.residuals = residual_fn()
        current = report.objective[-1]
        if prev is not None:
            stable = abs(current - prev) <= config.objective_tol * max(1.0, abs(current))
            small = max(report.residuals) <= config.residual_tol
            if stable and small:
                report.converged = True
        prev = current
        if report.converged:
            break
    report.ranks = chains[0].ranks()


def _symmetrize(h: np.ndarray) -> np.ndarray:
    return 0.5 * (h + h.T)


def _regularized_eigh(h: np.ndarray, b: Optional[np.ndarray], report: SolveReport):
    if b is None:
        return scipy.linalg.eigh(h)
    mu = 0.0
    for attempt in range(4):
        try:
            return scipy.linalg.eigh(h, b + mu * np.eye(b.shape[0]) if mu else b)
        except scipy.linalg.LinAlgError:
            report.regularized += 1
            base = abs(np.trace(b)) / b.shape[0]
            mu = max(base, 1.0) * 1e-12 * (100.0 ** attempt) if mu == 0.0 else mu * 100.0
    raise scipy.linalg.LinAlgError(
        "local metric stayed indefinite after regularization "
        f"(last shift {mu:.3e}); the operator pencil is too ill-conditioned"
    )


def _regularized_cholesky(g: np.ndarray, report: SolveReport) -> np.ndarray:
    mu = 0.0
    for attempt in range(4):
        try:
            return scipy.linalg.cholesky(
                g + mu * np.eye(g.shape[0]) if mu else g, lower=True
            )
        except scipy.linalg.LinAlgError:
            report.regularized += 1
            base = abs(np.trace(g)) / g.shape[0]
            mu = max(base, 1.0) * 1e-12 * (100.0 ** attempt) if mu == 0.0 else mu * 100.0
    raise scipy.linalg.LinAlgError(
        "local Gram matrix stayed indefinite after regularization "
        f"(last shift {mu:.3e})"
    )


def _solve_spd(h: np.ndarray, rhs: np.ndarray, report: SolveReport) -> np.ndarray:
    try:
        return scipy.linalg.solve(h, rhs, assume_a="pos")
    except scipy.linalg.LinAlgError:
        report.regularized += 1
        mu = max(abs(np.trace(h)) / h.shape[0], 1.0) * 1e-12
        try:
            return scipy.linalg.solve(h + mu * np.eye(h.shape[0]), rhs, assume_a="pos")
        except scipy.linalg.LinAlgError:
            report.regularized += 1
            return np.linalg.lstsq(h, rhs, rcond=None)[0]


def _residual_norm(lhs: TTVector, rhs: TTVector) -> float:
    return tt_norm(tt_add(lhs, tt_scale(rhs, -1.0)))


# ---------------------------------------------------------------------------
# eigenproblems


def _block_eig(
    op: TTMatrix,
    k: int,
    config: SweepConfig,
    metric: Optional[TTMatrix] = None,
):
    if op.row_sizes != op.col_sizes:
        raise ValueError("operator must be square (row sizes == column sizes)")
    rng = np.random.default_rng(config.seed)
    chain = _Chain(op.row_sizes, config.rank, k, rng)
    stacks = [env_build(chain.cores, op, chain.cores)]
    if metric is not None:
        if metric.row_sizes != op.row_sizes or metric.col_sizes != op.col_sizes:
            raise ValueError("metric operator must match the main operator's shape")
        stacks.append(env_build(chain.cores, metric, chain.cores))
    report = SolveReport(sense="min")
    state = {"values": np.zeros(k)}

    def local_matrices(site, two_site):
        build = effective_operator_two if two_site else effective_operator
        h = _symmetrize(build(stacks[0], site, config.local_cap))
        b = _symmetrize(build(stacks[1], site, config.local_cap)) if metric is not None else None
        return h, b

    def solve(site, two_site):
        h, b = local_matrices(site, two_site)
        if h.shape[0] < k:
            raise ValueError(f"local dimension {h.shape[0]} cannot hold K={k} vectors")
        w, v = _regularized_eigh(h, b, report)
        state["values"] = w[:k].copy()
        return float(np.sum(w[:k])), [v[:, :k]]

    def solve_one(site):
        return solve(site, False)

    def solve_two(site):
        return solve(site, True)

    def residual():
        vectors = _block_columns(chain.snapshot())
        out = []
        for lam, vec in zip(state["values"], vectors):
            left = mpo_apply(op, vec)
            right = (
                tt_scale(mpo_apply(metric, vec), lam)
                if metric is not None
                else tt_scale(vec, lam)
            )
            out.append(_residual_norm(left, right) / max(1.0, abs(lam)))
        return out

    _run_sweeps([chain], stacks, solve_one, solve_two, residual, config, report)
    snap = chain.snapshot()
    return state["values"], snap, report


def _block_columns(snap):
    from .train import block_extract

    if isinstance(snap, TTVector):
        return [snap]
    return [block_extract(snap, j) for j in range(snap.num_vectors)]


def _as_block(snap) -> BlockTT:
    if isinstance(snap, BlockTT):
        return snap
    last = len(snap.cores) - 1
    cores = [c[:, :, None, :] if j == last else c for j, c in enumerate(snap.cores)]
    return BlockTT(cores, last)


def eig_min(op: TTMatrix, config: SweepConfig = SweepConfig()):
    """Smallest eigenvalue and eigenvector of a symmetric operator.

    Sweeps minimize the Rayleigh quotient through the dense local operator at
    each site; the returned vector is unit-norm.
    """
    values, snap, report = _block_eig(op, 1, config)
    return float(values[0]), snap, report


def eig_block(op: TTMatrix, k: int, config: SweepConfig = SweepConfig()):
    """K smallest eigenvalues (ascending) with jointly represented
    eigenvectors in block TT form; local trace problems keep the K columns
    orthonormal, which transfers to the global vectors."""
    if k < 1:
        raise ValueError("k must be at least 1")
    values, snap, report = _block_eig(op, k, config)
    return np.asarray(values), _as_block(snap), report


def svd_small_k(op: TTMatrix, k: int, config: SweepConfig = SweepConfig()):
    """K smallest singular values via the Gram route: block eigenproblem on
    transpose(A)·A (kept in TT form, never dense); singular values are the
    nonnegative square roots of the Ritz values."""
    gram = mpo_mul(mpo_transpose(op), op, _OP_ROUND)
    values, snap, report = _block_eig(gram, k, config)
    sigmas = np.sqrt(np.clip(np.asarray(values), 0.0, None))
    return sigmas, _as_block(snap), report


def gevd(
    x_op: TTMatrix,
    a_op: TTMatrix,
    b_op: TTMatrix,
    k: int,
    config: SweepConfig = SweepConfig(),
):
    """Generalized trace minimization: K smallest eigenpairs of the pencil
    (X·A·Xᵀ, B) with B-orthonormal block eigenvectors.

    The sandwich X·A·Xᵀ is composed in TT form; indefinite local metrics are
    shifted by a tiny multiple of the identity (counted in the report).
    """
    if a_op.row_sizes != x_op.col_sizes or a_op.col_sizes != x_op.col_sizes:
        raise ValueError("inner operator must act on the sandwich's column space")
    if b_op.row_sizes != x_op.row_sizes or b_op.col_sizes != x_op.row_sizes:
        raise ValueError("metric must act on the sandwich's row space")
    m_op = mpo_mul(mpo_mul(x_op, a_op, _OP_ROUND), mpo_transpose(x_op), _OP_ROUND)
    values, snap, report = _block_eig(m_op, k, config, metric=b_op)
    return np.asarray(values), _as_block(snap), report


# ---------------------------------------------------------------------------
# singular triplets


def svd_dominant(op: TTMatrix, config: SweepConfig = SweepConfig()):
    """Largest singular triplet via alternating maximization of uᵀ·A·v with
    unit-norm TT factors; each site solves a dense local top-SVD."""
    rng = np.random.default_rng(config.seed)
    u_chain = _Chain(op.row_sizes, config.rank, 1, rng)
    v_chain = _Chain(op.col_sizes, config.rank, 1, rng)
    stack = env_build(u_chain.cores, op, v_chain.cores)
    op_t = mpo_transpose(op)
    report = SolveReport(sense="max")
    state = {"sigma": 0.0}

    def solve(site, two_site):
        build = effective_operator_two if two_site else effective_operator
        cross = build(stack, site, config.local_cap)
        uu, ss, vvt = scipy.linalg.svd(cross, full_matrices=False)
        u1, v1 = uu[:, :1], vvt[:1].T
        j = int(np.argmax(np.abs(u1)))
        if u1[j, 0] < 0:
            u1, v1 = -u1, -v1
        state["sigma"] = float(ss[0])
        return float(ss[0]), [u1, v1]

    def solve_one(site):
        return solve(site, False)

    def solve_two(site):
        return solve(site, True)

    def residual():
        sigma = state["sigma"]
        u = u_chain.snapshot()
        v = v_chain.snapshot()
        scale = max(1.0, sigma)
        r1 = _residual_norm(mpo_apply(op, v), tt_scale(u, sigma)) / scale
        r2 = _residual_norm(mpo_apply(op_t, u), tt_scale(v, sigma)) / scale
        return [r1, r2]

    _run_sweeps([u_chain, v_chain], [stack], solve_one, solve_two, residual, config, report)
    return state["sigma"], u_chain.snapshot(), v_chain.snapshot(), report


# ---------------------------------------------------------------------------
# canonical correlation analysis


def cca(
    x_op: TTMatrix,
    y_op: TTMatrix,
    k: int,
    config: SweepConfig = SweepConfig(),
):
    """K leading canonical correlations of two data operators sharing their
    observation space.

    Local problems are whitened: Cholesky factors of the local Gram
    sandwiches, SVD of the whitened cross matrix.  With
    ``config.identity_grams`` the data Grams are replaced by identities
    (plain unit-norm constraints on the canonical vectors).
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if x_op.col_sizes != y_op.col_sizes:
        raise ValueError("the two operators must share the observation modes")
    if x_op.order != y_op.order:
        raise ValueError("the two operators must have the same chain length")
    cross = mpo_mul(x_op, mpo_transpose(y_op), _OP_ROUND)
    gram_x = mpo_mul(x_op, mpo_transpose(x_op), _OP_ROUND)
    gram_y = mpo_mul(y_op, mpo_transpose(y_op), _OP_ROUND)
    rng = np.random.default_rng(config.seed)
    wx = _Chain(x_op.row_sizes, config.rank, k, rng)
    wy = _Chain(y_op.row_sizes, config.rank, k, rng)
    s_cross = env_build(wx.cores, cross, wy.cores)
    s_gx = env_build(wx.cores, gram_x, wx.cores)
    s_gy = env_build(wy.cores, gram_y, wy.cores)
    report = SolveReport(sense="max")
    state = {"corr": np.zeros(k), "constraint": 0.0}

    def solve(site, two_site):
        build = effective_operator_two if two_site else effective_operator
        c_loc = build(s_cross, site, config.local_cap)
        if min(c_loc.shape) < k:
            raise ValueError(f"local dimension {c_loc.shape} cannot hold K={k}")
        if config.identity_grams:
            uu, ss, vvt = scipy.linalg.svd(c_loc, full_matrices=False)
            wx_loc, wy_loc = uu[:, :k], vvt[:k].T
        else:
            g_x = _symmetrize(build(s_gx, site, config.local_cap))
            g_y = _symmetrize(build(s_gy, site, config.local_cap))
            l_x = _regularized_cholesky(g_x, report)
            l_y = _regularized_cholesky(g_y, report)
            m = scipy.linalg.solve_triangular(l_x, c_loc, lower=True)
            m = scipy.linalg.solve_triangular(l_y, m.T, lower=True).T
            uu, ss, vvt = scipy.linalg.svd(m, full_matrices=False)
            wx_loc = scipy.linalg.solve_triangular(l_x.T, uu[:, :k], lower=False)
            wy_loc = scipy.linalg.solve_triangular(l_y.T, vvt[:k].T, lower=False)
        for col in range(k):
            j = int(np.argmax(np.abs(wx_loc[:, col])))
            if wx_loc[j, col] < 0:
                wx_loc[:, col] *= -1.0
                wy_loc[:, col] *= -1.0
        state["corr"] = ss[:k].copy()
        if config.identity_grams:
            cons_x = wx_loc.T @ wx_loc - np.eye(k)
            cons_y = wy_loc.T @ wy_loc - np.eye(k)
        else:
            cons_x = wx_loc.T @ g_x @ wx_loc - np.eye(k)
            cons_y = wy_loc.T @ g_y @ wy_loc - np.eye(k)
        state["constraint"] = float(
            max(np.max(np.abs(cons_x)), np.max(np.abs(cons_y)))
        )
        return float(np.sum(ss[:k])), [wx_loc, wy_loc]

    def solve_one(site):
        return solve(site, False)

    def solve_two(site):
        return solve(site, True)

    def residual():
        return [state["constraint"]]

    _run_sweeps([wx, wy], [s_cross, s_gx, s_gy], solve_one, solve_two, residual, config, report)
    return state["corr"], _as_block(wx.snapshot()), _as_block(wy.snapshot()), report


# ---------------------------------------------------------------------------
# linear systems


def linsolve(op: TTMatrix, rhs: TTVector, config: SweepConfig = SweepConfig()):
    """Least-squares solve of op·x ≅ rhs through the normal equations.

    Local systems use the Gram operator transpose(A)·A (composed in TT form)
    and the projected right-hand side; singular local systems fall back to a
    regularized solve, counted in the report.
    """
    if op.row_sizes != rhs.mode_sizes:
        raise ValueError(
            f"operator rows {op.row_sizes} do not match rhs modes {rhs.mode_sizes}"
        )
    op_t = mpo_transpose(op)
    gram = mpo_mul(op_t, op, _OP_ROUND)
    rng = np.random.default_rng(config.seed)
    chain = _Chain(op.col_sizes, config.rank, 1, rng)
    s_gram = env_build(chain.cores, gram, chain.cores)
    s_rhs = env_build(chain.cores, op_t, rhs.cores)
    rhs_norm = tt_norm(rhs)
    report = SolveReport(sense="min")

    def solve(site, two_site):
        if two_site:
            h = _symmetrize(effective_operator_two(s_gram, site, config.local_cap))
            b = effective_rhs_two(s_rhs, site, config.local_cap)
        else:
            h = _symmetrize(effective_operator(s_gram, site, config.local_cap))
            b = effective_rhs(s_rhs, site, config.local_cap)
        z = _solve_spd(h, b, report)
        objective = float(z @ (h @ z) - 2.0 * (z @ b))
        return objective, [z[:, None]]

    def solve_one(site):
        return solve(site, False)

    def solve_two(site):
        return solve(site, True)

    def residual():
        x = chain.snapshot()
        return [_residual_norm(mpo_apply(op, x), rhs) / max(rhs_norm, 1e-300)]

    _run_sweeps([chain], [s_gram, s_rhs], solve_one, solve_two, residual, config, report)
    return chain.snapshot(), report
