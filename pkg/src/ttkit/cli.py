"""Command-line front end.

Subcommands: compress, quantize, info, reconstruct, eig, svd, gevd, cca,
solve.  Dense data travels as raw little-endian float64 files (shape given
by flags); compressed objects travel as TTK1 containers.  Every command
prints a human-readable summary and writes machine-readable key=value
reports (plus a trajectory CSV for the solvers) beside its output file.
All randomness is controlled by --seed, so identical invocations produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import container
from .quantize import (
    QuantizationPlan,
    format_report,
    plan_auto,
    quantize_matrix,
    quantize_vector,
    storage_report,
)
from .solvers import (
    SweepConfig,
    cca,
    eig_block,
    eig_min,
    gevd,
    linsolve,
    svd_dominant,
    svd_small_k,
)
from .train import BlockTT, TruncationPolicy, TTMatrix, TTVector, tt_svd


class CliError(Exception):
    pass


def _parse_shape(text: str) -> tuple:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise CliError(f"bad shape {text!r}; expected comma-separated integers")
    if not shape or any(s < 1 for s in shape):
        raise CliError(f"bad shape {text!r}; sizes must be positive")
    return shape


def _read_raw(path: str) -> np.ndarray:
    try:
        data = np.fromfile(path, dtype="<f8")
    except OSError as exc:
        raise CliError(str(exc))
    if data.size == 0:
        raise CliError(f"{path} holds no float64 data")
    return data.astype(np.float64)


def _write_raw(path: str, data: np.ndarray):
    np.ascontiguousarray(data, dtype="<f8").tofile(path)


def _load(path: str):
    try:
        return container.load(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"{path}: {exc}")


def _write_text(path: str, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def _fmt(v: float) -> str:
    return f"{float(v):.17g}"


def _sweep_config(args, identity_grams: bool = False) -> SweepConfig:
    return SweepConfig(
        max_sweeps=args.max_sweeps,
        objective_tol=args.tol,
        residual_tol=args.tol,
        rank=args.rank,
        adaptive=args.adaptive,
        trunc_tol=args.trunc_tol,
        max_rank=args.max_rank,
        seed=args.seed,
        identity_grams=identity_grams,
    )


def _add_solver_flags(parser):
    parser.add_argument("--tol", type=float, default=1e-8, help="convergence tolerance")
    parser.add_argument("--max-sweeps", type=int, default=20)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rank", type=int, default=8, help="bond rank of the iterate")
    parser.add_argument(
        "--adaptive", action="store_true", help="two-site sweeps with adaptive ranks"
    )
    parser.add_argument(
        "--trunc-tol", type=float, default=1e-10, help="split tolerance for --adaptive"
    )
    parser.add_argument("--max-rank", type=int, default=None)
    parser.add_argument(
        "--allow-nonconverged",
        action="store_true",
        help="exit 0 even if the solver did not converge",
    )


def _solver_outputs(prefix: str, report, values=None, values_header="index,value"):
    _write_text(prefix + ".report.txt", report.to_keyvalue())
    _write_text(prefix + ".trajectory.csv", report.trajectory_csv())
    if values is not None:
        rows = [values_header]
        rows += [f"{i},{_fmt(v)}" for i, v in enumerate(values)]
        _write_text(prefix + ".values.csv", "\n".join(rows) + "\n")


def _finish_solver(args, report) -> int:
    print(report.to_keyvalue(), end="")
    if not report.converged and not args.allow_nonconverged:
        print("error: solver did not converge (use --allow-nonconverged to accept)", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# commands


def _cmd_compress(args) -> int:
    shape = _parse_shape(args.shape)
    data = _read_raw(args.input)
    total = int(np.prod(shape, dtype=np.int64))
    if data.size != total:
        raise CliError(f"file holds {data.size} values but shape {shape} needs {total}")
    vec = tt_svd(data.reshape(shape), TruncationPolicy(args.tol))
    container.save(vec, args.out)
    report = storage_report(vec)
    _write_text(args.out + ".report.txt", format_report(report))
    print(format_report(report), end="")
    return 0


def _matrix_plan(text: str, base: int, mixed_radix: bool):
    """A single integer is factorized by the base; a comma-separated list is
    taken as explicit virtual mode sizes."""
    shape = _parse_shape(text)
    if len(shape) == 1:
        return plan_auto(shape[0], base, mixed_radix)
    return QuantizationPlan(base, (shape,))


def _cmd_quantize(args) -> int:
    data = _read_raw(args.input)
    policy = TruncationPolicy(args.tol)
    if args.row_shape is not None or args.col_shape is not None:
        if args.row_shape is None or args.col_shape is None:
            raise CliError("matrix mode needs both --row-shape and --col-shape")
        row_plan = _matrix_plan(args.row_shape, args.base, args.mixed_radix)
        col_plan = _matrix_plan(args.col_shape, args.base, args.mixed_radix)
        rows = int(np.prod(row_plan.virtual_shape))
        cols = int(np.prod(col_plan.virtual_shape))
        if data.size != rows * cols:
            raise CliError(
                f"file holds {data.size} values but {rows}x{cols} needs {rows * cols}"
            )
        obj = quantize_matrix(data.reshape(rows, cols), row_plan, col_plan, policy)
    else:
        plan = plan_auto(data.size, args.base, args.mixed_radix)
        obj = quantize_vector(data, plan, policy)
    container.save(obj, args.out)
    report = storage_report(obj)
    _write_text(args.out + ".report.txt", format_report(report))
    print(format_report(report), end="")
    return 0


def _cmd_info(args) -> int:
    obj = _load(args.file)
    print(format_report(storage_report(obj)), end="")
    return 0


def _cmd_reconstruct(args) -> int:
    obj = _load(args.file)
    if isinstance(obj, TTVector):
        dense = obj.full().reshape(-1)
    elif isinstance(obj, TTMatrix):
        dense = obj.full()
    elif isinstance(obj, BlockTT):
        dense = obj.full_matrix()
    else:  # pragma: no cover
        raise CliError(f"cannot reconstruct {type(obj).__name__}")
    _write_raw(args.out, dense)
    print(f"wrote {dense.size} float64 values to {args.out}")
    return 0


def _expect_matrix(obj, path: str) -> TTMatrix:
    if not isinstance(obj, TTMatrix):
        raise CliError(f"{path} does not hold a TT matrix")
    return obj


def _expect_vector(obj, path: str) -> TTVector:
    if not isinstance(obj, TTVector):
        raise CliError(f"{path} does not hold a TT vector")
    return obj


def _cmd_eig(args) -> int:
    op = _expect_matrix(_load(args.operator), args.operator)
    config = _sweep_config(args)
    if args.k == 1:
        value, vec, report = eig_min(op, config)
        values = [value]
        container.save(vec, args.out + ".tt")
    else:
        values, block, report = eig_block(op, args.k, config)
        container.save(block, args.out + ".tt")
    _solver_outputs(args.out, report, values, "index,eigenvalue")
    print("index,eigenvalue")
    for i, v in enumerate(values):
        print(f"{i},{_fmt(v)}")
    return _finish_solver(args, report)


def _cmd_svd(args) -> int:
    op = _expect_matrix(_load(args.operator), args.operator)
    config = _sweep_config(args)
    if args.smallest:
        sigmas, block, report = svd_small_k(op, args.k, config)
        container.save(block, args.out + ".tt")
        values = list(sigmas)
    else:
        if args.k != 1:
            raise CliError("--k > 1 needs --smallest (the dominant route is single-triplet)")
        sigma, u, v, report = svd_dominant(op, config)
        container.save(u, args.out + ".u.tt")
        container.save(v, args.out + ".v.tt")
        values = [sigma]
    _solver_outputs(args.out, report, values, "index,singular_value")
    print("index,singular_value")
    for i, v in enumerate(values):
        print(f"{i},{_fmt(v)}")
    return _finish_solver(args, report)


def _cmd_gevd(args) -> int:
    x_op = _expect_matrix(_load(args.x), args.x)
    a_op = _expect_matrix(_load(args.a), args.a)
    b_op = _expect_matrix(_load(args.b), args.b)
    config = _sweep_config(args)
    values, block, report = gevd(x_op, a_op, b_op, args.k, config)
    container.save(block, args.out + ".tt")
    _solver_outputs(args.out, report, list(values), "index,eigenvalue")
    print("index,eigenvalue")
    for i, v in enumerate(values):
        print(f"{i},{_fmt(v)}")
    return _finish_solver(args, report)


def _cmd_cca(args) -> int:
    x_op = _expect_matrix(_load(args.x), args.x)
    y_op = _expect_matrix(_load(args.y), args.y)
    config = _sweep_config(args, identity_grams=args.identity_grams)
    corr, wx, wy, report = cca(x_op, y_op, args.k, config)
    container.save(wx, args.out + ".wx.tt")
    container.save(wy, args.out + ".wy.tt")
    _solver_outputs(args.out, report, list(corr), "index,correlation")
    print("index,correlation")
    for i, v in enumerate(corr):
        print(f"{i},{_fmt(v)}")
    return _finish_solver(args, report)


def _cmd_solve(args) -> int:
    op = _expect_matrix(_load(args.operator), args.operator)
    rhs = _expect_vector(_load(args.rhs), args.rhs)
    config = _sweep_config(args)
    x, report = linsolve(op, rhs, config)
    container.save(x, args.out + ".tt")
    _solver_outputs(args.out, report)
    return _finish_solver(args, report)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ttkit",
        description="Tensor-train compression and alternating-sweep solvers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compress", help="dense raw file to TT container")
    p.add_argument("input", help="raw little-endian float64 file")
    p.add_argument("--shape", required=True, help="comma-separated mode sizes")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("quantize", help="fold and compress a long vector or matrix")
    p.add_argument("input")
    p.add_argument("--base", type=int, default=2)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument(
        "--row-shape",
        default=None,
        help="matrix mode: row count (factorized by --base) or explicit mode sizes",
    )
    p.add_argument(
        "--col-shape",
        default=None,
        help="matrix mode: column count or explicit mode sizes",
    )
    p.add_argument(
        "--mixed-radix",
        action="store_true",
        help="allow sizes that are not pure powers of the base",
    )
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_quantize)

    p = sub.add_parser("info", help="describe a TT container")
    p.add_argument("file")
    p.set_defaults(func=_cmd_info)

    p = sub.add_parser("reconstruct", help="TT container back to a raw dense file")
    p.add_argument("file")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_reconstruct)

    p = sub.add_parser("eig", help="smallest eigenpairs of a symmetric operator")
    p.add_argument("operator")
    p.add_argument("--k", type=int, default=1)
    _add_solver_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_eig)

    p = sub.add_parser("svd", help="dominant or smallest singular triplets")
    p.add_argument("operator")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--smallest", action="store_true", help="K smallest via the Gram route")
    _add_solver_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_svd)

    p = sub.add_parser("gevd", help="generalized eigenpairs of (X A Xᵀ, B)")
    p.add_argument("x")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--k", type=int, default=1)
    _add_solver_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gevd)

    p = sub.add_parser("cca", help="leading canonical correlations of two data operators")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--k", type=int, default=1)
    p.add_argument(
        "--identity-grams",
        action="store_true",
        help="approximate the data Grams by identities",
    )
    _add_solver_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_cca)

    p = sub.add_parser("solve", help="least-squares solve of A x = y")
    p.add_argument("operator")
    p.add_argument("--rhs", required=True, help="TT container holding the right-hand side")
    _add_solver_flags(p)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_solve)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
