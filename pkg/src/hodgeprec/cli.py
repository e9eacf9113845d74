"""Command line: ``hodgeprec {generate,solve,bench,spectrum}``.

Exit status is 0 on success, 1 on usage errors and 2 on runtime failures.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Iterable, Optional, TextIO

import numpy as np
import scipy.linalg as sla

from . import io
from .complex import SimplicialComplex2, laplacian_matrix
from .errors import DenseCapExceeded, HodgePrecError
from .generator import (
    PROFILES,
    GeneratorParams,
    consistent_rhs,
    enriched_triangulation,
    sparsity,
    streams,
)
from .hecs import build_preconditioner, preconditioned_dense
from .solver import DEFAULT_EPS, METHODS, ichol_shifted, solve_up1
from .sparse import DEFAULT_DENSE_CAP
from .spectral import betti_by_rank, kappa_plus, verify_kappa_identity

USAGE_ERROR = 1
RUNTIME_ERROR = 2


# -- CSV records ---------------------------------------------------------------


@dataclass
class ReportRow:
    """One CSV line: a single solve (``trial``) or a per-cell ``aggregate``.

    Aggregate rows hold medians in the main columns and the spread in the
    ``*_min`` / ``*_max`` columns.
    """

    row_type: str = "trial"
    seed: int = 0
    m0: int = 0
    m1: int = 0
    m2: int = 0
    nu_target: float = float("nan")
    nu: float = float("nan")
    profile: str = ""
    method: str = ""
    iterations: int = 0
    converged: bool = False
    final_residual: float = float("nan")
    wall_time_s: float = float("nan")
    matvec_time_s: float = float("nan")
    kappa_plus: float = float("nan")
    kappa_identity_rhs: float = float("nan")
    iterations_min: int = 0
    iterations_max: int = 0
    kappa_plus_min: float = float("nan")
    kappa_plus_max: float = float("nan")
    error: str = ""

    def to_csv(self) -> dict[str, str]:
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, bool):
                out[f.name] = "1" if v else "0"
            elif isinstance(v, float):
                out[f.name] = "" if math.isnan(v) else repr(v)
            else:
                out[f.name] = str(v)
        return out

    @classmethod
    def from_csv(cls, rec: dict[str, str]) -> "ReportRow":
        kw = {}
        for f in fields(cls):
            s = rec.get(f.name, "")
            if f.type in ("int",):
                kw[f.name] = int(s) if s else 0
            elif f.type == "float":
                kw[f.name] = float(s) if s else float("nan")
            elif f.type == "bool":
                kw[f.name] = s == "1"
            else:
                kw[f.name] = s
        return cls(**kw)


COLUMNS = [f.name for f in fields(ReportRow)]
TIMING_COLUMNS = ("wall_time_s", "matvec_time_s")
NONCONVERGED = "nonconverged"


def is_failure(row: ReportRow) -> bool:
    """True for rows with no measurement (generation or setup raised)."""
    return bool(row.error) and not row.error.startswith(NONCONVERGED)


class RowWriter:
    """Serialized CSV writer that flushes after every row."""

    def __init__(self, stream: TextIO, header: bool = True):
        self.stream = stream
        self.writer = csv.DictWriter(stream, fieldnames=COLUMNS, lineterminator="\n")
        if header:
            self.writer.writeheader()
            stream.flush()

    def write(self, row: ReportRow) -> None:
        self.writer.writerow(row.to_csv())
        self.stream.flush()


def read_rows(path) -> list[ReportRow]:
    with open(path, newline="") as fh:
        return [ReportRow.from_csv(r) for r in csv.DictReader(fh)]


# -- measurements -------------------------------------------------------------


def _kappa(K: SimplicialComplex2, method: str, pre, cap: int) -> float:
    L = laplacian_matrix(K, "up1")
    if method == "none":
        return kappa_plus(L, cap).kappa_plus
    if method == "hecs":
        return kappa_plus(preconditioned_dense(pre, L, cap), cap).kappa_plus
    F = pre.factor.to_dense(cap)
    X = sla.solve_triangular(F, L.toarray(), lower=True)
    M = sla.solve_triangular(F, X.T, lower=True)
    return kappa_plus(0.5 * (M + M.T), cap).kappa_plus


def solve_rows(
    K: SimplicialComplex2,
    f: np.ndarray,
    methods: Iterable[str],
    eps: float,
    *,
    kappa: bool = False,
    kappa_identity: bool = False,
    cap: int = DEFAULT_DENSE_CAP,
    base: Optional[ReportRow] = None,
) -> list[ReportRow]:
    base = base or ReportRow()
    rows = []
    for method in methods:
        row = ReportRow(**asdict(base))
        row.method = method
        row.m0, row.m1, row.m2 = K.shape
        row.nu = sparsity(K.m1, K.m2)
        try:
            start = time.perf_counter()
            pre = None
            if method == "hecs":
                pre = build_preconditioner(K)
            elif method == "ichol":
                pre = ichol_shifted(K, cap=cap)
            _, rep = solve_up1(K, f, method, eps, preconditioner=pre)
            row.wall_time_s = time.perf_counter() - start
            row.iterations = rep.iterations
            row.converged = rep.converged
            row.final_residual = rep.final_residual
            row.matvec_time_s = rep.matvec_avg
            if not rep.converged:
                row.error = f"{NONCONVERGED}: {rep.diagnostic}"
            if kappa:
                row.kappa_plus = _kappa(K, method, pre, cap)
            if kappa_identity and method == "hecs":
                row.kappa_identity_rhs = verify_kappa_identity(K, pre, cap)[1]
        except HodgePrecError as exc:
            row.error = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


# -- bench -----------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    vertices: tuple[int, ...]
    sparsity: tuple[float, ...]
    eliminate: int = 2
    profile: str = "minrule_folded"
    trials: int = 25
    eps: float = DEFAULT_EPS
    methods: tuple[str, ...] = ("none", "hecs")
    out: Optional[str] = None
    seed: int = 0
    kappa: bool = True
    kappa_identity: bool = False
    jobs: int = 1
    dense_cap: int = DEFAULT_DENSE_CAP

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.vertices or not self.sparsity:
            raise ValueError("vertex and sparsity grids must be non-empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}")


def cell_seed(base: int, m0: int, nu: float, d: int, profile: str, trial: int) -> int:
    """``base XOR hash(cell)`` plus the trial index, reduced to 64 bits."""
    key = f"{m0}|{nu:.12g}|{d}|{profile}".encode()
    h = int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
    return ((base ^ h) + trial) % 2**64


def run_trial(task: tuple) -> list[ReportRow]:
    m0, nu, trial, cfg = task
    seed = cell_seed(cfg.seed, m0, nu, cfg.eliminate, cfg.profile, trial)
    base = ReportRow(seed=seed, m0=m0, nu_target=nu, profile=cfg.profile)
    try:
        inst = enriched_triangulation(GeneratorParams(m0, cfg.eliminate, nu, cfg.profile, seed))
    except (HodgePrecError, ValueError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return [ReportRow(**{**asdict(base), "method": m, "error": msg}) for m in cfg.methods]
    K = inst.complex
    f, _ = consistent_rhs(K, streams(seed)["rhs"])
    return solve_rows(
        K, f, cfg.methods, cfg.eps, kappa=cfg.kappa, kappa_identity=cfg.kappa_identity, cap=cfg.dense_cap, base=base
    )


def _median(xs):
    return float(np.median(xs)) if len(xs) else float("nan")


def aggregate(rows: list[ReportRow], m0: int, nu: float, cfg: BenchConfig) -> list[ReportRow]:
    out = []
    for method in cfg.methods:
        mine = [r for r in rows if r.method == method]
        ok = [r for r in mine if not is_failure(r)]
        agg = ReportRow(row_type="aggregate", seed=cfg.seed, m0=m0, nu_target=nu, profile=cfg.profile, method=method)
        if ok:
            its = [r.iterations for r in ok]
            kap = [r.kappa_plus for r in ok if not math.isnan(r.kappa_plus)]
            agg.m1 = int(np.median([r.m1 for r in ok]))
            agg.m2 = int(np.median([r.m2 for r in ok]))
            agg.nu = _median([r.nu for r in ok])
            agg.iterations = int(np.median(its))
            agg.iterations_min, agg.iterations_max = min(its), max(its)
            agg.converged = all(r.converged for r in ok)
            agg.final_residual = max(r.final_residual for r in ok)
            agg.wall_time_s = _median([r.wall_time_s for r in ok])
            agg.matvec_time_s = _median([r.matvec_time_s for r in ok])
            agg.kappa_plus = _median(kap)
            if kap:
                agg.kappa_plus_min, agg.kappa_plus_max = min(kap), max(kap)
            agg.kappa_identity_rhs = _median([r.kappa_identity_rhs for r in ok if not math.isnan(r.kappa_identity_rhs)])
        failed = len(mine) - len(ok)
        if failed:
            first = next(r.error for r in mine if r not in ok)
            agg.error = f"{failed}/{len(mine)} trials failed; first: {first}"
        out.append(agg)
    return out


def cmd_bench_config(cfg: BenchConfig, stream: Optional[TextIO] = None) -> list[ReportRow]:
    """Run the full sweep; every row is written and flushed as soon as it exists."""
    own = None
    if stream is None:
        if cfg.out:
            own = open(cfg.out, "w", newline="")
            stream = own
        else:
            stream = sys.stdout
    writer = RowWriter(stream)
    everything: list[ReportRow] = []
    try:
        cells = [(m0, nu) for m0 in cfg.vertices for nu in cfg.sparsity]
        tasks = [(m0, nu, t, cfg) for m0, nu in cells for t in range(cfg.trials)]
        pool = ProcessPoolExecutor(cfg.jobs) if cfg.jobs > 1 else None
        results = pool.map(run_trial, tasks) if pool else map(run_trial, tasks)
        try:
            cell_rows: list[ReportRow] = []
            for (m0, nu, t, _), rows in zip(tasks, results):
                for r in rows:
                    writer.write(r)
                cell_rows.extend(rows)
                if t == cfg.trials - 1:
                    for a in aggregate(cell_rows, m0, nu, cfg):
                        writer.write(a)
                        cell_rows.append(a)
                    everything.extend(cell_rows)
                    cell_rows = []
        finally:
            if pool:
                pool.shutdown()
    finally:
        if own:
            own.close()
    return everything


# -- argument parsing ----------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _sparsity(s: str) -> float:
    try:
        v = float(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None
    if not 0.0 < v <= 1.0:
        raise argparse.ArgumentTypeError(f"sparsity must lie in (0, 1], got {v}")
    return v


def _nonnegative_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {v}")
    return v


def _positive_int(s: str) -> int:
    try:
        v = int(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(s: str) -> int:
    try:
        v = int(s, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _list_of(conv):
    def parse(s: str):
        try:
            return tuple(conv(x) for x in s.split(",") if x)
        except argparse.ArgumentTypeError:
            raise
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def _methods(s: str) -> tuple[str, ...]:
    ms = tuple(m for m in s.split(",") if m)
    bad = [m for m in ms if m not in METHODS]
    if bad or not ms:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(METHODS)}")
    return ms


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--eps", type=float, default=DEFAULT_EPS)
    common.add_argument("--jobs", type=_positive_int, default=1)
    common.add_argument("--dense-cap", type=_positive_int, default=DEFAULT_DENSE_CAP)

    p = _Parser(prog="hodgeprec", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", parents=[common], help="write an enriched triangulation")
    g.add_argument("--vertices", type=int, required=True)
    g.add_argument("--sparsity", type=_sparsity, required=True)
    g.add_argument("--eliminate", type=_nonnegative_int, default=0)
    g.add_argument("--weights", choices=PROFILES, default="unit")
    g.add_argument("--out", required=True)

    s = sub.add_parser("solve", parents=[common], help="solve L1_up x = f and emit CSV rows")
    s.add_argument("input")
    s.add_argument("--method", type=_methods, default=("none", "hecs"))
    s.add_argument("--rhs", choices=("random", "file"), default="random")
    s.add_argument("--rhs-file", help="whitespace-separated right-hand side (with --rhs file)")
    s.add_argument("--kappa", action="store_true", help="add dense condition numbers")
    s.add_argument("--out", help="CSV path (default: standard output)")

    b = sub.add_parser("bench", parents=[common], help="factorial sweep over (m0, nu)")
    b.add_argument("--vertices", type=_list_of(_positive_int), required=True)
    b.add_argument("--sparsity", type=_list_of(_sparsity), required=True)
    b.add_argument("--eliminate", type=_nonnegative_int, default=2)
    b.add_argument("--weights", choices=PROFILES, default="minrule_folded")
    b.add_argument("--trials", type=_positive_int, default=25)
    b.add_argument("--methods", type=_methods, default=("none", "hecs"))
    b.add_argument("--no-kappa", action="store_true")
    b.add_argument("--kappa-identity", action="store_true", help="also record the kappa(Pi V1)^2 column")
    b.add_argument("--out")

    sp_ = sub.add_parser("spectrum", parents=[common], help="Betti numbers and condition numbers")
    sp_.add_argument("input")
    sp_.add_argument("--method", type=_methods, default=("hecs",))
    return p


# -- commands -------------------------------------------------------------------------


def cmd_generate(args) -> int:
    params = GeneratorParams(args.vertices, args.eliminate, args.sparsity, args.weights, args.seed)
    inst = enriched_triangulation(params)
    K = inst.complex
    io.save_complex(K, args.out, inst.provenance())
    try:
        b1 = str(betti_by_rank(K, args.dense_cap)[1])
    except DenseCapExceeded:
        b1 = "NA"
    # enrichment cliques may fill holes, so both values are reported
    print(f"m0={K.m0} m1={K.m1} m2={K.m2} nu={inst.nu:.6g} beta1={b1} beta1_after_elimination={inst.beta1}")
    return 0


def cmd_solve(args) -> int:
    K, prov = io.load_complex_with_provenance(args.input)
    if args.rhs == "file":
        if not args.rhs_file:
            raise ValueError("--rhs file needs --rhs-file")
        f = np.loadtxt(args.rhs_file, dtype=np.float64).reshape(-1)
        if f.shape != (K.m1,):
            raise ValueError(f"right-hand side has length {f.size}, expected {K.m1}")
    else:
        f, _ = consistent_rhs(K, streams(args.seed)["rhs"])
    profile = prov.get("params", {}).get("weight_profile", "")
    base = ReportRow(seed=args.seed, profile=profile)
    rows = solve_rows(K, f, args.method, args.eps, kappa=args.kappa, cap=args.dense_cap, base=base)
    stream = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = RowWriter(stream)
        for r in rows:
            w.write(r)
    finally:
        if args.out:
            stream.close()
    return 0


def cmd_bench(args) -> int:
    cfg = BenchConfig(
        vertices=args.vertices,
        sparsity=args.sparsity,
        eliminate=args.eliminate,
        profile=args.weights,
        trials=args.trials,
        eps=args.eps,
        methods=args.methods,
        out=args.out,
        seed=args.seed,
        kappa=not args.no_kappa,
        kappa_identity=args.kappa_identity,
        jobs=args.jobs,
        dense_cap=args.dense_cap,
    )
    cmd_bench_config(cfg)
    return 0


def cmd_spectrum(args) -> int:
    K = io.load_complex(args.input)
    cap = args.dense_cap
    b0, b1 = betti_by_rank(K, cap)
    L = laplacian_matrix(K, "up1")
    print(f"beta0={b0}")
    print(f"beta1={b1}")
    print(f"kappa_plus_up1={kappa_plus(L, cap).kappa_plus:.12g}")
    for method in args.method:
        if method == "none":
            continue
        if method == "hecs":
            P = build_preconditioner(K)
            print(f"kappa_plus_hecs={_kappa(K, 'hecs', P, cap):.12g}")
            lhs, rhs = verify_kappa_identity(K, P, cap)
            print(f"identity_lhs={lhs:.12g}")
            print(f"identity_rhs={rhs:.12g}")
            print(f"identity_rel_gap={abs(lhs - rhs) / rhs:.3e}")
        else:
            try:
                C = ichol_shifted(K, cap=cap)
                print(f"kappa_plus_ichol={_kappa(K, 'ichol', C, cap):.12g}")
            except HodgePrecError as exc:
                print(f"kappa_plus_ichol=error:{type(exc).__name__}")
    return 0


COMMANDS = {"generate": cmd_generate, "solve": cmd_solve, "bench": cmd_bench, "spectrum": cmd_spectrum}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (HodgePrecError, OSError, ValueError, KeyError) as exc:
        print(f"hodgeprec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
