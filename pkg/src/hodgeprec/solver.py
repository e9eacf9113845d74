"""CGLS, preconditioned up-Laplacian solves, the full-L1 pipeline and the ichol baseline."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import _kernels
from .complex import SimplicialComplex2, _b1_scipy, laplacian_matrix
from .errors import FactorizationBreakdown, NonFiniteEncountered, NontrivialHomology
from .hecs import HecsPreconditioner, apply_pinv, build_preconditioner, preconditioned_operator
from .sparse import LinearOperator, SparseColumnMatrix
from .spectral import betti_by_rank

METHODS = ("none", "hecs", "ichol")
DEFAULT_EPS = 1e-6


@dataclass
class SolveReport:
    iterations: int
    residual_history: list[float]
    converged: bool
    wall_time: float
    matvec_count: int
    matvec_time: float = 0.0
    method: str = ""
    final_residual: float = float("nan")
    setup_time: float = 0.0
    diagnostic: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def matvec_avg(self) -> float:
        return self.matvec_time / self.matvec_count if self.matvec_count else 0.0


class _Timed:
    """Counts and times products with ``A`` and ``Aᵀ``."""

    def __init__(self, A: LinearOperator):
        self.A = A
        self.count = 0
        self.time = 0.0

    def mv(self, x):
        t = time.perf_counter()
        y = self.A.matvec(x)
        self.time += time.perf_counter() - t
        self.count += 1
        return y

    def rmv(self, x):
        t = time.perf_counter()
        y = self.A.rmatvec(x)
        self.time += time.perf_counter() - t
        self.count += 1
        return y


def cgls(
    A: LinearOperator,
    b: np.ndarray,
    eps: float = DEFAULT_EPS,
    max_iter: Optional[int] = None,
) -> tuple[np.ndarray, SolveReport]:
    """CGLS for ``min ||A x - b||`` from ``x = 0``; stops on ``||r||_inf <= eps``."""
    start = time.perf_counter()
    b = np.asarray(b, dtype=np.float64)
    n = A.shape[1]
    if max_iter is None:
        max_iter = 20 * max(A.shape[0], 1)
    op = _Timed(A)
    x = np.zeros(n)
    r = b.copy()
    res = float(np.abs(r).max()) if r.size else 0.0
    history = [res]
    it = 0
    if res > eps:
        s = op.rmv(r)
        p = s.copy()
        gamma = float(s @ s)
        while it < max_iter:
            q = op.mv(p)
            qq = float(q @ q)
            if qq == 0.0:
                break
            alpha = gamma / qq
            x += alpha * p
            r -= alpha * q
            it += 1
            res = float(np.abs(r).max())
            if not np.isfinite(res):
                raise NonFiniteEncountered(f"residual became non-finite at iteration {it}")
            history.append(res)
            if res <= eps:
                break
            s = op.rmv(r)
            gamma_new = float(s @ s)
            if gamma_new == 0.0:
                break
            p = s + (gamma_new / gamma) * p
            gamma = gamma_new
    report = SolveReport(
        iterations=it,
        residual_history=history,
        converged=res <= eps,
        wall_time=time.perf_counter() - start,
        matvec_count=op.count,
        matvec_time=op.time,
        final_residual=res,
    )
    return x, report


# -- shifted incomplete Cholesky baseline -------------------------------------


@dataclass(frozen=True)
class IcholPreconditioner:
    kernel_basis: np.ndarray
    alpha: float
    factor: SparseColumnMatrix
    restarts: int = 0
    setup_time: float = field(default=0.0, compare=False)

    def solve_lower(self, v: np.ndarray) -> np.ndarray:
        F = self.factor
        return _kernels.forward_leading(F.indptr, F.indices, F.data, np.asarray(v, dtype=np.float64))

    def solve_upper(self, v: np.ndarray) -> np.ndarray:
        F = self.factor
        return _kernels.backward_leading_transpose(F.indptr, F.indices, F.data, np.asarray(v, dtype=np.float64))


def kernel_basis_u(K: SimplicialComplex2, cap: Optional[int] = None) -> np.ndarray:
    """Orthonormal basis of ker L1_up built from ``B1ᵀ`` on the complement of ker B1ᵀ.

    Only valid when ``beta0 = 1`` and ``beta1 = 0``, where ker L1_up = im B1ᵀ.
    """
    b0, b1 = betti_by_rank(K, cap)
    if b0 != 1 or b1 != 0:
        raise NontrivialHomology(f"shifted ichol needs beta0 = 1 and beta1 = 0, got ({b0}, {b1})")
    ones = np.sqrt(K.w0)[:, None]
    Q = sla.null_space(ones.T)
    B1t = _b1_scipy(K, True).T
    U, _ = np.linalg.qr(B1t @ Q)
    return U


def _shifted_lower(L: sp.csr_matrix, U: np.ndarray, alpha: float) -> sp.csc_matrix:
    n = L.shape[0]
    low = sp.tril(L, format="coo")
    rows = np.concatenate([low.row, np.arange(n)])
    cols = np.concatenate([low.col, np.arange(n)])
    pattern = sp.csc_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n))
    pattern.sort_indices()
    coo = pattern.tocoo()
    r, c = coo.row, coo.col
    vals = np.asarray(L[r, c]).ravel() + alpha * np.einsum("ij,ij->i", U[r], U[c])
    M = sp.csc_matrix((vals, (r, c)), shape=(n, n))
    M.sort_indices()
    return M


def ichol_shifted(
    K: SimplicialComplex2,
    alpha: Optional[float] = None,
    U: Optional[np.ndarray] = None,
    max_restarts: int = 5,
    cap: Optional[int] = None,
) -> IcholPreconditioner:
    """IC(0) of ``L1_up + alpha U Uᵀ`` on the pattern of ``L1_up`` plus the diagonal.

    A non-positive pivot restarts with ``alpha`` doubled.
    """
    start = time.perf_counter()
    if U is None:
        U = kernel_basis_u(K, cap)
    L = laplacian_matrix(K, "up1")
    if alpha is None:
        alpha = float(L.diagonal().sum()) / max(K.m1, 1)
        if alpha <= 0:
            alpha = 1.0
    for restart in range(max_restarts + 1):
        M = _shifted_lower(L, U, alpha)
        vals, ok, col = _kernels.ichol0(
            M.indptr.astype(np.int64), M.indices.astype(np.int64), M.data
        )
        if ok:
            factor = SparseColumnMatrix(sp.csc_matrix((vals, M.indices, M.indptr), shape=M.shape))
            return IcholPreconditioner(U, alpha, factor, restart, time.perf_counter() - start)
        alpha *= 2.0
    raise FactorizationBreakdown(f"IC(0) broke down at column {col} after {max_restarts} restarts")


def ichol_operator(C: IcholPreconditioner, L: sp.csr_matrix) -> LinearOperator:
    """``y -> C⁻¹ L C⁻ᵀ y``."""
    n = L.shape[0]
    return LinearOperator((n, n), lambda y: C.solve_lower(L @ C.solve_upper(y)), symmetric=True)


# -- up-Laplacian solves ------------------------------------------------------


def solve_up1(
    K: SimplicialComplex2,
    f: np.ndarray,
    method: str = "hecs",
    eps: float = DEFAULT_EPS,
    max_iter: Optional[int] = None,
    preconditioner=None,
) -> tuple[np.ndarray, SolveReport]:
    """Least squares ``min ||L1_up x - f||`` with CGLS, optionally preconditioned.

    The returned report's ``final_residual`` is the true ``||L1_up x - f||_inf``
    and ``converged`` requires it to be at most ``10 eps``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    f = np.asarray(f, dtype=np.float64)
    if max_iter is None:
        max_iter = 20 * max(K.m1, 1)
    L = laplacian_matrix(K, "up1")
    setup = 0.0
    if method == "none":
        x, rep = cgls(LinearOperator.from_matrix(L, symmetric=True), f, eps, max_iter)
    elif method == "hecs":
        P: HecsPreconditioner = preconditioner or build_preconditioner(K)
        setup = P.setup_time
        y, rep = cgls(preconditioned_operator(P, K), apply_pinv(P, f), eps, max_iter)
        x = apply_pinv(P, y, transposed=True)
    else:
        C: IcholPreconditioner = preconditioner or ichol_shifted(K)
        setup = C.setup_time
        y, rep = cgls(ichol_operator(C, L), C.solve_lower(f), eps, max_iter)
        x = C.solve_upper(y)

    true_res = float(np.abs(L @ x - f).max()) if f.size else 0.0
    rep.method = method
    rep.setup_time = setup
    rep.extra["inner_residual"] = rep.final_residual
    rep.final_residual = true_res
    if rep.converged and not true_res <= 10 * eps:
        rep.diagnostic = (
            f"inner residual {rep.extra['inner_residual']:.3g} met eps but true residual "
            f"{true_res:.3g} exceeds {10 * eps:g}; f likely has a ker L1_up component"
        )
    elif not rep.converged:
        rep.diagnostic = f"no convergence after {rep.iterations} iterations"
    rep.converged = rep.converged and true_res <= 10 * eps
    return x, rep


# -- full first-order Laplacian ------------------------------------------------


def cg(L, b: np.ndarray, tol: float, max_iter: Optional[int] = None) -> tuple[np.ndarray, int]:
    """Plain CG on a consistent PSD system; stops on ``||r||_inf <= tol``."""
    n = b.shape[0]
    if max_iter is None:
        max_iter = 20 * max(n, 1)
    x = np.zeros(n)
    r = b.astype(np.float64).copy()
    if n == 0 or np.abs(r).max() <= tol:
        return x, 0
    p = r.copy()
    rr = float(r @ r)
    for it in range(1, max_iter + 1):
        q = L @ p
        pq = float(p @ q)
        if pq <= 0.0:
            return x, it
        a = rr / pq
        x += a * p
        r -= a * q
        if np.abs(r).max() <= tol:
            return x, it
        rr_new = float(r @ r)
        p = r + (rr_new / rr) * p
        rr = rr_new
    return x, max_iter


@dataclass(frozen=True)
class FullL1Solution:
    x: np.ndarray
    x_down: np.ndarray
    x_up: np.ndarray
    up_report: SolveReport
    residual: float


def solve_full_l1_parts(
    K: SimplicialComplex2,
    f: np.ndarray,
    eps: float = DEFAULT_EPS,
    inner_eps: Optional[float] = None,
    method: str = "hecs",
) -> FullL1Solution:
    """Split ``L1 x = f`` into three ``L0`` solves and one up-Laplacian solve.

    ``inner_eps`` (default ``eps * 1e-3``) is the absolute tolerance of the
    ``L0`` CG solves.  The up part is projected off im B1ᵀ afterwards so that
    it does not leak into the down-Laplacian.
    """
    f = np.asarray(f, dtype=np.float64)
    tol = eps * 1e-3 if inner_eps is None else inner_eps
    B1 = _b1_scipy(K, True).tocsr()
    B1t = B1.T.tocsr()
    L0 = laplacian_matrix(K, "up0")

    z1, _ = cg(L0, B1 @ f, tol)
    f1 = B1t @ z1
    f2 = f - f1
    u_hat, _ = cg(L0, B1 @ f1, tol)
    u, _ = cg(L0, u_hat, tol)
    x_down = B1t @ u

    x_up, rep = solve_up1(K, f2, method, eps)
    if np.any(x_up):
        z, _ = cg(L0, B1 @ x_up, tol)
        x_up = x_up - B1t @ z
    x = x_down + x_up
    L1 = laplacian_matrix(K, "full1")
    res = float(np.abs(L1 @ x - f).max()) if f.size else 0.0
    return FullL1Solution(x, x_down, x_up, rep, res)


def solve_full_l1(K: SimplicialComplex2, f: np.ndarray, eps: float = DEFAULT_EPS) -> np.ndarray:
    return solve_full_l1_parts(K, f, eps).x
