"""Heavy collapsible subcomplex (HeCS) preconditioner for the 1-up-Laplacian.

Pipeline: greedy collapse of ``K`` to its 2-core ``K'``, heaviest-first
selection of a weakly collapsible triangle set inside ``K'``, then the
factor ``C = P_sigma B2 Pi P_T`` built from the weighted ``B2`` with the
original triangle weights.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .collapse import greedy_collapse, greedy_sequence
from .complex import SimplicialComplex2, laplacian_matrix
from .errors import DimensionMismatch
from .sparse import LinearOperator, SparseColumnMatrix, check_dense_cap

HEAVY_METHODS = ("incremental", "naive")


@dataclass(frozen=True)
class HeavySubcomplex:
    """Accepted triangles (sorted ids) with a collapsing sequence for them."""

    triangles: np.ndarray
    sigma: list[int]
    tau: list[int]


@dataclass(frozen=True)
class HecsPreconditioner:
    """Permutations, subsample and the lower-trapezoidal factor ``C``.

    ``factor`` is ``m1 x r``: column j is the weighted boundary of triangle
    ``tri_perm[j]`` with rows in ``edge_perm`` order, so its first nonzero
    sits at row j.
    """

    edge_perm: np.ndarray
    tri_perm: np.ndarray
    pi: np.ndarray
    factor: SparseColumnMatrix
    r: int
    n_stage1: int = 0
    setup_time: float = field(default=0.0, compare=False)

    @property
    def m1(self) -> int:
        return self.factor.n_rows

    @property
    def m2(self) -> int:
        return len(self.pi)

    def apply_pinv(self, v: np.ndarray, transposed: bool = False) -> np.ndarray:
        return apply_pinv(self, v, transposed)


def heaviness_order(w2: np.ndarray, candidates: Sequence[int]) -> np.ndarray:
    """Candidates by descending weight, ties by ascending index."""
    cand = np.sort(np.asarray(candidates, dtype=np.int64))
    return cand[np.argsort(-w2[cand], kind="stable")]


def select_heavy(
    K: SimplicialComplex2,
    candidates: Optional[Sequence[int]] = None,
    method: str = "incremental",
) -> np.ndarray:
    """Sorted ids of the triangles HEAVY_SUBCOMPLEX accepts among ``candidates``."""
    if candidates is None:
        candidates = np.arange(K.m2)
    order = heaviness_order(K.w2, candidates)
    if method == "incremental":
        mask, _ = _kernels.heavy_scan(np.ascontiguousarray(K.triangle_edges), order, K.m1)
        return np.flatnonzero(mask)
    if method == "naive":
        accepted: list[int] = []
        for t in order.tolist():
            _, _, remaining, _ = greedy_sequence(K.triangle_edges, K.m1, accepted + [t])
            if not remaining:
                accepted.append(t)
        return np.array(sorted(accepted), dtype=np.int64)
    raise ValueError(f"unknown method {method!r}; expected one of {HEAVY_METHODS}")


def heavy_subcomplex(K: SimplicialComplex2, method: str = "incremental") -> HeavySubcomplex:
    """HEAVY_SUBCOMPLEX over all triangles of ``K``."""
    tris = select_heavy(K, None, method)
    sigma, tau, remaining, _ = greedy_sequence(K.triangle_edges, K.m1, tris)
    assert not remaining
    return HeavySubcomplex(tris, sigma, tau)


def _factor(K: SimplicialComplex2, edge_perm: np.ndarray, tau: Sequence[int]) -> SparseColumnMatrix:
    r = len(tau)
    inv = np.empty(K.m1, dtype=np.int64)
    inv[edge_perm] = np.arange(K.m1)
    tau = np.asarray(tau, dtype=np.int64)
    te = K.triangle_edges[tau]
    rows = inv[te].reshape(-1)
    cols = np.repeat(np.arange(r), 3)
    signs = np.tile([1.0, -1.0, 1.0], r)
    vals = signs * np.sqrt(K.w2[tau])[cols] / np.sqrt(K.w1[te.reshape(-1)])
    return SparseColumnMatrix.from_triplets(rows, cols, vals, (K.m1, r))


def build_preconditioner(K: SimplicialComplex2, method: str = "incremental") -> HecsPreconditioner:
    start = time.perf_counter()
    stage1 = greedy_collapse(K)
    tris2 = select_heavy(K, stage1.residual_triangle_ids, method)
    sigma2, tau2, remaining, _ = greedy_sequence(K.triangle_edges, K.m1, tris2)
    assert not remaining
    sigma = list(stage1.sigma) + sigma2
    tau = list(stage1.tau) + tau2

    r = len(sigma)
    rest_e = np.setdiff1d(np.arange(K.m1), np.asarray(sigma, dtype=np.int64))
    rest_t = np.setdiff1d(np.arange(K.m2), np.asarray(tau, dtype=np.int64))
    edge_perm = np.concatenate([np.asarray(sigma, dtype=np.int64), rest_e])
    tri_perm = np.concatenate([np.asarray(tau, dtype=np.int64), rest_t])
    pi = np.zeros(K.m2, dtype=bool)
    pi[tau] = True
    factor = _factor(K, edge_perm, tau)
    for a in (edge_perm, tri_perm, pi):
        a.flags.writeable = False
    return HecsPreconditioner(
        edge_perm,
        tri_perm,
        pi,
        factor,
        r,
        n_stage1=len(stage1.sigma),
        setup_time=time.perf_counter() - start,
    )


def build_from_sequence(
    K: SimplicialComplex2, sigma: Sequence[int], tau: Sequence[int]
) -> HecsPreconditioner:
    """Preconditioner for a caller-supplied collapsing sequence of a subcomplex."""
    sigma = np.asarray(sigma, dtype=np.int64)
    tau = np.asarray(tau, dtype=np.int64)
    edge_perm = np.concatenate([sigma, np.setdiff1d(np.arange(K.m1), sigma)])
    tri_perm = np.concatenate([tau, np.setdiff1d(np.arange(K.m2), tau)])
    pi = np.zeros(K.m2, dtype=bool)
    pi[tau] = True
    return HecsPreconditioner(edge_perm, tri_perm, pi, _factor(K, edge_perm, tau), len(tau))


def apply_pinv(P: HecsPreconditioner, v: np.ndarray, transposed: bool = False) -> np.ndarray:
    """Leading-block substitution for ``C^+ v`` (or ``(C^+)^T v``).

    Non-transposed: permute ``v`` (length m1), forward-substitute the
    leading r x r block, return r coefficients.  Transposed: back-substitute
    a length-r vector, scatter into m1 entries, un-permute.  Exact for
    ``v`` in range(C).
    """
    v = np.asarray(v, dtype=np.float64)
    F = P.factor
    if not transposed:
        if v.shape != (P.m1,):
            raise DimensionMismatch(f"expected a vector of length {P.m1}, got shape {v.shape}")
        return _kernels.forward_leading(F.indptr, F.indices, F.data, v[P.edge_perm])
    if v.shape != (P.r,):
        raise DimensionMismatch(f"expected a vector of length {P.r}, got shape {v.shape}")
    x = _kernels.backward_leading_transpose(F.indptr, F.indices, F.data, v)
    out = np.zeros(P.m1)
    out[P.edge_perm[: P.r]] = x
    return out


def leading_block(P: HecsPreconditioner) -> np.ndarray:
    """Dense ``r x r`` leading block of the factor."""
    check_dense_cap((P.r, P.r), None)
    return P.factor.to_scipy()[: P.r, :].toarray()


def preconditioned_dense(P: HecsPreconditioner, L1up, cap: Optional[int] = None) -> np.ndarray:
    """``C1^{-1} (P L Pᵀ)[:r, :r] C1^{-T}`` via dense triangular solves."""
    check_dense_cap((P.m1, P.m1), cap)
    lead = P.edge_perm[: P.r]
    A = L1up[lead][:, lead].toarray()
    C1 = leading_block(P)
    X = sla.solve_triangular(C1, A, lower=True)
    M = sla.solve_triangular(C1, X.T, lower=True)
    return 0.5 * (M + M.T)


def preconditioned_operator(P: HecsPreconditioner, K: SimplicialComplex2) -> LinearOperator:
    """``y -> C^+ L1_up (C^+)^T y`` on the r-dimensional coefficient space.

    Forward substitution reads only the first r permuted rows, so the
    product only needs the leading ``r x r`` block of ``P_sigma L P_sigmaᵀ``.
    """
    L = laplacian_matrix(K, "up1")
    lead = P.edge_perm[: P.r]
    A = L[lead][:, lead].tocsr()
    A.sort_indices()
    F = P.factor
    ip, ix, dv = F.indptr, F.indices, F.data

    def mv(y):
        z = _kernels.backward_leading_transpose(ip, ix, dv, y)
        return _kernels.forward_leading(ip, ix, dv, A @ z)

    return LinearOperator((P.r, P.r), mv, None, lambda: preconditioned_dense(P, L), symmetric=True)


def preconditioned_operator_reference(P: HecsPreconditioner, K: SimplicialComplex2) -> LinearOperator:
    """Unfused form: two calls to :func:`apply_pinv` around the full ``L1_up``."""
    L = laplacian_matrix(K, "up1")

    def mv(y):
        return apply_pinv(P, L @ apply_pinv(P, y, transposed=True))

    return LinearOperator((P.r, P.r), mv, symmetric=True)
