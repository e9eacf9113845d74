"""Dense spectral measurements and exact identities used as oracles."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .complex import SimplicialComplex2, _b1_scipy, _b2_scipy, laplacian_matrix, rank1_factors
from .errors import KernelClash, NoIncidentTriangle, ZeroPivot
from .sparse import check_dense_cap


@dataclass(frozen=True)
class SpectralSummary:
    sigma_min_plus: float
    sigma_max: float
    kappa_plus: float
    rank: int
    kernel_dim: int


def _dense(A) -> np.ndarray:
    if sp.issparse(A):
        return A.toarray()
    if hasattr(A, "to_dense"):
        return A.to_dense()
    return np.asarray(A, dtype=np.float64)


def singular_values(A, cap: Optional[int] = None) -> np.ndarray:
    """Descending singular values; ``hermitian`` path for symmetric input."""
    shape = A.shape
    check_dense_cap(shape, cap)
    A = _dense(A)
    if A.size == 0:
        return np.zeros(0)
    sym = A.shape[0] == A.shape[1] and np.allclose(A, A.T, rtol=0, atol=1e-13 * max(np.abs(A).max(), 1e-300))
    s = np.linalg.svd(A, compute_uv=False, hermitian=sym)
    return np.sort(np.abs(s))[::-1]


def numerical_rank(s: np.ndarray, shape: tuple[int, int]) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    tol = max(shape) * s[0] * np.finfo(np.float64).eps
    return int(np.count_nonzero(s > tol))


def kappa_plus(A, cap: Optional[int] = None) -> SpectralSummary:
    """Ratio of extreme positive singular values of a dense (or sparse) matrix.

    The zero matrix has no positive singular values; its summary reports
    ``kappa_plus = nan``.
    """
    s = singular_values(A, cap)
    shape = A.shape
    rank = numerical_rank(s, shape)
    n = shape[1]
    if rank == 0:
        return SpectralSummary(0.0, 0.0, float("nan"), 0, n)
    smax, smin = float(s[0]), float(s[rank - 1])
    return SpectralSummary(smin, smax, smax / smin, rank, n - rank)


def betti(K: SimplicialComplex2, k: int, cap: Optional[int] = None) -> int:
    """``dim ker L_k`` for k = 0 (components) or k = 1 (independent loops)."""
    if k == 0:
        return kappa_plus(laplacian_matrix(K, "up0"), cap).kernel_dim
    if k == 1:
        return kappa_plus(laplacian_matrix(K, "full1"), cap).kernel_dim
    raise ValueError("k must be 0 or 1")


def betti_by_rank(K: SimplicialComplex2, cap: Optional[int] = None) -> tuple[int, int]:
    """``(beta0, beta1)`` from ranks of the boundaries (cheaper than L_1)."""
    b1 = _b1_scipy(K, False)
    b2 = _b2_scipy(K, False)
    r1 = numerical_rank(singular_values(b1, cap), b1.shape) if K.m1 else 0
    r2 = numerical_rank(singular_values(b2, cap), b2.shape) if K.m2 else 0
    return K.m0 - r1, K.m1 - r1 - r2


def schur_step(S: np.ndarray, i: int) -> tuple[np.ndarray, np.ndarray]:
    """One symmetric elimination step at pivot ``i``: ``S = S_next + c c^T``."""
    S = np.asarray(S, dtype=np.float64)
    n = S.shape[0]
    scale = np.abs(np.diag(S)).max() if n else 0.0
    p = S[i, i]
    if not p > n * scale * np.finfo(np.float64).eps:
        raise ZeroPivot(f"pivot {i} is {p!r}")
    c = S[:, i] / np.sqrt(p)
    S_next = S - np.outer(c, c)
    # row/column i vanish exactly in exact arithmetic
    S_next[i, :] = 0.0
    S_next[:, i] = 0.0
    return S_next, c


def schur1_oracle(K: SimplicialComplex2, edge: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """First Schur complement of ``L1_up`` at ``edge`` split as ``H1 + K1``.

    ``H1`` sums the rank-1 terms of triangles avoiding the pivot edge.
    ``K1`` is the cyclic term over ordered pairs of triangles incident to it,
    built from sign-normalized columns (each ``+`` on the pivot) and scaled
    by ``1 / (2 Omega)`` with ``Omega`` the total weight of those triangles.
    """
    w, E = rank1_factors(K)
    Ed = E.to_dense()
    incident = np.flatnonzero(Ed[edge] != 0.0)
    if incident.size == 0:
        raise NoIncidentTriangle(f"edge {edge} lies in no triangle")
    others = np.setdiff1d(np.arange(K.m2), incident)
    H1 = (Ed[:, others] * w[others]) @ Ed[:, others].T
    e_hat = Ed[:, incident] * np.sign(Ed[edge, incident])
    wi = w[incident]
    omega = wi.sum()
    K1 = np.zeros((K.m1, K.m1))
    for a in range(incident.size):
        for b in range(incident.size):
            d = e_hat[:, a] - e_hat[:, b]
            K1 += wi[a] * wi[b] * np.outer(d, d)
    K1 /= 2.0 * omega
    return H1, K1


def verify_kappa_identity(K: SimplicialComplex2, P, cap: Optional[int] = None) -> tuple[float, float]:
    """``(κ₊ of C⁺ L C⁺ᵀ, κ₊(Π V1)²)`` with the full Moore-Penrose of ``C``.

    ``V1`` spans im B2ᵀ (right singular vectors of the weighted ``B2``);
    ``KernelClash`` is raised when the subsample loses rank on it.
    """
    check_dense_cap((K.m1, K.m2), cap)
    C = P.factor.to_dense(cap)
    Lp = laplacian_matrix(K, "up1")[P.edge_perm][:, P.edge_perm].toarray()
    Cp = np.linalg.pinv(C)
    lhs = kappa_plus(Cp @ Lp @ Cp.T, cap).kappa_plus

    B2 = _b2_scipy(K, True).toarray()
    _, s, Vt = np.linalg.svd(B2, full_matrices=False)
    rho = numerical_rank(s, B2.shape)
    V1 = Vt[:rho].T
    PV = V1 * P.pi[:, None]
    summ = kappa_plus(PV, cap)
    if summ.rank < rho:
        raise KernelClash(f"subsample keeps rank {summ.rank} of {rho} on im B2^T")
    return float(lhs), float(summ.kappa_plus**2)
