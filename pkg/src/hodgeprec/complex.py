"""Weighted 2-skeleton simplicial complexes, boundary operators and Laplacians.

Simplices are oriented by ascending vertex index and stored in
lexicographic order.  Under that order the first (lowest-index) edge of
every triangle receives ``+1`` in the triangle's column of ``B2``.
"""
from __future__ import annotations

from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    DuplicateSimplex,
    IndexOutOfRange,
    MissingFace,
    NonPositiveWeight,
    UnknownEdge,
)
from .sparse import LinearOperator, SparseColumnMatrix

LAPLACIAN_KINDS = ("up0", "up1", "down1", "full1")


class SimplicialComplex2:
    """Vertices ``0..m0-1``, edges ``(u, v)`` with ``u < v`` and triangles
    ``(u, v, w)`` with ``u < v < w``, each with positive weights.

    Instances are immutable; construct them through :func:`build_complex`,
    which canonicalizes and validates.
    """

    def __init__(self, n_vertices, edges, triangles, w0, w1, w2, *, _validated=False):
        if not _validated:
            raise TypeError("use build_complex() to construct a SimplicialComplex2")
        self.n_vertices = int(n_vertices)
        self.edges = edges
        self.triangles = triangles
        self.w0 = w0
        self.w1 = w1
        self.w2 = w2
        for a in (edges, triangles, w0, w1, w2):
            a.flags.writeable = False

    # sizes -------------------------------------------------------------
    @property
    def m0(self) -> int:
        return self.n_vertices

    @property
    def m1(self) -> int:
        return len(self.edges)

    @property
    def m2(self) -> int:
        return len(self.triangles)

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.m0, self.m1, self.m2

    # lookups -----------------------------------------------------------
    @cached_property
    def edge_index(self) -> dict[tuple[int, int], int]:
        return {(int(u), int(v)): i for i, (u, v) in enumerate(self.edges)}

    def find_edge(self, u: int, v: int) -> int:
        key = (u, v) if u < v else (v, u)
        try:
            return self.edge_index[key]
        except KeyError:
            raise UnknownEdge(f"edge {key} is not in the complex") from None

    @cached_property
    def triangle_edges(self) -> np.ndarray:
        """``(m2, 3)`` edge indices of ``(u,v)``, ``(u,w)``, ``(v,w)`` per triangle."""
        out = np.empty((self.m2, 3), dtype=np.int64)
        idx = self.edge_index
        for t, (u, v, w) in enumerate(self.triangles.tolist()):
            out[t] = idx[(u, v)], idx[(u, w)], idx[(v, w)]
        out.flags.writeable = False
        return out

    # operators ---------------------------------------------------------
    def boundary(self, k: int, weighted: bool = True) -> SparseColumnMatrix:
        return boundary(self, k, weighted)

    def laplacian(self, kind: str) -> LinearOperator:
        return laplacian(self, kind)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialComplex2):
            return NotImplemented
        return (
            self.n_vertices == other.n_vertices
            and np.array_equal(self.edges, other.edges)
            and np.array_equal(self.triangles, other.triangles)
            and np.array_equal(self.w0, other.w0)
            and np.array_equal(self.w1, other.w1)
            and np.array_equal(self.w2, other.w2)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"SimplicialComplex2(m0={self.m0}, m1={self.m1}, m2={self.m2})"


def _canonical(simplices, arity: int, n_vertices: int, what: str) -> np.ndarray:
    arr = np.asarray(simplices, dtype=np.int64).reshape(-1, arity)
    if arr.size and (arr.min() < 0 or arr.max() >= n_vertices):
        raise IndexOutOfRange(f"{what} reference vertices outside 0..{n_vertices - 1}")
    arr = np.sort(arr, axis=1)
    if arity > 1 and arr.size and np.any(arr[:, 1:] == arr[:, :-1]):
        raise DuplicateSimplex(f"{what} with repeated vertices")
    return arr


def _weights(w, n: int, what: str) -> np.ndarray:
    if w is None:
        return np.ones(n)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w.shape != (n,):
        raise ValueError(f"{what} has length {w.shape[0]}, expected {n}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0):
        raise NonPositiveWeight(f"{what} must be finite and strictly positive")
    return w


def build_complex(
    n_vertices: int,
    edges: Sequence[Sequence[int]],
    triangles: Sequence[Sequence[int]] = (),
    w0=None,
    w1=None,
    w2=None,
) -> SimplicialComplex2:
    """Canonicalize and validate a weighted 2-complex.

    Weights, when given, are aligned with the order of the input lists and
    are permuted together with the simplices.  Missing weights default to 1.
    """
    n_vertices = int(n_vertices)
    if n_vertices < 0:
        raise IndexOutOfRange("n_vertices must be non-negative")
    e = _canonical(edges, 2, n_vertices, "edges")
    t = _canonical(triangles, 3, n_vertices, "triangles")
    w0 = _weights(w0, n_vertices, "w0")
    w1 = _weights(w1, len(e), "w1")
    w2 = _weights(w2, len(t), "w2")

    eo = np.lexsort((e[:, 1], e[:, 0])) if len(e) else np.zeros(0, dtype=np.int64)
    e, w1 = e[eo], w1[eo]
    if len(e) > 1 and np.any(np.all(e[1:] == e[:-1], axis=1)):
        raise DuplicateSimplex("duplicate edge")
    to = np.lexsort((t[:, 2], t[:, 1], t[:, 0])) if len(t) else np.zeros(0, dtype=np.int64)
    t, w2 = t[to], w2[to]
    if len(t) > 1 and np.any(np.all(t[1:] == t[:-1], axis=1)):
        raise DuplicateSimplex("duplicate triangle")

    present = {(int(u), int(v)) for u, v in e.tolist()}
    for u, v, w in t.tolist():
        for face in ((u, v), (u, w), (v, w)):
            if face not in present:
                raise MissingFace(f"triangle {(u, v, w)} lacks edge {face}")

    return SimplicialComplex2(
        n_vertices,
        e.reshape(-1, 2),
        t.reshape(-1, 3),
        w0,
        w1,
        w2,
        _validated=True,
    )


def with_weights(K: SimplicialComplex2, w0=None, w1=None, w2=None) -> SimplicialComplex2:
    """Copy of ``K`` with some weight vectors replaced (canonical order)."""
    return build_complex(
        K.n_vertices,
        K.edges,
        K.triangles,
        K.w0 if w0 is None else w0,
        K.w1 if w1 is None else w1,
        K.w2 if w2 is None else w2,
    )


def subcomplex(
    K: SimplicialComplex2,
    edge_ids: Optional[np.ndarray] = None,
    triangle_ids: Optional[np.ndarray] = None,
) -> SimplicialComplex2:
    """Keep the listed edges/triangles (all vertices are kept)."""
    edge_ids = np.arange(K.m1) if edge_ids is None else np.sort(np.asarray(edge_ids, dtype=np.int64))
    triangle_ids = (
        np.arange(K.m2) if triangle_ids is None else np.sort(np.asarray(triangle_ids, dtype=np.int64))
    )
    return build_complex(
        K.n_vertices,
        K.edges[edge_ids],
        K.triangles[triangle_ids],
        K.w0,
        K.w1[edge_ids],
        K.w2[triangle_ids],
    )


def _b1_scipy(K: SimplicialComplex2, weighted: bool) -> sp.csc_matrix:
    m1 = K.m1
    cols = np.repeat(np.arange(m1), 2)
    rows = K.edges.reshape(-1)
    vals = np.tile([-1.0, 1.0], m1)
    if weighted:
        vals = vals * np.sqrt(K.w1)[cols] / np.sqrt(K.w0)[rows]
    return sp.csc_matrix((vals, (rows, cols)), shape=(K.m0, m1))


def _b2_scipy(K: SimplicialComplex2, weighted: bool) -> sp.csc_matrix:
    m2 = K.m2
    cols = np.repeat(np.arange(m2), 3)
    rows = K.triangle_edges.reshape(-1)
    vals = np.tile([1.0, -1.0, 1.0], m2)
    if weighted:
        vals = vals * np.sqrt(K.w2)[cols] / np.sqrt(K.w1)[rows]
    return sp.csc_matrix((vals, (rows, cols)), shape=(K.m1, m2))


def boundary(K: SimplicialComplex2, k: int, weighted: bool = True) -> SparseColumnMatrix:
    """``B_k`` (k = 1, 2), optionally weighted as ``W_{k-1}^{-1} B_k W_k``."""
    if k == 1:
        return SparseColumnMatrix(_b1_scipy(K, weighted))
    if k == 2:
        return SparseColumnMatrix(_b2_scipy(K, weighted))
    raise ValueError("only k = 1 and k = 2 are supported")


def laplacian_matrix(K: SimplicialComplex2, kind: str) -> sp.csr_matrix:
    """Sparse Laplacian built from the weighted boundary operators."""
    if kind == "up0":
        b1 = _b1_scipy(K, True)
        out = b1 @ b1.T
    elif kind == "up1":
        b2 = _b2_scipy(K, True)
        out = b2 @ b2.T
    elif kind == "down1":
        b1 = _b1_scipy(K, True)
        out = b1.T @ b1
    elif kind == "full1":
        b1 = _b1_scipy(K, True)
        b2 = _b2_scipy(K, True)
        out = b1.T @ b1 + b2 @ b2.T
    else:
        raise ValueError(f"unknown Laplacian kind {kind!r}; expected one of {LAPLACIAN_KINDS}")
    out = sp.csr_matrix(out)
    if out.shape[0] == 0 or out.nnz == 0:
        return sp.csr_matrix(out.shape)
    out.sort_indices()
    return out


def laplacian(K: SimplicialComplex2, kind: str) -> LinearOperator:
    """``up0 = B1 B1^T``, ``up1 = B2 B2^T``, ``down1 = B1^T B1``, ``full1``."""
    return LinearOperator.from_matrix(laplacian_matrix(K, kind), symmetric=True)


def rank1_factors(K: SimplicialComplex2) -> tuple[np.ndarray, SparseColumnMatrix]:
    """Triangle weights and the columns ``e_t = W1^{-1} B2 delta_t``."""
    m2 = K.m2
    cols = np.repeat(np.arange(m2), 3)
    rows = K.triangle_edges.reshape(-1)
    vals = np.tile([1.0, -1.0, 1.0], m2) / np.sqrt(K.w1)[rows]
    E = SparseColumnMatrix.from_triplets(rows, cols, vals, (K.m1, m2))
    return K.w2.copy(), E


def rank1_terms(K: SimplicialComplex2) -> list[tuple[float, np.ndarray]]:
    """``[(w2(t), e_t)]`` with ``sum_t w2(t) e_t e_t^T == L1_up``."""
    w, E = rank1_factors(K)
    out = []
    for t in range(K.m2):
        rows, vals = E.column(t)
        e = np.zeros(K.m1)
        e[rows] = vals
        out.append((float(w[t]), e))
    return out


def adjacency_and_free(K: SimplicialComplex2) -> tuple[list[list[int]], list[int]]:
    """Incident-triangle lists per edge and the sorted list of free edges."""
    delta: list[list[int]] = [[] for _ in range(K.m1)]
    for t, row in enumerate(K.triangle_edges.tolist()):
        for e in row:
            delta[e].append(t)
    free = [e for e, ts in enumerate(delta) if len(ts) == 1]
    return delta, free
