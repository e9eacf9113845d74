"""Edge collapses and the greedy weak-collapsibility test."""
from __future__ import annotations

from bisect import bisect_left
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional, Union

import numpy as np

from .complex import SimplicialComplex2, adjacency_and_free, subcomplex
from .errors import NotFree, UnknownEdge


@dataclass(frozen=True)
class CollapseResult:
    """Collapsing sequence ``sigma`` (edges), maximal faces ``tau`` and what is left.

    ``residual_edge_ids`` / ``residual_triangle_ids`` index the residual's
    simplices in the input complex.
    """

    sigma: list[int]
    tau: list[int]
    residual: SimplicialComplex2
    weakly_collapsible: bool
    residual_edge_ids: np.ndarray = field(repr=False)
    residual_triangle_ids: np.ndarray = field(repr=False)
    n_removals: int = 0


def _edge_id(K: SimplicialComplex2, edge: Union[int, tuple[int, int]]) -> int:
    if isinstance(edge, (int, np.integer)):
        if not 0 <= edge < K.m1:
            raise UnknownEdge(f"edge index {edge} out of range")
        return int(edge)
    u, v = edge
    return K.find_edge(int(u), int(v))


def collapse_at(K: SimplicialComplex2, edge: Union[int, tuple[int, int]]) -> SimplicialComplex2:
    """Remove a free edge together with its unique triangle."""
    e = _edge_id(K, edge)
    delta, _ = adjacency_and_free(K)
    if len(delta[e]) != 1:
        raise NotFree(f"edge {tuple(K.edges[e])} lies in {len(delta[e])} triangles")
    keep_e = np.delete(np.arange(K.m1), e)
    keep_t = np.delete(np.arange(K.m2), delta[e][0])
    return subcomplex(K, keep_e, keep_t)


def greedy_sequence(
    tri_edges: np.ndarray,
    m1: int,
    triangle_ids: Optional[Iterable[int]] = None,
    rng: Optional[np.random.Generator] = None,
) -> tuple[list[int], list[int], list[int], int]:
    """GREEDY_COLLAPSE on raw incidence data.

    Works on the triangles ``triangle_ids`` (default: all rows of
    ``tri_edges``).  Returns ``(sigma, tau, remaining_triangles, removals)``.
    ``F`` is a FIFO seeded in ascending edge order; with ``rng`` the next
    free edge is drawn at random instead.
    """
    if triangle_ids is None:
        triangle_ids = range(len(tri_edges))
    delta: list[list[int]] = [[] for _ in range(m1)]
    n_alive = 0
    for t in sorted(int(t) for t in triangle_ids):
        n_alive += 1
        for e in tri_edges[t]:
            delta[e].append(t)

    free = [e for e in range(m1) if len(delta[e]) == 1]
    queue: deque[int] = deque(free)
    pool = free
    sigma: list[int] = []
    tau: list[int] = []
    removals = 0

    while n_alive and (pool if rng is not None else queue):
        if rng is not None:
            i = int(rng.integers(len(pool)))
            pool[i], pool[-1] = pool[-1], pool[i]
            s = pool.pop()
        else:
            s = queue.popleft()
        if len(delta[s]) != 1:
            # its triangle went away through another edge
            continue
        t = delta[s][0]
        delta[s] = []
        sigma.append(s)
        tau.append(t)
        n_alive -= 1
        for e in tri_edges[t]:
            if e == s:
                continue
            lst = delta[e]
            del lst[bisect_left(lst, t)]
            removals += 1
            if len(lst) == 1:
                (pool if rng is not None else queue).append(int(e))

    remaining = sorted({t for lst in delta for t in lst})
    return sigma, tau, remaining, removals


def greedy_collapse(K: SimplicialComplex2, rng: Optional[np.random.Generator] = None) -> CollapseResult:
    """Collapse free edges until none is left or every triangle is gone."""
    sigma, tau, remaining, removals = greedy_sequence(K.triangle_edges, K.m1, rng=rng)
    edge_ids = np.setdiff1d(np.arange(K.m1), np.asarray(sigma, dtype=np.int64))
    tri_ids = np.asarray(remaining, dtype=np.int64)
    return CollapseResult(
        sigma=sigma,
        tau=tau,
        residual=subcomplex(K, edge_ids, tri_ids),
        weakly_collapsible=not remaining,
        residual_edge_ids=edge_ids,
        residual_triangle_ids=tri_ids,
        n_removals=removals,
    )


def is_weakly_collapsible(K: SimplicialComplex2) -> bool:
    # every collapse consumes one edge and one triangle
    if K.m2 > K.m1:
        return False
    return greedy_collapse(K).weakly_collapsible
