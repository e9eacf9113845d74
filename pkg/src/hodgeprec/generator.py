"""Enriched Delaunay triangulations of the unit square with holes and weights.

Randomness comes from one ``numpy.random.SeedSequence(seed)`` spawned into
independent PCG64 sub-streams, one per stage (see ``STREAMS``), so that for
instance changing the target sparsity leaves the point set untouched.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Optional, Sequence

import numpy as np

from .complex import SimplicialComplex2, build_complex, laplacian_matrix, with_weights
from .errors import DegenerateInput, TargetUnreachable
from .spectral import betti_by_rank
from .sparse import DEFAULT_DENSE_CAP

PROFILES = ("unit", "bimodal", "cauchy", "minrule_folded", "minrule_uniform", "product")
STREAMS = ("points", "elimination", "enrichment", "weights", "rhs")
MAX_ELIMINATION_ATTEMPTS = 100
MAX_ENRICHMENT_SKIPS = 1000
CAUCHY_LOC, CAUCHY_SCALE = 1.0, 0.1


def q(m1: int) -> float:
    """Triangle budget of a sparse complex with ``m1`` edges: 9 C² m1 ln(4 m1), C = 1/2."""
    return 2.25 * m1 * math.log(4 * m1) if m1 > 0 else 0.0


def sparsity(m1: int, m2: int) -> float:
    return m2 / q(m1) if m1 > 0 else 0.0


def streams(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(int(seed)).spawn(len(STREAMS))
    return {name: np.random.Generator(np.random.PCG64(c)) for name, c in zip(STREAMS, children)}


@dataclass(frozen=True)
class GeneratorParams:
    n_vertices: int
    eliminate: int = 0
    target_sparsity: float = 1e-9
    weight_profile: str = "unit"
    seed: int = 0

    def __post_init__(self):
        if self.n_vertices < 4:
            raise ValueError("n_vertices must be at least 4 (the square's corners)")
        if self.eliminate < 0:
            raise ValueError("eliminate must be non-negative")
        if not 0.0 < self.target_sparsity <= 1.0:
            raise ValueError("target_sparsity must lie in (0, 1]")
        if self.weight_profile not in PROFILES:
            raise ValueError(f"unknown weight profile {self.weight_profile!r}; expected one of {PROFILES}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class Instance:
    complex: SimplicialComplex2
    points: np.ndarray
    base_triangles: np.ndarray  # mask over complex.triangles
    eliminated: list[tuple[int, int]]
    nu_delta: float
    nu: float
    params: GeneratorParams
    beta1: Optional[int] = None
    elimination_attempts: int = 0
    enrichment_skips: int = 0
    added_edges: list[tuple[int, int]] = field(default_factory=list)

    def provenance(self) -> dict:
        return {
            "generator": "enriched_triangulation",
            "params": asdict(self.params),
            "nu_delta": self.nu_delta,
            "nu": self.nu,
            "beta1": self.beta1,
            "eliminated": [list(e) for e in self.eliminated],
            "elimination_attempts": self.elimination_attempts,
            "base_triangles": np.flatnonzero(self.base_triangles).tolist(),
        }


# -- Delaunay ----------------------------------------------------------------


def _exact(points: np.ndarray) -> list[tuple[int, int]]:
    """Scale float coordinates to a common power-of-two denominator."""
    fr = [Fraction(float(v)) for v in points.reshape(-1)]
    den = max(f.denominator for f in fr)
    ints = [int(f * den) for f in fr]
    return list(zip(ints[0::2], ints[1::2]))


def _orient(a, b, c) -> int:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _incircle(a, b, c, d) -> int:
    """Positive iff ``d`` lies strictly inside the circle through CCW ``a, b, c``."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    ad = adx * adx + ady * ady
    bd = bdx * bdx + bdy * bdy
    cd = cdx * cdx + cdy * cdy
    return (
        adx * (bdy * cd - bd * cdy)
        - ady * (bdx * cd - bd * cdx)
        + ad * (bdx * cdy - bdy * cdx)
    )


def delaunay(points) -> np.ndarray:
    """Bowyer-Watson with a super-triangle and exact integer predicates.

    Points on a circumcircle do not count as inside it, so among cocircular
    configurations the one built from lower-index points survives.  Returns
    sorted vertex triples in lexicographic order.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegenerateInput("need at least 3 points in the plane")
    if not np.all(np.isfinite(pts)):
        raise DegenerateInput("coordinates must be finite")
    if len(np.unique(pts, axis=0)) != len(pts):
        raise DegenerateInput("duplicate points")
    P = _exact(pts)
    n = len(P)
    if all(_orient(P[0], P[1], P[k]) == 0 for k in range(2, n)):
        raise DegenerateInput("all points are collinear")

    xs = [p[0] for p in P]
    ys = [p[1] for p in P]
    cx, cy = (min(xs) + max(xs)) // 2, (min(ys) + max(ys)) // 2
    big = (max(max(xs) - min(xs), max(ys) - min(ys)) + 1) << 64
    P = P + [(cx - 3 * big, cy - 3 * big), (cx + 3 * big, cy - 3 * big), (cx, cy + 3 * big)]
    s0 = n

    tris: dict[int, tuple[int, int, int]] = {}
    owner: dict[tuple[int, int], int] = {}  # directed CCW edge -> triangle id
    next_id = 0

    def add(a, b, c):
        nonlocal next_id
        t = next_id
        next_id += 1
        tris[t] = (a, b, c)
        owner[(a, b)] = t
        owner[(b, c)] = t
        owner[(c, a)] = t
        return t

    def drop(t):
        a, b, c = tris.pop(t)
        for e in ((a, b), (b, c), (c, a)):
            if owner.get(e) == t:
                del owner[e]

    last = add(s0, s0 + 1, s0 + 2)
    for k in range(n):
        p = P[k]
        # walk to a triangle containing p
        t = last if last in tris else next(iter(tris))
        for _ in range(4 * len(tris) + 8):
            a, b, c = tris[t]
            for u, v in ((a, b), (b, c), (c, a)):
                if _orient(P[u], P[v], p) < 0:
                    t = owner[(v, u)]
                    break
            else:
                break
        else:  # pragma: no cover - walks terminate on Delaunay meshes
            t = next(s for s, (a, b, c) in tris.items() if _incircle(P[a], P[b], P[c], p) > 0)
        # grow the cavity of triangles whose circumcircle strictly contains p
        cavity = {t}
        stack = [t]
        while stack:
            s = stack.pop()
            a, b, c = tris[s]
            for u, v in ((a, b), (b, c), (c, a)):
                nb = owner.get((v, u))
                if nb is not None and nb not in cavity:
                    x, y, z = tris[nb]
                    if _incircle(P[x], P[y], P[z], p) > 0:
                        cavity.add(nb)
                        stack.append(nb)
        boundary = []
        for s in cavity:
            a, b, c = tris[s]
            for u, v in ((a, b), (b, c), (c, a)):
                if owner.get((v, u)) not in cavity:
                    boundary.append((u, v))
        for s in cavity:
            drop(s)
        for u, v in boundary:
            last = add(u, v, k)

    out = sorted(tuple(sorted(tr)) for tr in tris.values() if max(tr) < s0)
    return np.array(out, dtype=np.int64).reshape(-1, 3)


# -- combinatorics -------------------------------------------------------------


def _edge_set(triangles: np.ndarray) -> set[tuple[int, int]]:
    es = set()
    for u, v, w in triangles.tolist():
        es.update(((u, v), (u, w), (v, w)))
    return es


def _neighbors(n: int, edges) -> list[set[int]]:
    nb: list[set[int]] = [set() for _ in range(n)]
    for u, v in edges:
        nb[u].add(v)
        nb[v].add(u)
    return nb


def clique_triangles(n: int, edges) -> list[tuple[int, int, int]]:
    """All 3-cliques of the graph, as sorted triples."""
    nb = _neighbors(n, edges)
    out = []
    for u, v in sorted(edges):
        for w in nb[u] & nb[v]:
            if w > v:
                out.append((u, v, w))
    return sorted(out)


def _beta1(n: int, edges, triangles) -> int:
    K = build_complex(n, sorted(edges), sorted(triangles))
    return betti_by_rank(K, DEFAULT_DENSE_CAP)[1]


def _eliminate(n, edges, tris, hull_edges, d, rng):
    """Remove ``d`` interior edges and their two triangles; sites share no triangle."""
    inc: dict[tuple[int, int], list[tuple[int, int, int]]] = {e: [] for e in edges}
    for t in tris:
        u, v, w = t
        for e in ((u, v), (u, w), (v, w)):
            inc[e].append(t)
    candidates = sorted(e for e in edges if e not in hull_edges and len(inc[e]) == 2)
    if d == 0:
        return [], edges, tris, 0, None
    if len(candidates) < d:
        raise DegenerateInput(f"only {len(candidates)} interior edges available for {d} holes")
    checkable = len(edges) <= DEFAULT_DENSE_CAP
    last = None
    for attempt in range(1, MAX_ELIMINATION_ATTEMPTS + 1):
        pick = rng.choice(len(candidates), size=d, replace=False)
        sites = sorted(candidates[i] for i in pick)
        gone = [t for e in sites for t in inc[e]]
        if len(set(gone)) < len(gone):
            continue
        new_edges = edges - set(sites)
        new_tris = sorted(set(tris) - set(gone))
        b1 = _beta1(n, new_edges, new_tris) if checkable else None
        last = (sites, new_edges, new_tris, attempt, b1)
        if b1 is None or b1 == d:
            return last
    if last is None:
        raise DegenerateInput(f"no {d} elimination sites without shared triangles found")
    return last


def _max_triangles(n: int, removed: Sequence[tuple[int, int]]) -> int:
    rm = set(removed)
    total = math.comb(n, 3)
    bad = 0
    for u, v, w in combinations(range(n), 3):
        if (u, v) in rm or (u, w) in rm or (v, w) in rm:
            bad += 1
    return total - bad


def enriched_triangulation(params: GeneratorParams) -> Instance:
    """Delaunay triangulation, clique completion, holes, enrichment, weights."""
    rngs = streams(params.seed)
    n = params.n_vertices
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    pts = np.vstack([corners, rngs["points"].random((n - 4, 2))])

    faces = delaunay(pts)
    face_count: dict[tuple[int, int], int] = {}
    for u, v, w in faces.tolist():
        for e in ((u, v), (u, w), (v, w)):
            face_count[e] = face_count.get(e, 0) + 1
    hull = {e for e, c in face_count.items() if c == 1}
    edges = set(face_count)
    tris = clique_triangles(n, edges)

    eliminated, edges, tris, attempts, b1 = _eliminate(
        n, edges, tris, hull, params.eliminate, rngs["elimination"]
    )
    base = set(tris)
    m1, m2 = len(edges), len(tris)
    nu_delta = sparsity(m1, m2)
    nu = params.target_sparsity

    added: list[tuple[int, int]] = []
    skips = 0
    if nu > nu_delta:
        m1_max = math.comb(n, 2) - len(eliminated)
        m2_max = _max_triangles(n, eliminated)
        if nu * q(m1_max) > m2_max:
            raise TargetUnreachable(
                f"sparsity {nu:g} needs {nu * q(m1_max):.0f} triangles but at most {m2_max} exist "
                f"on {n} vertices (max reachable {m2_max / q(m1_max):.4f})"
            )
        nb = _neighbors(n, edges)
        forbidden = set(eliminated)
        cand = [e for e in combinations(range(n), 2) if e not in edges and e not in forbidden]
        order = rngs["enrichment"].permutation(len(cand))
        new_tris = []
        for i in order.tolist():
            u, v = cand[i]
            common = nb[u] & nb[v]
            if (m2 + len(common)) / q(m1 + 1) <= nu:
                edges.add((u, v))
                nb[u].add(v)
                nb[v].add(u)
                added.append((u, v))
                new_tris.extend(tuple(sorted((u, v, w))) for w in common)
                m1 += 1
                m2 += len(common)
            else:
                skips += 1
                if skips >= MAX_ENRICHMENT_SKIPS:
                    break
        tris = sorted(set(tris) | set(new_tris))

    K = build_complex(n, sorted(edges), tris)
    tri_list = [tuple(t) for t in K.triangles.tolist()]
    base_mask = np.array([t in base for t in tri_list], dtype=bool)
    K = assign_weights(K, params.weight_profile, rngs["weights"], base_mask)
    return Instance(
        complex=K,
        points=pts,
        base_triangles=base_mask,
        eliminated=eliminated,
        nu_delta=nu_delta,
        nu=sparsity(K.m1, K.m2),
        params=params,
        beta1=b1,
        elimination_attempts=attempts,
        enrichment_skips=skips,
        added_edges=added,
    )


# -- weights -------------------------------------------------------------------


def _positive_normal(rng, mean, sd, size) -> np.ndarray:
    out = rng.normal(mean, sd, size)
    bad = out <= 0
    while bad.any():
        out[bad] = rng.normal(mean, sd, int(bad.sum()))
        bad = out <= 0
    return out


def _folded_normal(rng, size) -> np.ndarray:
    out = np.abs(rng.standard_normal(size))
    bad = out == 0
    while bad.any():
        out[bad] = np.abs(rng.standard_normal(int(bad.sum())))
        bad = out == 0
    return out


def minrule_weights(K: SimplicialComplex2, w1: np.ndarray) -> np.ndarray:
    return np.asarray(w1)[K.triangle_edges].min(axis=1)


def product_weights(K: SimplicialComplex2, w1: np.ndarray) -> np.ndarray:
    return np.asarray(w1)[K.triangle_edges].prod(axis=1)


def assign_weights(
    K: SimplicialComplex2,
    profile: str,
    seed,
    base_triangles: Optional[np.ndarray] = None,
) -> SimplicialComplex2:
    """Weights for one of ``PROFILES``; ``seed`` may be an int or a Generator.

    ``bimodal`` needs ``base_triangles`` (mask of the original triangulation's
    triangles); without it every triangle counts as original.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ones1 = np.ones(K.m1)
    w0 = np.ones(K.m0)
    if profile == "unit":
        return with_weights(K, w0, ones1, np.ones(K.m2))
    if profile == "bimodal":
        base = np.ones(K.m2, bool) if base_triangles is None else np.asarray(base_triangles, bool)
        w2 = np.empty(K.m2)
        w2[base] = _positive_normal(rng, 1.0, 1.0 / 3.0, int(base.sum()))
        w2[~base] = _positive_normal(rng, 0.5, 1.0 / 6.0, int((~base).sum()))
        return with_weights(K, w0, ones1, w2)
    if profile == "cauchy":
        w2 = np.abs(CAUCHY_LOC + CAUCHY_SCALE * rng.standard_cauchy(K.m2))
        while np.any(w2 == 0):
            z = w2 == 0
            w2[z] = np.abs(CAUCHY_LOC + CAUCHY_SCALE * rng.standard_cauchy(int(z.sum())))
        return with_weights(K, w0, ones1, w2)
    if profile in ("minrule_folded", "product"):
        w1 = _folded_normal(rng, K.m1)
    elif profile == "minrule_uniform":
        w1 = 1.0 - rng.random(K.m1)
    else:
        raise ValueError(f"unknown weight profile {profile!r}; expected one of {PROFILES}")
    w2 = product_weights(K, w1) if profile == "product" else minrule_weights(K, w1)
    return with_weights(K, w0, w1, w2)


def consistent_rhs(K: SimplicialComplex2, seed) -> tuple[np.ndarray, np.ndarray]:
    """``(f, x0)`` with ``f = L1_up x0`` and ``x0`` standard normal."""
    rng = seed if isinstance(seed, np.random.Generator) else streams(seed)["rhs"]
    x0 = rng.standard_normal(K.m1)
    return laplacian_matrix(K, "up1") @ x0, x0
