import numpy as np
import pytest

from hodgeprec.complex import build_complex


def two_triangles():
    # two triangles glued along the first edge; vertices 1..4 relabelled 0..3
    return build_complex(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)], [(0, 1, 2), (0, 1, 3)])


def single_triangle(w2=1.0):
    return build_complex(3, [(0, 1), (0, 2), (1, 2)], [(0, 1, 2)], w2=[w2])


def tetra_boundary(w2=None):
    edges = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    tris = [(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)]
    return build_complex(4, edges, tris, w2=w2)


def kite():
    # edges {12,13,23,24,34}, triangle {234}, relabelled 0..3
    return build_complex(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)], [(1, 2, 3)])


def random_complex(rng, n, p_edge=0.5, p_tri=0.5, weighted=False):
    """Random graph on ``n`` vertices with a random subset of its 3-cliques."""
    edges = [(u, v) for u in range(n) for v in range(u + 1, n) if rng.random() < p_edge]
    es = set(edges)
    tris = [
        (u, v, w)
        for u in range(n)
        for v in range(u + 1, n)
        for w in range(v + 1, n)
        if (u, v) in es and (u, w) in es and (v, w) in es and rng.random() < p_tri
    ]
    kw = {}
    if weighted:
        kw = dict(
            w0=np.ones(n),
            w1=rng.uniform(0.2, 2.0, len(edges)),
            w2=rng.uniform(0.2, 2.0, len(tris)),
        )
    return build_complex(n, edges, tris, **kw)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
