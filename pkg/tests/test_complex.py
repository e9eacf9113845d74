import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgeprec.complex import (
    adjacency_and_free,
    boundary,
    build_complex,
    laplacian,
    laplacian_matrix,
    rank1_terms,
    subcomplex,
)
from hodgeprec.errors import DuplicateSimplex, IndexOutOfRange, MissingFace, NonPositiveWeight
from hodgeprec.spectral import kappa_plus

from conftest import two_triangles, random_complex, single_triangle, tetra_boundary


def test_single_triangle_shape():
    K = single_triangle()
    assert K.shape == (3, 3, 1)


def test_canonical_ordering():
    K = build_complex(3, [(2, 1), (1, 0), (0, 2)], [(2, 0, 1)], w1=[3.0, 1.0, 2.0])
    assert K.edges.tolist() == [[0, 1], [0, 2], [1, 2]]
    assert K.triangles.tolist() == [[0, 1, 2]]
    # weights travel with their edges
    assert K.w1.tolist() == [1.0, 2.0, 3.0]


def test_missing_face():
    with pytest.raises(MissingFace):
        build_complex(3, [(0, 1), (0, 2)], [(0, 1, 2)])


def test_bad_inputs():
    with pytest.raises(NonPositiveWeight):
        build_complex(3, [(0, 1)], w1=[0.0])
    with pytest.raises(NonPositiveWeight):
        build_complex(3, [(0, 1)], w1=[np.nan])
    with pytest.raises(IndexOutOfRange):
        build_complex(3, [(0, 3)])
    with pytest.raises(DuplicateSimplex):
        build_complex(3, [(0, 1), (1, 0)])
    with pytest.raises(DuplicateSimplex):
        build_complex(3, [(0, 0)])


def test_immutable():
    K = two_triangles()
    with pytest.raises(ValueError):
        K.edges[0, 0] = 3
    with pytest.raises(ValueError):
        K.w2[0] = 2.0


def test_two_triangles_columns():
    B2 = boundary(two_triangles(), 2, weighted=False).to_dense()
    assert B2[:, 0].tolist() == [1, -1, 0, 1, 0]
    assert B2[:, 1].tolist() == [1, 0, -1, 0, 1]


def test_single_triangle_up1():
    K = single_triangle()
    assert boundary(K, 2, weighted=False).to_dense()[:, 0].tolist() == [1, -1, 1]
    expected = np.array([[1, -1, 1], [-1, 1, -1], [1, -1, 1]], dtype=float)
    assert np.array_equal(laplacian(K, "up1").to_dense(), expected)


def test_two_triangles_up1_spectrum():
    L = laplacian(two_triangles(), "up1").to_dense()
    ev = np.sort(np.linalg.eigvalsh(L))
    assert np.allclose(ev[-2:], [2.0, 4.0], atol=1e-13)
    assert np.allclose(ev[:-2], 0.0, atol=1e-13)


def test_empty_triangles_up1_zero():
    K = build_complex(3, [(0, 1), (1, 2)])
    assert np.array_equal(laplacian(K, "up1").to_dense(), np.zeros((2, 2)))


def test_rank1_terms_two_triangles():
    terms = rank1_terms(two_triangles())
    assert [w for w, _ in terms] == [1.0, 1.0]
    assert terms[0][1].tolist() == [1, -1, 0, 1, 0]
    assert terms[1][1].tolist() == [1, 0, -1, 0, 1]
    (w, e), = rank1_terms(single_triangle(4.0))
    assert w == 4.0


def test_adjacency_two_triangles():
    delta, free = adjacency_and_free(two_triangles())
    assert delta[0] == [0, 1]
    assert free == [1, 2, 3, 4]


def test_adjacency_tetra_and_empty():
    delta, free = adjacency_and_free(tetra_boundary())
    assert all(len(d) == 2 for d in delta) and free == []
    delta, free = adjacency_and_free(build_complex(3, [(0, 1), (1, 2)]))
    assert delta == [[], []] and free == []


def test_subcomplex_keeps_weights():
    K = build_complex(4, [(0, 1), (0, 2), (1, 2), (2, 3)], [(0, 1, 2)], w1=[1, 2, 3, 4], w2=[5])
    S = subcomplex(K, [0, 3], [])
    assert S.edges.tolist() == [[0, 1], [2, 3]] and S.w1.tolist() == [1.0, 4.0] and S.m0 == 4


@st.composite
def complexes(draw, weighted=True):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(3, 9))
    return random_complex(np.random.default_rng(seed), n, 0.7, 0.6, weighted=weighted)


@settings(max_examples=60, deadline=None)
@given(complexes(), st.booleans())
def test_chain_property(K, weighted):
    B1 = boundary(K, 1, weighted).to_dense()
    B2 = boundary(K, 2, weighted).to_dense()
    worst = np.abs(B1 @ B2).max(initial=0.0)
    # unweighted entries are small integers, so the product is exact
    assert worst == 0.0 if not weighted else worst <= 1e-14


@settings(max_examples=60, deadline=None)
@given(complexes(weighted=False))
def test_b2_columns_signed(K):
    B2 = boundary(K, 2, weighted=False)
    for rows, vals in B2.columns():
        assert len(rows) == 3 and set(np.abs(vals)) == {1.0}
        assert vals[0] == 1.0


@settings(max_examples=60, deadline=None)
@given(complexes())
def test_rank1_sum_and_symmetry(K):
    L = laplacian(K, "up1").to_dense()
    S = sum((w * np.outer(e, e) for w, e in rank1_terms(K)), np.zeros((K.m1, K.m1)))
    assert np.linalg.norm(S - L) <= 1e-13 * max(np.linalg.norm(L), 1.0)
    for kind in ("up0", "up1", "down1", "full1"):
        D = laplacian(K, kind).to_dense()
        assert np.abs(D - D.T).max(initial=0.0) <= 1e-14
        assert np.linalg.eigvalsh(D).min(initial=0.0) > -1e-10


@settings(max_examples=40, deadline=None)
@given(complexes())
def test_harmonic_dimension(K):
    full = kappa_plus(laplacian_matrix(K, "full1")).kernel_dim
    B1 = boundary(K, 1).to_dense()
    B2 = boundary(K, 2).to_dense()
    # ker B1 ∩ ker B2ᵀ as the null space of the stacked operator
    stacked = np.vstack([B1, B2.T]) if K.m2 else B1
    s = np.linalg.svd(stacked, compute_uv=False)
    tol = max(stacked.shape) * (s[0] if s.size else 0) * np.finfo(float).eps
    assert full == K.m1 - int(np.sum(s > tol))
