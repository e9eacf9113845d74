import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hodgeprec.collapse import collapse_at, greedy_collapse, greedy_sequence, is_weakly_collapsible
from hodgeprec.complex import adjacency_and_free, build_complex
from hodgeprec.errors import NotFree, UnknownEdge

from conftest import two_triangles, kite, random_complex, single_triangle, tetra_boundary


def replay(K, sigma, tau):
    """Apply the collapses one by one, checking freeness at every step."""
    cur = K
    edges = [tuple(e) for e in K.edges.tolist()]
    tris = [tuple(t) for t in K.triangles.tolist()]
    for s, t in zip(sigma, tau):
        e = edges[s]
        delta, _ = adjacency_and_free(cur)
        i = cur.find_edge(*e)
        assert len(delta[i]) == 1
        assert tuple(cur.triangles[delta[i][0]]) == tris[t]
        cur = collapse_at(cur, e)
    return cur


def test_collapse_single_triangle():
    R = collapse_at(single_triangle(), (0, 1))
    assert R.shape == (3, 2, 0) and R.edges.tolist() == [[0, 2], [1, 2]]


def test_collapse_two_triangles():
    K = two_triangles()
    R = collapse_at(K, (0, 2))
    assert R.triangles.tolist() == [[0, 1, 3]]
    _, free = adjacency_and_free(R)
    assert R.find_edge(0, 1) in free
    with pytest.raises(NotFree):
        collapse_at(K, (0, 1))
    with pytest.raises(UnknownEdge):
        collapse_at(K, (2, 3))


def test_kite_weakly_collapsible():
    K = kite()
    res = greedy_collapse(K)
    assert res.weakly_collapsible and res.residual.m2 == 0
    assert len(res.sigma) == 1
    assert tuple(K.edges[res.sigma[0]]) in {(2, 3), (1, 3), (1, 2)}
    assert is_weakly_collapsible(K)


def test_tetra_is_a_core():
    K = tetra_boundary()
    res = greedy_collapse(K)
    assert not res.weakly_collapsible and res.sigma == [] and res.residual == K
    assert not is_weakly_collapsible(K)


def test_two_triangles_sequence():
    K = two_triangles()
    res = greedy_collapse(K)
    assert res.weakly_collapsible and len(res.sigma) == 2 and sorted(res.tau) == [0, 1]
    replay(K, res.sigma, res.tau)


def test_counting_bound_shortcut():
    # full 2-skeleton of the 5-simplex: m2 = 20 > m1 = 15
    edges = [(u, v) for u in range(6) for v in range(u + 1, 6)]
    tris = [(u, v, w) for u in range(6) for v in range(u + 1, 6) for w in range(v + 1, 6)]
    K = build_complex(6, edges, tris)
    assert K.m2 > K.m1 and not is_weakly_collapsible(K)


@st.composite
def small_complexes(draw):
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(3, 6))
    K = random_complex(np.random.default_rng(seed), n, 0.8, 0.7)
    return K


@settings(max_examples=100, deadline=None)
@given(small_complexes(), st.integers(0, 2**32 - 1))
def test_replay_and_invariants(K, seed):
    res = greedy_collapse(K, rng=np.random.default_rng(seed))
    assert len(res.sigma) == len(res.tau)
    assert len(set(res.sigma)) == len(res.sigma) and len(set(res.tau)) == len(res.tau)
    R = replay(K, res.sigma, res.tau)
    assert R.m1 == K.m1 - len(res.sigma) and R.m2 == K.m2 - len(res.tau)
    assert R == res.residual
    assert res.weakly_collapsible == (res.residual.m2 == 0)
    assert res.n_removals <= 2 * K.m2


@settings(max_examples=100, deadline=None)
@given(small_complexes())
def test_verdict_order_independent(K):
    verdict = greedy_collapse(K).weakly_collapsible
    rng = np.random.default_rng(K.m1 * 1000 + K.m2)
    for _ in range(20):
        assert greedy_collapse(K, rng=rng).weakly_collapsible == verdict


def test_greedy_sequence_on_subset():
    K = tetra_boundary()
    sigma, tau, rest, _ = greedy_sequence(K.triangle_edges, K.m1, [0, 1, 2])
    assert rest == [] and sorted(tau) == [0, 1, 2]
