import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import Delaunay

from hodgeprec.errors import DegenerateInput, TargetUnreachable
from hodgeprec.generator import (
    GeneratorParams,
    assign_weights,
    clique_triangles,
    consistent_rhs,
    delaunay,
    enriched_triangulation,
    minrule_weights,
    product_weights,
    q,
    sparsity,
    streams,
)
from hodgeprec.complex import laplacian_matrix
from hodgeprec.spectral import betti_by_rank

from conftest import two_triangles


def canon(tris):
    return sorted(tuple(sorted(t)) for t in np.asarray(tris).tolist())


def brute_delaunay(pts):
    """Triangles whose circumcircle holds no other point (general position)."""
    out = []
    for a, b, c in combinations(range(len(pts)), 3):
        A = np.array([[pts[i][0], pts[i][1], 1.0] for i in (a, b, c)])
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        ok = True
        pa, pb, pc = pts[a], pts[b], pts[c]
        orient = np.sign(np.linalg.det(A))
        for d in range(len(pts)):
            if d in (a, b, c):
                continue
            M = np.array([[p[0] - pts[d][0], p[1] - pts[d][1],
                           (p[0] - pts[d][0]) ** 2 + (p[1] - pts[d][1]) ** 2] for p in (pa, pb, pc)])
            if orient * np.linalg.det(M) > 0:
                ok = False
                break
        if ok:
            out.append((a, b, c))
    return sorted(out)


def test_square():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert canon(delaunay(pts)) == [(0, 1, 2), (1, 2, 3)]


def test_degenerate_input():
    with pytest.raises(DegenerateInput):
        delaunay(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    with pytest.raises(DegenerateInput):
        delaunay(np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 14))
def test_delaunay_matches_brute_force(seed, n):
    pts = np.random.default_rng(seed).random((n, 2))
    tris = canon(delaunay(pts))
    assert tris == brute_delaunay(pts)


def test_delaunay_matches_scipy(rng):
    for n in (20, 100, 300):
        pts = rng.random((n, 2))
        assert canon(delaunay(pts)) == canon(Delaunay(pts).simplices)


def test_q_and_sparsity():
    assert q(1) == pytest.approx(2.25 * math.log(4))
    assert sparsity(10, 0) == 0.0 and sparsity(0, 0) == 0.0
    assert sparsity(100, int(q(100))) <= 1.0


def test_streams_independent():
    a, b = streams(7), streams(7)
    assert a["points"].random() == b["points"].random()
    assert streams(7)["points"].random() != streams(7)["weights"].random()


def test_params_validation():
    for bad in (dict(n_vertices=3), dict(n_vertices=10, target_sparsity=0.0),
                dict(n_vertices=10, target_sparsity=1.5), dict(n_vertices=10, seed=-1),
                dict(n_vertices=10, weight_profile="gauss"), dict(n_vertices=10, eliminate=-1)):
        with pytest.raises(ValueError):
            GeneratorParams(**bad)


def test_determinism():
    p = GeneratorParams(30, 2, 0.3, "minrule_folded", seed=123)
    a, b = enriched_triangulation(p), enriched_triangulation(p)
    assert a.complex == b.complex
    assert np.array_equal(a.complex.w2, b.complex.w2) and np.array_equal(a.complex.w1, b.complex.w1)
    c = enriched_triangulation(GeneratorParams(30, 2, 0.3, "minrule_folded", seed=124))
    assert c.complex != a.complex


@pytest.mark.parametrize("seed", range(8))
def test_instance_invariants(seed):
    inst = enriched_triangulation(GeneratorParams(40, 2, 0.25, "bimodal", seed=seed))
    K = inst.complex
    # holes exist after elimination; enrichment cliques may fill them later
    assert inst.beta1 == 2
    # V2 is exactly the 3-cliques of the graph
    assert canon(K.triangles) == canon(clique_triangles(K.m0, [tuple(e) for e in K.edges.tolist()]))
    assert inst.nu <= 0.25 + 1e-12 and K.m2 <= q(K.m1) * 0.25 + 1e-9
    assert inst.nu >= inst.nu_delta
    assert inst.base_triangles.shape == (K.m2,)
    assert np.all((inst.points >= 0) & (inst.points <= 1))


@pytest.mark.parametrize("seed", range(5))
def test_holes_without_enrichment(seed):
    inst = enriched_triangulation(GeneratorParams(25, 2, 1e-9, seed=seed))
    assert inst.added_edges == [] and betti_by_rank(inst.complex) == (1, 2)


def test_eliminated_edges_absent():
    inst = enriched_triangulation(GeneratorParams(50, 3, 0.4, seed=9))
    edges = {tuple(e) for e in inst.complex.edges.tolist()}
    assert len(inst.eliminated) == 3 and not edges & set(inst.eliminated)


def test_pure_triangulation_when_target_below():
    inst = enriched_triangulation(GeneratorParams(30, 0, 1e-9, seed=2))
    assert inst.added_edges == [] and inst.nu == pytest.approx(inst.nu_delta)
    assert betti_by_rank(inst.complex) == (1, 0)


def test_target_unreachable():
    with pytest.raises(TargetUnreachable):
        enriched_triangulation(GeneratorParams(25, 2, 0.6, seed=0))


def test_minrule_example():
    K = two_triangles()
    w1 = np.array([0.9, 0.2, 0.5, 0.7, 0.3])
    assert minrule_weights(K, w1).tolist() == [0.2, 0.3]
    assert np.allclose(product_weights(K, w1), [0.9 * 0.2 * 0.7, 0.9 * 0.5 * 0.3])


@pytest.mark.parametrize("profile", ["unit", "bimodal", "cauchy", "minrule_folded", "minrule_uniform", "product"])
def test_profiles_positive(profile):
    inst = enriched_triangulation(GeneratorParams(30, 1, 0.3, profile, seed=4))
    K = inst.complex
    assert np.all(K.w2 > 0) and np.all(K.w1 > 0) and np.all(K.w0 == 1)
    if profile.startswith("minrule"):
        assert np.array_equal(K.w2, K.w1[K.triangle_edges].min(axis=1))
    if profile in ("unit", "bimodal", "cauchy"):
        assert np.all(K.w1 == 1)


def test_bimodal_moments():
    inst = enriched_triangulation(GeneratorParams(60, 0, 0.5, "bimodal", seed=1))
    base = inst.base_triangles
    assert base.any() and (~base).any()
    rng = np.random.default_rng(0)
    draws = np.concatenate([assign_weights(inst.complex, "bimodal", rng, base).w2[None] for _ in range(200)])
    assert draws[:, base].mean() == pytest.approx(1.0, abs=0.02)
    assert draws[:, ~base].mean() == pytest.approx(0.5, abs=0.01)
    assert draws[:, ~base].std() == pytest.approx(1 / 6, abs=0.01)


def test_consistent_rhs_in_range():
    inst = enriched_triangulation(GeneratorParams(30, 2, 0.2, seed=6))
    K = inst.complex
    f, x0 = consistent_rhs(K, 6)
    assert np.allclose(f, laplacian_matrix(K, "up1") @ x0)
    f2, _ = consistent_rhs(K, 6)
    assert np.array_equal(f, f2)
