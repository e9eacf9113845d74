import numpy as np
import pytest

from hodgeprec.complex import build_complex, laplacian_matrix, subcomplex
from hodgeprec.errors import NonFiniteEncountered, NontrivialHomology
from hodgeprec.generator import GeneratorParams, consistent_rhs, enriched_triangulation
from hodgeprec.hecs import build_preconditioner, heavy_subcomplex
from hodgeprec.solver import (
    cg,
    cgls,
    ichol_shifted,
    kernel_basis_u,
    solve_full_l1_parts,
    solve_up1,
)
from hodgeprec.sparse import LinearOperator

from conftest import two_triangles, random_complex, tetra_boundary


def test_cgls_identity_one_iteration():
    A = LinearOperator.identity(4)
    b = np.array([1.0, -2.0, 3.0, 0.5])
    x, rep = cgls(A, b, 1e-10)
    assert rep.iterations == 1 and rep.converged and np.allclose(x, b)
    assert rep.matvec_count == 2


def test_cgls_zero_rhs():
    x, rep = cgls(LinearOperator.identity(3), np.zeros(3))
    assert rep.iterations == 0 and rep.converged and not x.any() and rep.matvec_count == 0


def test_cgls_history_and_spd(rng):
    M = rng.standard_normal((20, 20))
    A = M @ M.T + 20 * np.eye(20)
    b = rng.standard_normal(20)
    x, rep = cgls(LinearOperator.from_matrix(A, symmetric=True), b, 1e-10)
    assert rep.converged and np.allclose(A @ x, b, atol=1e-9)
    assert len(rep.residual_history) == rep.iterations + 1
    assert rep.residual_history[-1] <= 1e-10


def test_cgls_nonfinite():
    A = LinearOperator((2, 2), lambda y: np.full(2, np.inf) * y.sum(), symmetric=True)
    with pytest.raises(NonFiniteEncountered):
        cgls(A, np.ones(2))


def test_cgls_max_iter():
    A = LinearOperator.from_matrix(np.diag(np.logspace(0, 8, 30)), symmetric=True)
    _, rep = cgls(A, np.ones(30), 1e-14, max_iter=3)
    assert rep.iterations == 3 and not rep.converged


def test_kernel_component_diagnostic():
    K = tetra_boundary()
    L = laplacian_matrix(K, "up1").toarray()
    f = np.zeros(K.m1)
    f[0] = 1.0  # has a component in ker L1_up
    x, rep = solve_up1(K, f, "none", 1e-8)
    assert not rep.converged and rep.diagnostic
    # the least-squares solution is still reached
    assert np.allclose(L @ x, L @ np.linalg.pinv(L) @ f, atol=1e-6)


@pytest.mark.parametrize("method", ["none", "hecs", "ichol"])
def test_solve_up1_methods(method, rng):
    K = tetra_boundary([4.0, 3.0, 2.0, 1.0])
    f, _ = consistent_rhs(K, rng)
    x, rep = solve_up1(K, f, method, 1e-10)
    assert rep.converged and rep.method == method
    assert np.abs(laplacian_matrix(K, "up1") @ x - f).max() <= 1e-9


def test_hecs_exact_on_weakly_collapsible(rng):
    for _ in range(10):
        K0 = random_complex(rng, 10, 0.6, 0.8, weighted=True)
        K = subcomplex(K0, None, heavy_subcomplex(K0).triangles)
        if K.m2 == 0:
            continue
        f, _ = consistent_rhs(K, rng)
        _, rep = solve_up1(K, f, "hecs", 1e-8)
        assert rep.converged and rep.iterations <= 2


def test_unknown_method():
    with pytest.raises(ValueError):
        solve_up1(two_triangles(), np.zeros(5), "jacobi")


def test_kernel_basis_u(rng):
    K = tetra_boundary()
    U = kernel_basis_u(K)
    assert U.shape == (6, 3)
    assert np.allclose(U.T @ U, np.eye(3), atol=1e-12)
    assert np.allclose(laplacian_matrix(K, "up1") @ U, 0.0, atol=1e-12)
    with pytest.raises(NontrivialHomology):
        kernel_basis_u(build_complex(3, [(0, 1), (0, 2), (1, 2)], []))
    with pytest.raises(NontrivialHomology):
        kernel_basis_u(build_complex(4, [(0, 1), (2, 3)], []))


def test_ichol_pattern_and_shift():
    K = tetra_boundary([1.0, 2.0, 3.0, 4.0])
    C = ichol_shifted(K)
    L = laplacian_matrix(K, "up1")
    pattern = set(zip(*np.nonzero(np.tril(L.toarray())))) | {(i, i) for i in range(K.m1)}
    F = C.factor.to_dense()
    assert set(zip(*np.nonzero(F))) <= pattern
    assert np.all(np.diag(F) > 0)
    assert C.alpha >= L.diagonal().sum() / K.m1
    # IC(0) reproduces the shifted matrix on the kept pattern
    M = L.toarray() + C.alpha * C.kernel_basis @ C.kernel_basis.T
    FF = F @ F.T
    for i, j in pattern:
        assert FF[i, j] == pytest.approx(M[i, j], abs=1e-12)


def test_ichol_requires_trivial_homology():
    with pytest.raises(NontrivialHomology):
        solve_up1(build_complex(4, [(0, 1), (1, 2), (2, 3), (0, 3)], []), np.zeros(4), "ichol")


def test_cg_plain(rng):
    M = rng.standard_normal((8, 8))
    A = M @ M.T + np.eye(8)
    b = rng.standard_normal(8)
    x, its = cg(A, b, 1e-12)
    assert np.abs(A @ x - b).max() <= 1e-12 and its <= 20 * 8
    assert cg(A, np.zeros(8), 1e-12)[1] == 0


def test_full_l1_random_instance():
    inst = enriched_triangulation(GeneratorParams(30, 0, 0.3, "minrule_folded", seed=5))
    K = inst.complex
    rng = np.random.default_rng(1)
    x0 = rng.standard_normal(K.m1)
    L1 = laplacian_matrix(K, "full1")
    f = L1 @ x0
    sol = solve_full_l1_parts(K, f, 1e-8)
    assert sol.residual <= 1e-6 * max(1.0, np.abs(f).max())
    # the split is orthogonal: down part in im B1ᵀ, up part killed by L1_down
    Ld = laplacian_matrix(K, "down1")
    assert np.abs(Ld @ sol.x_up).max() <= 1e-6
    assert np.abs(laplacian_matrix(K, "up1") @ sol.x_down).max() <= 1e-8


def test_full_l1_pure_down():
    K = two_triangles()
    B1f = laplacian_matrix(K, "down1")
    g = B1f @ np.arange(5.0)
    sol = solve_full_l1_parts(K, g, 1e-10)
    assert sol.up_report.iterations == 0 and not sol.x_up.any()
    assert sol.residual <= 1e-8


def test_iteration_ordering_small():
    """HeCS needs fewer iterations than plain CGLS on a sparse weighted instance."""
    inst = enriched_triangulation(GeneratorParams(40, 2, 0.1, "minrule_folded", seed=3))
    K = inst.complex
    f, _ = consistent_rhs(K, 11)
    _, none = solve_up1(K, f, "none")
    _, hecs = solve_up1(K, f, "hecs")
    assert none.converged and hecs.converged
    assert hecs.iterations < none.iterations
