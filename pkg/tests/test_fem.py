import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from robin_stability import fem
from robin_stability.ball_spectrum import BallSpec, lambda1_ball, lambda2_ball
from robin_stability.errors import AssemblyError, ClusterError, InvalidArgumentError, SolverError
from robin_stability.fem import (
    SpectrumResult,
    antisymmetry_defect,
    assemble,
    second_cluster,
    solve_lowest,
)
from robin_stability.geometry import disk, make_star_domain, volume
from robin_stability.mesh import TriMesh, reflection_permutation, triangulate, triangulate_rings

DISK = disk(1.0)
COS4 = make_star_domain(1, 0.05, {4: 1}, symmetric=True)
ODD = make_star_domain(1, 0.1, {5: 1.0, 7: 0.3})


@pytest.fixture(scope="module")
def small_meshes():
    return {name: triangulate_rings(d, 12) for name, d in [("disk", DISK), ("cos4", COS4), ("odd", ODD)]}


@pytest.mark.parametrize("name", ["disk", "cos4", "odd"])
@pytest.mark.parametrize("order", [1, 2])
def test_constant_vector_quadratic_forms(small_meshes, name, order):
    mesh = small_meshes[name]
    op = assemble(mesh, -0.7, order, isoparametric=False)
    u = np.ones(op.dof_count)
    assert u @ op.A @ u == pytest.approx(-0.7 * mesh.perimeter(), rel=1e-12)
    assert u @ op.M @ u == pytest.approx(mesh.area(), rel=1e-12)


def test_isoparametric_constant_vector_sees_curved_boundary():
    dom = make_star_domain(1, 0.1, {4: 1}, symmetric=True)
    mesh = triangulate_rings(dom, 24)
    op = assemble(mesh, -1.0, 2)
    u = np.ones(op.dof_count)
    theta = np.linspace(0, 2 * np.pi, 20001)
    r, dr = dom.radius(theta), dom.R * dom.eps * dom.dpsi(theta)
    length = np.trapezoid(np.sqrt(r * r + dr * dr), theta)
    assert abs(u @ op.M @ u - volume(dom)) <= 1e-6
    assert abs(-(u @ op.A @ u) - length) <= 1e-6
    assert abs(mesh.area() - volume(dom)) > 1e-4  # the polygon itself is much cruder


@pytest.mark.parametrize("order", [1, 2])
def test_matrix_structure(small_meshes, order):
    op = assemble(small_meshes["odd"], -0.5, order)
    for mat in (op.A, op.M, op.K, op.B):
        assert abs(mat - mat.T).max() == 0.0
    np.linalg.cholesky(op.M.toarray())  # SPD
    assert op.dof_count == op.A.shape[0] == len(op.dof_coords)


@pytest.mark.parametrize("order", [1, 2])
def test_neumann_kernel(small_meshes, order):
    op = assemble(small_meshes["cos4"], 0.0, order)
    w = scipy.linalg.eigh(op.A.toarray(), op.M.toarray(), eigvals_only=True)
    assert abs(w[0]) <= 1e-9
    assert w[1] > 1.0  # one-dimensional kernel
    assert np.all(np.linalg.eigvalsh(op.A.toarray()) >= -1e-10)


def test_with_alpha_matches_reassembly(small_meshes):
    mesh = small_meshes["odd"]
    a = assemble(mesh, 0.0, 1).with_alpha(-0.3)
    b = assemble(mesh, -0.3, 1)
    assert abs(a.A - b.A).max() <= 1e-15


def test_disk_spectrum_structure():
    mesh = triangulate(DISK, 0.04)
    res = solve_lowest(assemble(mesh, -0.5, 1), 4)
    lam = res.eigenvalues
    assert lam[0] < 0 < lam[1] <= lam[2]
    ball = BallSpec(2, 1.0)
    err2 = abs(lam[1] - lambda2_ball(ball, -0.5)) / lambda2_ball(ball, -0.5)
    assert err2 <= 1e-3
    assert (lam[2] - lam[1]) / lam[1] <= err2  # multiplicity two, up to mesh error
    assert lam[0] == pytest.approx(lambda1_ball(ball, -0.5), rel=1e-3)


@pytest.mark.parametrize("dense", [True, False])
def test_solver_contract(monkeypatch, dense):
    if not dense:
        monkeypatch.setattr(fem, "DENSE_MAX_DOF", 10)
    mesh = triangulate_rings(ODD, 20)
    op = assemble(mesh, -0.6, 1)
    tol = 1e-9
    res = solve_lowest(op, 5, tol)
    assert np.all(np.diff(res.eigenvalues) >= 0)
    assert np.all(res.residuals <= tol * np.maximum(1, np.abs(res.eigenvalues)))
    V = res.eigenvectors
    assert np.max(np.abs(V.T @ (op.M @ V) - np.eye(5))) <= 1e-8
    ref = scipy.linalg.eigh(op.A.toarray(), op.M.toarray(), eigvals_only=True, subset_by_index=[0, 4])
    assert np.allclose(res.eigenvalues, ref, rtol=1e-9, atol=1e-10)


def test_sparse_path_large_mesh_and_determinism():
    op = assemble(triangulate(COS4, 0.03), -0.4, 1)
    assert op.dof_count > fem.DENSE_MAX_DOF
    a, b = solve_lowest(op, 6), solve_lowest(op, 6)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_scaling_relation_fem():
    for order in (1, 2):
        mesh = triangulate_rings(ODD, 16)
        lam = solve_lowest(assemble(mesh, -0.5, order), 4).eigenvalues
        lam2 = solve_lowest(assemble(mesh.scaled(2.0), -0.25, order), 4).eigenvalues
        assert np.allclose(lam2, lam / 4, rtol=1e-6, atol=0)


def _disk_errors(order, rings):
    exact = lambda2_ball(BallSpec(2, 1.0), -0.5)
    vals = [solve_lowest(assemble(triangulate_rings(DISK, M), -0.5, order), 4).eigenvalues[1] for M in rings]
    return np.array(vals), np.abs(np.array(vals) - exact)


def test_p1_convergence_and_monotone():
    vals, errs = _disk_errors(1, [10, 20, 40, 80])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all((orders >= 1.7) & (orders <= 2.3))
    assert np.all(np.diff(vals) <= 1e-10)  # decreasing under refinement


def test_p2_convergence():
    _, errs = _disk_errors(2, [5, 10, 20, 40])
    orders = np.log2(errs[:-1] / errs[1:])
    assert np.all((orders >= 3.4) & (orders <= 4.6))


def test_bad_inputs(small_meshes):
    mesh = small_meshes["disk"]
    with pytest.raises(InvalidArgumentError):
        assemble(mesh, -0.5, 3)
    with pytest.raises(InvalidArgumentError):
        assemble(mesh, math.nan, 1)
    op = assemble(mesh, -0.5, 1)
    with pytest.raises(InvalidArgumentError):
        solve_lowest(op, op.dof_count + 1)
    with pytest.raises(InvalidArgumentError):
        solve_lowest(op, 3, tol=0.0)


def test_inverted_element_rejected(small_meshes):
    m = small_meshes["disk"]
    tris = m.triangles.copy()
    tris[0] = tris[0][::-1]
    bad = TriMesh(m.vertices, tris, m.boundary_edges, m.h, m.curve, m.rings)
    for order in (1, 2):
        with pytest.raises(AssemblyError):
            assemble(bad, -0.5, order)


def test_p2_isoparametric_needs_curve(small_meshes):
    m = small_meshes["disk"]
    bare = TriMesh(m.vertices, m.triangles, m.boundary_edges, m.h)
    with pytest.raises(AssemblyError):
        assemble(bare, -0.5, 2, isoparametric=True)
    assemble(bare, -0.5, 2)  # falls back to straight elements


def test_solver_error_reports_best_residual(monkeypatch):
    monkeypatch.setattr(fem, "DENSE_MAX_DOF", 10)
    op = assemble(triangulate_rings(DISK, 10), -0.5, 1)
    with pytest.raises(SolverError) as info:
        solve_lowest(op, 4, tol=1e-25)
    assert info.value.best_residual is not None and info.value.best_residual > 0


# -- antisymmetry ------------------------------------------------------------

def test_disk_antisymmetry():
    mesh = triangulate(DISK, 0.05)
    res = solve_lowest(assemble(mesh, -0.5, 1), 6)
    assert antisymmetry_defect(res, mesh, "x") <= 1e-6
    assert antisymmetry_defect(res, mesh, "y") <= 1e-6


@pytest.mark.parametrize("order", [1, 2])
def test_cos4_antisymmetry(order):
    mesh = triangulate(make_star_domain(1, 0.05, {4: 1}, symmetric=True), 0.05)
    res = solve_lowest(assemble(mesh, -0.5, order), 6)
    assert min(antisymmetry_defect(res, mesh, ax) for ax in "xy") <= 1e-4


def test_symmetrized_vector_has_defect_two():
    mesh = triangulate(COS4, 0.08)
    res = solve_lowest(assemble(mesh, -0.5, 1), 6)
    perm = reflection_permutation(mesh.vertices, "x")
    V = res.eigenvectors.copy()
    v = V[:, 1]
    V[:, 1] = 0.5 * (v + v[perm])
    fake = SpectrumResult(res.eigenvalues, V, res.residuals, res.mass, res.dof_coords)
    assert antisymmetry_defect(fake, mesh, "x", cluster=[1]) == pytest.approx(2.0, abs=1e-12)


def test_cluster_detection():
    assert second_cluster([-1.0, 2.0, 2.0005, 5.0]) == [1, 2]
    assert second_cluster([-1.0, 2.0, 3.0, 5.0]) == [1]
    with pytest.raises(ClusterError):
        second_cluster([-1.0, 2.0, 2.0001])  # runs into the last computed value
    with pytest.raises(ClusterError):
        second_cluster([1.0, 1.0000001, 3.0])  # not separated from lambda_1
    with pytest.raises(ClusterError):
        second_cluster([1.0, 2.0])


def test_defect_needs_enough_pairs():
    mesh = triangulate(DISK, 0.1)
    res = solve_lowest(assemble(mesh, -0.5, 1), 3)
    with pytest.raises(ClusterError):
        antisymmetry_defect(res, mesh, "x")
