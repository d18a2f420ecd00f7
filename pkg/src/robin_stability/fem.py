"""Finite elements for ``-Delta u = lambda u`` with ``du/dn + alpha u = 0``.

The discrete pencil is ``A v = lambda M v`` with ``A = K + alpha B``: ``K`` the
stiffness matrix, ``B`` the boundary mass over the mesh boundary edges and
``M`` the volume mass. Order 1 uses closed-form element matrices on the
polygonal mesh. Order 2 is isoparametric by default: boundary edge midpoints
are placed on the true curve and all element integrals use quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, eigsh, splu

from .errors import AssemblyError, ClusterError, InvalidArgumentError, SolverError
from .mesh import TriMesh, reflection_permutation

DENSE_MAX_DOF = 3000
CLUSTER_GAP = 1e-3


@dataclass
class DiscreteOperator:
    A: sp.csr_matrix
    M: sp.csr_matrix
    K: sp.csr_matrix
    B: sp.csr_matrix
    alpha: float
    order: int
    dof_coords: np.ndarray

    @property
    def dof_count(self) -> int:
        return self.A.shape[0]

    def with_alpha(self, alpha: float) -> "DiscreteOperator":
        """Same discretisation, different Robin parameter (no re-assembly)."""
        return DiscreteOperator((self.K + alpha * self.B).tocsr(), self.M, self.K, self.B, float(alpha), self.order, self.dof_coords)


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    mass: Optional[sp.spmatrix] = None
    dof_coords: Optional[np.ndarray] = None


# -- assembly -----------------------------------------------------------------

def _scatter(conn: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    k = conn.shape[1]
    rows = np.repeat(conn, k, axis=1).ravel()
    cols = np.tile(conn, (1, k)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def _p1_parts(mesh: TriMesh):
    n = mesh.n_vertices
    t = mesh.triangles
    p = mesh.vertices[t]
    area = mesh.triangle_areas()
    if np.any(area <= 0):
        raise AssemblyError(f"{int(np.sum(area <= 0))} inverted or degenerate elements")
    # grad(lambda_i) = (y_{i+1} - y_{i+2}, x_{i+2} - x_{i+1}) / (2 area)
    nxt = p[:, [1, 2, 0]]
    prv = p[:, [2, 0, 1]]
    grads = np.stack([nxt[..., 1] - prv[..., 1], prv[..., 0] - nxt[..., 0]], axis=-1) / (2 * area)[:, None, None]
    K_loc = area[:, None, None] * np.einsum("eid,ejd->eij", grads, grads)
    M_loc = area[:, None, None] / 12.0 * (np.ones((3, 3)) + np.eye(3))
    e = mesh.boundary_edges
    L = np.linalg.norm(mesh.vertices[e[:, 1]] - mesh.vertices[e[:, 0]], axis=1)
    B_loc = L[:, None, None] / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
    return _scatter(t, K_loc, n), _scatter(t, M_loc, n), _scatter(e, B_loc, n), mesh.vertices.copy()


@lru_cache(maxsize=None)
def _triangle_rule(npts: int):
    # collapsed Gauss-Legendre product rule on the reference triangle
    x, w = np.polynomial.legendre.leggauss(npts)
    u = 0.5 * (x + 1)
    wu = 0.5 * w
    U, V = np.meshgrid(u, u, indexing="ij")
    W = np.outer(wu, wu) * (1 - U)
    return np.column_stack([U.ravel(), (V * (1 - U)).ravel()]), W.ravel()


def _p2_shape(xi: np.ndarray):
    l1, l2 = xi[:, 0], xi[:, 1]
    l0 = 1 - l1 - l2
    N = np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0], axis=1)
    d0, d1, d2 = np.array([-1.0, -1.0]), np.array([1.0, 0.0]), np.array([0.0, 1.0])
    c = lambda a: a[:, None]
    dN = np.stack(
        [
            c(4 * l0 - 1) * d0,
            c(4 * l1 - 1) * d1,
            c(4 * l2 - 1) * d2,
            4 * (c(l1) * d0 + c(l0) * d1),
            4 * (c(l2) * d1 + c(l1) * d2),
            4 * (c(l0) * d2 + c(l2) * d0),
        ],
        axis=1,
    )
    return N, dN  # (q, 6), (q, 6, 2)


def _p2_parts(mesh: TriMesh, isoparametric: bool, quad_pts: int = 4):
    t = mesh.triangles
    nv = mesh.n_vertices
    local_edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    key = np.sort(local_edges, axis=1)
    edges, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(3, -1).T
    conn = np.hstack([t, nv + inv])
    mids = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    bkey = np.sort(mesh.boundary_edges, axis=1)
    bidx = np.searchsorted(edges.view([("a", edges.dtype), ("b", edges.dtype)]).ravel(),
                           bkey.view([("a", bkey.dtype), ("b", bkey.dtype)]).ravel())
    if isoparametric:
        if mesh.curve is None:
            raise AssemblyError("isoparametric P2 needs the mesh boundary curve")
        pa = mesh.vertices[mesh.boundary_edges[:, 0]]
        pb = mesh.vertices[mesh.boundary_edges[:, 1]]
        ta = np.arctan2(pa[:, 1], pa[:, 0])
        dt = np.angle(np.exp(1j * (np.arctan2(pb[:, 1], pb[:, 0]) - ta)))
        tm = ta + 0.5 * dt
        mids[bidx] = mesh.curve(tm)[:, None] * np.column_stack([np.cos(tm), np.sin(tm)])
    coords = np.vstack([mesh.vertices, mids])
    n = len(coords)

    X = coords[conn]  # (E, 6, 2)
    qp, qw = _triangle_rule(quad_pts)
    N, dN = _p2_shape(qp)
    E = len(t)
    K_loc = np.zeros((E, 6, 6))
    M_loc = np.zeros((E, 6, 6))
    for q in range(len(qw)):
        J = np.einsum("ekd,kb->edb", X, dN[q])  # J[e, a, b] = dx_a / dxi_b
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        if np.any(det <= 0):
            raise AssemblyError("inverted P2 element")
        inv_J = np.stack([np.stack([J[:, 1, 1], -J[:, 0, 1]], -1), np.stack([-J[:, 1, 0], J[:, 0, 0]], -1)], 1) / det[:, None, None]
        G = np.einsum("kb,eba->eka", dN[q], inv_J)
        wdet = qw[q] * det
        K_loc += wdet[:, None, None] * np.einsum("eka,ela->ekl", G, G)
        M_loc += wdet[:, None, None] * np.outer(N[q], N[q])[None]

    bconn = np.column_stack([mesh.boundary_edges[:, 0], nv + bidx, mesh.boundary_edges[:, 1]])
    Xb = coords[bconn]
    gx, gw = np.polynomial.legendre.leggauss(5)
    s = 0.5 * (gx + 1)
    gw = 0.5 * gw
    Nb = np.stack([(1 - s) * (1 - 2 * s), 4 * s * (1 - s), s * (2 * s - 1)], axis=1)
    dNb = np.stack([4 * s - 3, 4 - 8 * s, 4 * s - 1], axis=1)
    tang = np.einsum("ekd,qk->eqd", Xb, dNb)
    jac = np.linalg.norm(tang, axis=2)  # (E_b, q)
    B_loc = np.einsum("eq,q,qk,ql->ekl", jac, gw, Nb, Nb)
    sym = lambda X: 0.5 * (X + X.transpose(0, 2, 1))  # exact symmetry regardless of summation order
    return _scatter(conn, sym(K_loc), n), _scatter(conn, sym(M_loc), n), _scatter(bconn, sym(B_loc), n), coords


def assemble(mesh: TriMesh, alpha: float, order: int = 1, isoparametric: Optional[bool] = None) -> DiscreteOperator:
    """Assemble ``A = K + alpha B`` and ``M`` on ``mesh``.

    ``isoparametric`` only applies to ``order=2``; it defaults to ``True``
    when the mesh carries its boundary curve.
    """
    if not math.isfinite(alpha):
        raise InvalidArgumentError(f"alpha must be finite, got {alpha}")
    if order == 1:
        K, M, B, coords = _p1_parts(mesh)
    elif order == 2:
        if isoparametric is None:
            isoparametric = mesh.curve is not None
        K, M, B, coords = _p2_parts(mesh, isoparametric)
    else:
        raise InvalidArgumentError(f"order must be 1 or 2, got {order}")
    return DiscreteOperator((K + alpha * B).tocsr(), M, K, B, float(alpha), order, coords)


# -- eigen-solve --------------------------------------------------------------

def _factor(S: sp.spmatrix):
    return splu(
        sp.csc_matrix(S),
        permc_spec="MMD_AT_PLUS_A",
        diag_pivot_thresh=0.0,
        options={"SymmetricMode": True},
    )


def _negative_count(lu) -> Optional[int]:
    # Sylvester inertia from a symmetric (diagonal-pivoted) LU; None if pivoting was not symmetric
    if not np.array_equal(lu.perm_r, lu.perm_c):
        return None
    return int(np.sum(lu.U.diagonal() < 0))


def _shift_below_spectrum(op: DiscreteOperator):
    ones = np.ones(op.dof_count)
    q = float(ones @ (op.A @ ones) / (ones @ (op.M @ ones)))  # upper bound for lambda_1
    step = 0.25 * (abs(q) + 1.0)
    sigma = q - step
    for _ in range(60):
        lu = _factor(op.A - sigma * op.M)
        neg = _negative_count(lu)
        if neg == 0:
            return sigma, lu
        if neg is None:
            raise SolverError("shifted factorisation used non-symmetric pivoting; inertia unavailable")
        step *= 2.0
        sigma = q - step
    raise SolverError("could not find a shift below the spectrum")


def _m_orthonormalise(lam: np.ndarray, V: np.ndarray, M) -> np.ndarray:
    V = V.copy()
    start = 0
    scale = max(1.0, float(np.max(np.abs(lam))))
    while start < len(lam):
        stop = start + 1
        while stop < len(lam) and lam[stop] - lam[stop - 1] <= 1e-8 * scale:
            stop += 1
        block = V[:, start:stop]
        G = block.T @ (M @ block)
        L = np.linalg.cholesky(0.5 * (G + G.T))
        V[:, start:stop] = np.linalg.solve(L, block.T).T
        start = stop
    return V


def solve_lowest(op: DiscreteOperator, m: int = 4, tol: float = 1e-8, seed: int = 0) -> SpectrumResult:
    """The ``m`` algebraically smallest eigenpairs of ``A v = lambda M v``.

    Small problems (``dof <= 3000``) use a dense solve. Larger ones use
    shift-invert Lanczos with a shift certified below ``lambda_1`` by the
    inertia of ``A - sigma M``.

    Raises
    ------
    SolverError
        If a residual ``||A v - lambda M v|| / ||M v||`` exceeds ``tol * max(1, |lambda|)``.
    """
    n = op.dof_count
    if not 1 <= m <= n:
        raise InvalidArgumentError(f"need 1 <= m <= dof_count={n}, got m={m}")
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    if n <= DENSE_MAX_DOF:
        lam, V = scipy.linalg.eigh(op.A.toarray(), op.M.toarray(), subset_by_index=[0, m - 1])
    else:
        sigma, lu = _shift_below_spectrum(op)
        OPinv = LinearOperator((n, n), matvec=lu.solve, dtype=float)
        v0 = np.random.default_rng(seed).standard_normal(n)
        try:
            lam, V = eigsh(op.A, k=m, M=op.M, sigma=sigma, which="LM", OPinv=OPinv, v0=v0,
                           tol=tol * 1e-3, ncv=max(2 * m + 1, 20), maxiter=5000)
        except Exception as exc:  # ArpackNoConvergence and friends
            raise SolverError(f"shift-invert Lanczos failed: {exc}") from exc
    order = np.argsort(lam)
    lam = np.asarray(lam)[order]
    V = _m_orthonormalise(lam, np.asarray(V)[:, order], op.M)
    # fix the sign of each vector for reproducible output
    pivots = np.argmax(np.abs(V), axis=0)
    V *= np.sign(V[pivots, np.arange(V.shape[1])])
    MV = op.M @ V
    res = np.linalg.norm(op.A @ V - MV * lam, axis=0) / np.linalg.norm(MV, axis=0)
    bad = res > tol * np.maximum(1.0, np.abs(lam))
    if np.any(bad):
        raise SolverError(f"residuals {res[bad]} exceed tol={tol}", best_residual=float(np.min(res)))
    return SpectrumResult(lam, V, res, op.M, op.dof_coords)


# -- symmetry -----------------------------------------------------------------

def second_cluster(eigenvalues: Sequence[float], gap: float = CLUSTER_GAP) -> list[int]:
    """Indices of the eigenvalues clustered with ``lambda_2``.

    Raises
    ------
    ClusterError
        If the cluster is not separated from ``lambda_1`` or runs into the
        last computed eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    if len(lam) < 3:
        raise ClusterError("need at least three eigenvalues to isolate the lambda_2 cluster")
    scale = max(abs(lam[1]), lam[1] - lam[0])
    if (lam[1] - lam[0]) <= gap * scale:
        raise ClusterError("lambda_2 is not separated from lambda_1")
    idx = [1]
    while idx[-1] + 1 < len(lam) and lam[idx[-1] + 1] - lam[1] <= gap * scale:
        idx.append(idx[-1] + 1)
    if idx[-1] == len(lam) - 1:
        raise ClusterError("lambda_2 cluster reaches the last computed eigenvalue; request more pairs")
    return idx


def antisymmetry_defect(
    res: SpectrumResult, mesh: TriMesh, axis: str, cluster: Optional[Sequence[int]] = None, gap: float = CLUSTER_GAP
) -> float:
    """``min ||v + v o reflection||_M / ||v||_M`` over the discrete ``lambda_2`` eigenspace.

    0 means the eigenspace holds a function odd under the reflection
    (``axis='x'``: ``x -> -x``); an even function gives 2.
    """
    coords = res.dof_coords if res.dof_coords is not None else mesh.vertices
    if res.mass is None:
        raise InvalidArgumentError("spectrum result carries no mass matrix")
    perm = reflection_permutation(coords, axis)
    idx = list(cluster) if cluster is not None else second_cluster(res.eigenvalues, gap)
    V = res.eigenvectors[:, idx]
    W = V + V[perm]
    G = W.T @ (res.mass @ W)
    H = V.T @ (res.mass @ V)
    mu = scipy.linalg.eigh(0.5 * (G + G.T), 0.5 * (H + H.T), eigvals_only=True)
    return float(math.sqrt(max(mu[0], 0.0)))
