"""Triangulations of star-shaped domains.

Meshes are built on the base disk from concentric rings (ring ``i`` at radius
``i R / M`` carrying ``4 * ceil(1.5 i)`` equispaced points), connected inside
the first quadrant and reflected into the others, then pushed radially onto
the domain by ``x -> x (1 + eps psi(theta))``. Boundary vertices therefore
lie exactly on the curve and the connectivity is invariant under
``x -> -x`` and ``y -> -y``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidArgumentError, MeshQualityError
from .geometry import StarDomain2D

MIN_ANGLE_DEG = 20.0
# max edge of the undeformed ring mesh, in units of the ring spacing
_RING_EDGE_FACTOR = 1.45


@dataclass
class TriMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    h: float
    curve: Optional[Callable] = field(default=None, repr=False)
    rings: int = 0

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(np.sum(self.triangle_areas()))

    def perimeter(self) -> float:
        p = self.vertices[self.boundary_edges]
        return float(np.sum(np.linalg.norm(p[:, 1] - p[:, 0], axis=1)))

    def edges(self) -> np.ndarray:
        """Unique undirected edges, sorted lexicographically."""
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def max_edge(self) -> float:
        e = self.edges()
        return float(np.max(np.linalg.norm(self.vertices[e[:, 1]] - self.vertices[e[:, 0]], axis=1)))

    def min_angle(self) -> float:
        """Smallest interior angle in degrees."""
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(cos, -1.0, 1.0))))
        return float(np.min(angles))

    def scaled(self, t: float) -> "TriMesh":
        curve = None
        if self.curve is not None:
            c = self.curve
            curve = lambda theta: t * c(theta)
        return TriMesh(
            self.vertices * t, self.triangles.copy(), self.boundary_edges.copy(), self.h * t, curve, self.rings
        )


def reflection_permutation(points: np.ndarray, axis: str, tol: float = 1e-9) -> np.ndarray:
    """Index map ``perm`` with ``points[perm[i]]`` the mirror image of ``points[i]``.

    ``axis='x'`` reflects ``x -> -x``; ``axis='y'`` reflects ``y -> -y``.
    """
    if axis not in ("x", "y"):
        raise InvalidArgumentError(f"axis must be 'x' or 'y', got {axis!r}")
    mirrored = points.copy()
    mirrored[:, 0 if axis == "x" else 1] *= -1.0
    scale = max(1.0, float(np.max(np.abs(points))))
    dist, perm = cKDTree(points).query(mirrored)
    if np.max(dist) > tol * scale:
        raise MeshQualityError(f"point set is not symmetric under the {axis}-reflection")
    return perm


def _ring_sizes(M: int) -> list[int]:
    return [1] + [4 * math.ceil(1.5 * i) for i in range(1, M + 1)]


def _merge_rings(sizes: list[int], pts: np.ndarray, offsets: np.ndarray, full: bool) -> list:
    """Connect consecutive rings, choosing the shorter diagonal at each step.

    Returns ``(ring, index)`` triples covering the closed first quadrant, or
    the whole disk when ``full``.
    """
    coords = pts.tolist()

    def dist2(a, b):
        (x0, y0), (x1, y1) = coords[offsets[a[0]] + a[1] % sizes[a[0]]], coords[offsets[b[0]] + b[1] % sizes[b[0]]]
        return (x0 - x1) ** 2 + (y0 - y1) ** 2

    tris = []
    span = (lambda N: N) if full else (lambda N: N // 4)
    for j in range(span(sizes[1])):
        tris.append(((0, 0), (1, j), (1, j + 1)))
    for i in range(1, len(sizes) - 1):
        p, q = span(sizes[i]), span(sizes[i + 1])
        ia = ib = 0
        while ia < p or ib < q:
            if ia == p:
                advance_outer = True
            elif ib == q:
                advance_outer = False
            else:
                advance_outer = dist2((i, ia), (i + 1, ib + 1)) <= dist2((i, ia + 1), (i + 1, ib))
            if advance_outer:
                tris.append(((i, ia), (i + 1, ib), (i + 1, ib + 1)))
                ib += 1
            else:
                tris.append(((i, ia), (i + 1, ib), (i, ia + 1)))
                ia += 1
    return tris


def _disk_points(sizes: list[int], R: float, M: int):
    """Exact-symmetric ring coordinates plus the first-quadrant angle of each point."""
    pts = [np.zeros((1, 2))]
    rep_angles = [np.zeros(1)]
    true_angles = [np.zeros(1)]
    for i in range(1, M + 1):
        N = sizes[i]
        j = np.arange(N)
        quarter = N // 4
        rep = np.where(j <= quarter, j, np.where(j <= 2 * quarter, 2 * quarter - j,
                       np.where(j <= 3 * quarter, j - 2 * quarter, N - j)))
        th = 2 * np.pi * rep / N
        x = np.cos(th)
        y = np.sin(th)
        x[rep == quarter] = 0.0
        y[rep == 0] = 0.0
        sx = np.where((j > quarter) & (j < 3 * quarter), -1.0, 1.0)
        sy = np.where(j > 2 * quarter, -1.0, 1.0)
        rho = R * i / M
        pts.append(np.column_stack([sx * rho * x, sy * rho * y]))
        rep_angles.append(th)
        true_angles.append(2 * np.pi * j / N)
    return np.vstack(pts), np.concatenate(rep_angles), np.concatenate(true_angles)


def _build(dom: StarDomain2D, M: int) -> TriMesh:
    sizes = _ring_sizes(M)
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    pts, rep_th, true_th = _disk_points(sizes, dom.R, M)
    th = rep_th if dom.symmetric else true_th
    pts = pts * (1.0 + dom.eps * dom.psi(th))[:, None]

    offsets = offsets.tolist()

    def idx(ring, j):
        return offsets[ring] + (j % sizes[ring])

    if dom.symmetric:
        maps = [
            (lambda r, j: j, False),
            (lambda r, j: sizes[r] // 2 - j, True),  # x -> -x
            (lambda r, j: -j, True),  # y -> -y
            (lambda r, j: j + sizes[r] // 2, False),
        ]
    else:
        maps = [(lambda r, j: j, False)]
    tris = []
    for tri in _merge_rings(sizes, pts, offsets, full=not dom.symmetric):
        for f, flip in maps:
            ids = [idx(r, f(r, j)) if r else 0 for r, j in tri]
            tris.append(ids[::-1] if flip else ids)
    tris = np.array(tris, dtype=np.int64)
    p = pts[tris]
    signed = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    tris[signed < 0] = tris[signed < 0][:, ::-1]
    NM = sizes[M]
    jb = np.arange(NM)
    bedges = np.column_stack([offsets[M] + jb, offsets[M] + (jb + 1) % NM])
    mesh = TriMesh(pts, tris, bedges, 0.0, curve=dom.radius, rings=M)
    mesh.h = mesh.max_edge()
    return mesh


def _stretch(dom: StarDomain2D) -> float:
    # largest singular value of the radial push-forward, [[s, s'], [0, s]] in the polar frame
    theta = np.linspace(0, 2 * np.pi, 4096, endpoint=False)
    s = 1.0 + dom.eps * dom.psi(theta)
    ds = np.abs(dom.eps * dom.dpsi(theta))
    return float(np.max(0.5 * (ds + np.sqrt(ds * ds + 4 * s * s))))


def triangulate(dom: StarDomain2D, h_target: float) -> TriMesh:
    """Conforming triangulation with max edge ``<= h_target``.

    Raises
    ------
    MeshQualityError
        If an element is inverted or the minimum angle drops below 20 degrees.
    """
    if not (math.isfinite(h_target) and 0 < h_target < dom.R / 4):
        raise InvalidArgumentError(f"h_target must lie in (0, R/4), got {h_target}")
    M = math.ceil(dom.R * _RING_EDGE_FACTOR * _stretch(dom) / h_target - 1e-9)
    mesh = _build(dom, M)
    while mesh.h > h_target:
        M += max(1, math.ceil(0.05 * M))
        mesh = _build(dom, M)
    return _checked(mesh)


def triangulate_rings(dom: StarDomain2D, rings: int) -> TriMesh:
    """Ring mesh with a prescribed number of rings (``h`` proportional to ``R / rings``)."""
    if int(rings) != rings or rings < 2:
        raise InvalidArgumentError(f"rings must be an integer >= 2, got {rings}")
    return _checked(_build(dom, int(rings)))


def _checked(mesh: TriMesh) -> TriMesh:
    if np.any(mesh.triangle_areas() <= 0):
        raise MeshQualityError("inverted element in triangulation")
    angle = mesh.min_angle()
    if angle < MIN_ANGLE_DEG:
        raise MeshQualityError(f"minimum angle {angle:.2f} deg below {MIN_ANGLE_DEG} deg")
    return mesh


# -- text dump ---------------------------------------------------------------

def dump_mesh(mesh: TriMesh, path) -> None:
    """Write vertex / triangle / boundary-edge sections as plain text."""
    lines = ["# robin_stability mesh", f"h {mesh.h!r}", f"vertices {len(mesh.vertices)}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines.append(f"triangles {len(mesh.triangles)}")
    lines += [" ".join(map(str, t)) for t in mesh.triangles.tolist()]
    lines.append(f"boundary_edges {len(mesh.boundary_edges)}")
    lines += [" ".join(map(str, e)) for e in mesh.boundary_edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> TriMesh:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    it = iter(rows)
    h = float(next(it)[1])
    sections = {}
    for name, conv in (("vertices", float), ("triangles", int), ("boundary_edges", int)):
        head = next(it)
        if head[0] != name:
            raise ValueError(f"expected section {name!r}, got {head[0]!r}")
        count = int(head[1])
        sections[name] = np.array([[conv(v) for v in next(it)] for _ in range(count)])
    return TriMesh(
        sections["vertices"].reshape(-1, 2),
        sections["triangles"].astype(np.int64).reshape(-1, 3),
        sections["boundary_edges"].astype(np.int64).reshape(-1, 2),
        h,
    )
