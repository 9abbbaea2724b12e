"""Structured triangulations of axis-aligned rectangles.

The domain is covered by a uniform grid of squares of side ``1/n`` and every
square is split into two triangles along its bottom-left to top-right
diagonal.  All triangles are oriented counterclockwise and the triangulation
is conforming by construction.  Boundary edges carry one of the four side
markers ``left``, ``right``, ``bottom``, ``top``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_MARKERS = ("bottom", "right", "top", "left")


@dataclass
class Mesh:
    """Conforming triangle mesh of a rectangle.

    Attributes
    ----------
    nodes : (n_vertices, 2) float array
        Vertex coordinates.
    triangles : (n_triangles, 3) int array
        Vertex indices per triangle, counterclockwise.
    edges : (n_edges, 2) int array
        Unique edges as sorted vertex pairs, in lexicographic order.
    triangle_edges : (n_triangles, 3) int array
        Edge index for the local edges (0,1), (1,2), (2,0) of each triangle.
    boundary_edges : dict
        Marker name -> array of edge indices lying on that side.
    bounds : tuple
        ``(x0, x1, y0, y1)`` of the rectangle.
    n : int
        Cells per unit length; the grid spacing is ``1/n``.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    triangle_edges: np.ndarray
    boundary_edges: dict
    bounds: tuple
    n: int
    nx: int = 0
    ny: int = 0
    _boundary_vertex_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    @property
    def n_edges(self):
        return self.edges.shape[0]

    @property
    def h_grid(self):
        """Grid spacing 1/n, the value used to label experiment levels."""
        return 1.0 / self.n

    @property
    def h_diameter(self):
        """True element diameter sqrt(2)/n (the hypotenuse length)."""
        return math.sqrt(2.0) / self.n

    def edge_midpoints(self):
        return 0.5 * (self.nodes[self.edges[:, 0]] + self.nodes[self.edges[:, 1]])

    def boundary_vertices(self, marker):
        """Vertices incident to the boundary edges of one marker.

        Corner vertices belong to both adjacent sides and therefore appear
        in two markers' vertex sets.
        """
        if marker not in self._boundary_vertex_cache:
            edges = self.edges[self.boundary_edges[marker]]
            self._boundary_vertex_cache[marker] = np.unique(edges)
        return self._boundary_vertex_cache[marker]

    def statistics(self):
        """Summary counts and sizes, for logs and sanity checks."""
        x0, x1, y0, y1 = self.bounds
        v0 = self.nodes[self.triangles[:, 0]]
        v1 = self.nodes[self.triangles[:, 1]]
        v2 = self.nodes[self.triangles[:, 2]]
        double_area = (v1[:, 0] - v0[:, 0]) * (v2[:, 1] - v0[:, 1]) - (
            v1[:, 1] - v0[:, 1]
        ) * (v2[:, 0] - v0[:, 0])
        return {
            "n_vertices": self.n_vertices,
            "n_triangles": self.n_triangles,
            "n_edges": self.n_edges,
            "h_grid": self.h_grid,
            "h_diameter": self.h_diameter,
            "bounds": (x0, x1, y0, y1),
            "total_area": 0.5 * float(np.sum(double_area)),
            "min_double_area": float(np.min(double_area)),
        }


def mesh_statistics(mesh):
    return mesh.statistics()


def _side_count(lo, hi, n, axis):
    cells = (hi - lo) * n
    rounded = round(cells)
    if rounded < 1 or abs(cells - rounded) > 1e-9 * max(1.0, abs(cells)):
        raise ValueError(
            f"{axis} extent {hi - lo} times resolution {n} gives a "
            f"non-integral cell count {cells}; choose bounds and n so the "
            "grid fits the rectangle exactly"
        )
    return int(rounded)


def build_structured_mesh(bounds, n):
    """Triangulate ``[x0, x1] x [y0, y1]`` with ``n`` cells per unit length.

    Parameters
    ----------
    bounds : tuple
        ``(x0, x1, y0, y1)`` with ``x1 > x0`` and ``y1 > y0``.
    n : int
        Cells per unit length, so the grid spacing is ``1/n``.

    Returns
    -------
    Mesh

    Raises
    ------
    ValueError
        If an extent times ``n`` is not an integer, or ``n < 1``.
    """
    x0, x1, y0, y1 = (float(b) for b in bounds)
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"empty rectangle from bounds {bounds}")
    n = int(n)
    if n < 1:
        raise ValueError(f"resolution n must be a positive integer, got {n}")
    nx = _side_count(x0, x1, n, "x")
    ny = _side_count(y0, y1, n, "y")

    h = 1.0 / n
    xs = x0 + h * np.arange(nx + 1)
    ys = y0 + h * np.arange(ny + 1)
    xs[-1] = x1
    ys[-1] = y1
    xg, yg = np.meshgrid(xs, ys)
    nodes = np.column_stack([xg.ravel(), yg.ravel()])

    def vid(i, j):
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny))
    ii = ii.ravel()
    jj = jj.ravel()
    v00 = vid(ii, jj)
    v10 = vid(ii + 1, jj)
    v01 = vid(ii, jj + 1)
    v11 = vid(ii + 1, jj + 1)
    # Diagonal runs bottom-left to top-right; both triangles counterclockwise.
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    triangles = np.empty((2 * nx * ny, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    # Unique edges in lexicographic (min, max) order.
    local = np.concatenate(
        [triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0
    )
    local.sort(axis=1)
    n_vertices = nodes.shape[0]
    keys = local[:, 0] * n_vertices + local[:, 1]
    unique_keys = np.unique(keys)
    edges = np.column_stack([unique_keys // n_vertices, unique_keys % n_vertices])
    tri_edge_ids = np.searchsorted(unique_keys, keys)
    n_tri = triangles.shape[0]
    triangle_edges = np.column_stack(
        [tri_edge_ids[:n_tri], tri_edge_ids[n_tri : 2 * n_tri], tri_edge_ids[2 * n_tri :]]
    )

    ex = nodes[edges, 0]
    ey = nodes[edges, 1]
    tol = 1e-12 * max(1.0, abs(x0), abs(x1), abs(y0), abs(y1))
    on = {
        "left": np.all(np.abs(ex - x0) <= tol, axis=1),
        "right": np.all(np.abs(ex - x1) <= tol, axis=1),
        "bottom": np.all(np.abs(ey - y0) <= tol, axis=1),
        "top": np.all(np.abs(ey - y1) <= tol, axis=1),
    }
    boundary_edges = {m: np.flatnonzero(on[m]) for m in BOUNDARY_MARKERS}

    return Mesh(
        nodes=nodes,
        triangles=triangles,
        edges=edges,
        triangle_edges=triangle_edges,
        boundary_edges=boundary_edges,
        bounds=(x0, x1, y0, y1),
        n=n,
        nx=nx,
        ny=ny,
    )
