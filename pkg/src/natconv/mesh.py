"""Structured triangulations of the unit square.

Every mesh in this project is a uniform n-by-n grid of squares, each cut
along its bottom-left to top-right diagonal.  Vertices are numbered
lexicographically in (i, j) with i fastest, so vertex (i, j) has index
j*(n+1) + i and coordinates (i/n, j/n).  The two triangles of cell (i, j)
are listed lower half first, both counter-clockwise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class SideTag(enum.Enum):
    LEFT = "left"
    RIGHT = "right"
    BOTTOM = "bottom"
    TOP = "top"


@dataclass(frozen=True, eq=False)
class Mesh:
    n: int
    vertices: np.ndarray  # (V, 2) float64
    triangles: np.ndarray  # (T, 3) int64, counter-clockwise
    _edge_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def edges(self) -> np.ndarray:
        """Unique mesh edges as (E, 2) sorted vertex pairs, lexicographic order."""
        self._build_edges()
        return self._edge_cache["edges"]

    @property
    def triangle_edges(self) -> np.ndarray:
        """(T, 3) edge index per triangle; local edge k is opposite local vertex k."""
        self._build_edges()
        return self._edge_cache["tri_edges"]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def _build_edges(self) -> None:
        if "edges" in self._edge_cache:
            return
        t = self.triangles
        # local edge k joins vertices (k+1) % 3 and (k+2) % 3
        raw = np.concatenate(
            [t[:, [1, 2]], t[:, [2, 0]], t[:, [0, 1]]], axis=0
        )
        raw = np.sort(raw, axis=1)
        edges, inverse = np.unique(raw, axis=0, return_inverse=True)
        self._edge_cache["edges"] = edges
        self._edge_cache["tri_edges"] = inverse.reshape(3, -1).T.copy()

    def triangle_coords(self) -> np.ndarray:
        """(T, 3, 2) vertex coordinates per triangle."""
        return self.vertices[self.triangles]

    def signed_areas(self) -> np.ndarray:
        xy = self.triangle_coords()
        d1 = xy[:, 1] - xy[:, 0]
        d2 = xy[:, 2] - xy[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_edges(self) -> np.ndarray:
        """(B, 2) vertex pairs of edges lying on exactly one triangle."""
        self._build_edges()
        counts = np.bincount(
            self.triangle_edges.ravel(), minlength=self.num_edges
        )
        return self.edges[counts == 1]

    def side_vertices(self, side: SideTag) -> np.ndarray:
        """Sorted vertex indices on one side; corners belong to two sides."""
        x, y = self.vertices[:, 0], self.vertices[:, 1]
        tol = 0.5 * self.h
        mask = {
            SideTag.LEFT: x < tol,
            SideTag.RIGHT: x > 1.0 - tol,
            SideTag.BOTTOM: y < tol,
            SideTag.TOP: y > 1.0 - tol,
        }[side]
        return np.nonzero(mask)[0]

    def side_edges(self, side: SideTag) -> np.ndarray:
        """Edge indices (into self.edges) of boundary edges on one side."""
        self._build_edges()
        tags = classify_boundary(self)
        counts = np.bincount(
            self.triangle_edges.ravel(), minlength=self.num_edges
        )
        bidx = np.nonzero(counts == 1)[0]
        return bidx[np.array([t is side for t in tags])]


def build_uniform_square_mesh(n: int) -> Mesh:
    """Triangulate [0,1]^2 into 2*n^2 triangles with mesh size h = 1/n."""
    if n < 1:
        raise ValueError(f"subdivision count must be positive, got {n}")
    k = n + 1
    ii, jj = np.meshgrid(np.arange(k), np.arange(k), indexing="xy")
    # lexicographic in (i, j), i fastest
    verts = np.column_stack([ii.ravel() / n, jj.ravel() / n]).astype(np.float64)

    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="xy")
    i, j = i.ravel(), j.ravel()
    v00 = j * k + i
    v10 = j * k + i + 1
    v01 = (j + 1) * k + i
    v11 = (j + 1) * k + i + 1
    lower = np.column_stack([v00, v10, v11])
    upper = np.column_stack([v00, v11, v01])
    tris = np.empty((2 * n * n, 3), dtype=np.int64)
    tris[0::2] = lower
    tris[1::2] = upper
    return Mesh(n=n, vertices=verts, triangles=tris)


def classify_boundary(mesh: Mesh) -> list[SideTag]:
    """Side tag of each boundary edge, in boundary_edges() order."""
    tags = []
    for a, b in mesh.boundary_edges():
        mx, my = 0.5 * (mesh.vertices[a] + mesh.vertices[b])
        tol = 0.25 * mesh.h
        if mx < tol:
            tags.append(SideTag.LEFT)
        elif mx > 1.0 - tol:
            tags.append(SideTag.RIGHT)
        elif my < tol:
            tags.append(SideTag.BOTTOM)
        elif my > 1.0 - tol:
            tags.append(SideTag.TOP)
        else:
            raise ValueError(f"edge ({a},{b}) is not on the outer boundary")
    return tags
