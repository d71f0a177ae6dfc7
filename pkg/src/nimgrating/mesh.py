"""Mapped structured triangulation of one period cell.

A uniform grid on ``D- = (-1,1) x (-1,0)`` and ``D+ = (-1,1) x (0,1)`` is
pushed through the inverse flattening maps. Grid row ``j = ny2`` lies
exactly on the profile, so Omega_1 and Omega_2 share their interface nodes.
Nodes on ``x1 = 0`` and ``x1 = period`` are kept separately and paired.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .exceptions import MeshError
from .problem import GratingProfile, ProblemConfig, Region

MIN_ANGLE_DEG = 1.0

BOUNDARY_TAGS = ("gamma", "gamma0", "interface", "side_left", "side_right")


@dataclasses.dataclass(frozen=True, eq=False)
class Mesh:
    """Triangulation with region tags and tagged boundary edges.

    Node ``(i, j)`` of the structured grid has index ``j * (nx + 1) + i``;
    rows ``0..ny2`` span Omega_2 from Gamma up to S, rows ``ny2..ny2+ny1``
    span Omega_1 from S up to Gamma_0.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    regions: np.ndarray
    boundary_edges: dict
    periodic_pairs: np.ndarray
    resolution: tuple[int, int, int]
    profile: GratingProfile
    h1: float

    @property
    def nx(self) -> int:
        return self.resolution[0]

    @property
    def period(self) -> float:
        return self.profile.period

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def node_index(self, i, j):
        return np.asarray(j) * (self.nx + 1) + np.asarray(i)

    def row(self, j) -> np.ndarray:
        """Node indices of grid row ``j`` ordered by ``x1``."""
        return self.node_index(np.arange(self.nx + 1), j)

    @property
    def gamma0_nodes(self) -> np.ndarray:
        nx, ny1, ny2 = self.resolution
        return self.row(ny1 + ny2)

    @property
    def interface_nodes(self) -> np.ndarray:
        return self.row(self.resolution[2])

    @property
    def gamma_nodes(self) -> np.ndarray:
        return self.row(0)

    def region_nodes(self, region: Region) -> np.ndarray:
        """All nodes touched by triangles of ``region`` (interface included)."""
        return np.unique(self.triangles[self.regions == int(region)])

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def angles(self) -> np.ndarray:
        """Interior angles in degrees, shape ``(n_triangles, 3)``."""
        p = self.nodes[self.triangles]
        out = np.empty(p.shape[:2])
        for k in range(3):
            a = p[:, (k + 1) % 3] - p[:, k]
            b = p[:, (k + 2) % 3] - p[:, k]
            cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
            out[:, k] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
        return out

    @property
    def min_angle(self) -> float:
        return float(self.angles().min())


def _reference_rows(ny1: int, ny2: int) -> np.ndarray:
    lower = -1.0 + np.arange(ny2 + 1) / ny2
    upper = np.arange(1, ny1 + 1) / ny1
    return np.concatenate([lower, upper])


def build_mesh_geometry(profile: GratingProfile, h1: float, nx: int, ny1: int, ny2: int) -> Mesh:
    if nx < 2 or ny1 < 1 or ny2 < 1:
        raise MeshError(f"resolution too small: nx={nx}, ny1={ny1}, ny2={ny2}")
    fmin, fmax = profile.minimum(), profile.maximum()
    if fmin <= 0:
        raise MeshError(f"degenerate geometry: min f = {fmin:.6g} <= 0")
    if h1 <= fmax:
        raise MeshError(f"degenerate geometry: h1 = {h1:.6g} <= max f = {fmax:.6g}")

    lam = profile.period
    x1 = lam * np.arange(nx + 1) / nx
    # exact endpoint keeps the periodic pair offset equal to the period
    x1[-1] = lam
    f = profile(x1)
    f[-1] = f[0]
    xt2 = _reference_rows(ny1, ny2)
    nrow = ny1 + ny2 + 1
    X1 = np.broadcast_to(x1, (nrow, nx + 1))
    X2 = np.empty((nrow, nx + 1))
    lower = xt2 <= 0
    X2[lower] = np.outer(1.0 + xt2[lower], f)
    X2[~lower] = f + np.outer(xt2[~lower], h1 - f)
    X2[ny2] = f
    nodes = np.stack([X1.ravel(), X2.ravel()], axis=1)

    def idx(i, j):
        return j * (nx + 1) + i

    ii, jj = np.meshgrid(np.arange(nx), np.arange(ny1 + ny2), indexing="xy")
    ii, jj = ii.ravel(), jj.ravel()
    a, b = idx(ii, jj), idx(ii + 1, jj)
    c, d = idx(ii + 1, jj + 1), idx(ii, jj + 1)
    tris = np.empty((2 * len(a), 3), dtype=np.int64)
    tris[0::2] = np.stack([a, b, c], axis=1)
    tris[1::2] = np.stack([a, c, d], axis=1)
    cell_region = np.where(jj < ny2, int(Region.OMEGA2), int(Region.OMEGA1))
    regions = np.repeat(cell_region, 2)

    def row_edges(j):
        i = np.arange(nx)
        return np.stack([idx(i, j), idx(i + 1, j)], axis=1)

    def col_edges(i):
        j = np.arange(ny1 + ny2)
        return np.stack([idx(i, j), idx(i, j + 1)], axis=1)

    boundary = {
        "gamma": row_edges(0),
        "gamma0": row_edges(ny1 + ny2),
        "interface": row_edges(ny2),
        "side_left": col_edges(0),
        "side_right": col_edges(nx),
    }
    rows = np.arange(nrow)
    pairs = np.stack([idx(0, rows), idx(nx, rows)], axis=1)
    mesh = Mesh(nodes, tris, regions, boundary, pairs, (nx, ny1, ny2), profile, float(h1))
    if np.any(mesh.signed_areas() <= 0):
        raise MeshError("mesh contains inverted or degenerate triangles")
    return mesh


def default_resolution(config: ProblemConfig, nx: int = 32) -> tuple[int, int, int]:
    """Roughly isotropic cells: rows per region follow the mean layer thickness."""
    p = config.profile
    h = p.period / nx
    ny2 = max(2, math.ceil(p.mean / h))
    ny1 = max(2, math.ceil((config.h1 - p.mean) / h))
    return nx, ny1, ny2


def build_mesh(config: ProblemConfig, nx: int, ny1: int, ny2: int) -> Mesh:
    return build_mesh_geometry(config.profile, config.h1, nx, ny1, ny2)


def refine(mesh: Mesh) -> Mesh:
    """Uniform refinement: every structured cell is split in two per direction.

    New nodes are generated through the exact profile, so interface nodes
    stay on S.
    """
    nx, ny1, ny2 = mesh.resolution
    return build_mesh_geometry(mesh.profile, mesh.h1, 2 * nx, 2 * ny1, 2 * ny2)


def check_quality(mesh: Mesh, min_angle: float = MIN_ANGLE_DEG) -> None:
    angle = mesh.min_angle
    if angle < min_angle:
        raise MeshError(f"minimum triangle angle {angle:.3g} deg below {min_angle} deg")


def export_csv(mesh: Mesh, nodes_path, triangles_path) -> None:
    with open(Path(nodes_path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["node", "x1", "x2"])
        for k, (x, y) in enumerate(mesh.nodes):
            w.writerow([k, repr(float(x)), repr(float(y))])
    with open(Path(triangles_path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["triangle", "n0", "n1", "n2", "region"])
        for k, (t, r) in enumerate(zip(mesh.triangles, mesh.regions)):
            w.writerow([k, int(t[0]), int(t[1]), int(t[2]), int(r)])
