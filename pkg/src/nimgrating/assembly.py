"""Galerkin discretization of the DtN-truncated transmission problem.

The sesquilinear form, with test functions conjugated, is

    a(u, v) = <eps_sigma^-1 grad u, grad v>_Omega - <omega^2 mu u, v>_Omega
              - <i sigma u, v>_Omega2 - <eps1^-1 T u, v>_Gamma0

and the right-hand side is ``<eps1^-1 g, v>_Gamma0``. Unknowns live on the
nodes with ``x1 < period``; a node on ``x1 = period`` carries
``exp(i alpha period)`` times the value of its partner on ``x1 = 0``.
"""

from __future__ import annotations

import dataclasses
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .dtn import ModeSet, fourier_matrix, incident_datum
from .exceptions import TruncationMismatch
from .mesh import Mesh, check_quality
from .problem import DerivedScalars, ProblemConfig, Region, derive_scalars, permittivity_at


def max_truncation(nx: int) -> int:
    """Largest mode truncation the Gamma_0 grid of ``nx`` cells supports.

    ``4N + 4 <= nx`` keeps the Rayleigh coefficient sampling requirement
    satisfied, which also rules out aliasing (``2N + 1 <= nx - 1``).
    """
    return max(0, (nx - 4) // 4)


def p1_element_data(nodes: np.ndarray, triangles: np.ndarray):
    """Areas and barycentric gradients, shapes ``(T,)`` and ``(T, 3, 2)``."""
    p = nodes[triangles]
    x, y = p[..., 0], p[..., 1]
    # gradient of lambda_k = (y_{k+1} - y_{k+2}, x_{k+2} - x_{k+1}) / (2 area)
    b = np.stack([y[:, [1, 2, 0]] - y[:, [2, 0, 1]], x[:, [2, 0, 1]] - x[:, [1, 2, 0]]], axis=-1)
    area2 = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    return 0.5 * area2, b / area2[:, None, None]


def element_stiffness(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Exact P1 stiffness matrices ``area * G G^T`` for unit coefficient."""
    area, grad = p1_element_data(nodes, triangles)
    return area[:, None, None] * np.einsum("tik,tjk->tij", grad, grad)


_MASS_REF = (np.ones((3, 3)) + np.eye(3)) / 12.0


def element_mass(nodes: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Consistent (exactly integrated) P1 mass matrices."""
    area, _ = p1_element_data(nodes, triangles)
    return area[:, None, None] * _MASS_REF


def _scatter(triangles, local, n, mask=None):
    if mask is not None:
        triangles, local = triangles[mask], local[mask]
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


@dataclasses.dataclass(frozen=True)
class RegionMatrices:
    """Unit-coefficient node-level stiffness and mass per region."""

    stiffness1: sp.csr_matrix
    stiffness2: sp.csr_matrix
    mass1: sp.csr_matrix
    mass2: sp.csr_matrix

    @property
    def stiffness(self):
        return self.stiffness1 + self.stiffness2

    @property
    def mass(self):
        return self.mass1 + self.mass2


def region_matrices(mesh: Mesh) -> RegionMatrices:
    k = element_stiffness(mesh.nodes, mesh.triangles)
    m = element_mass(mesh.nodes, mesh.triangles)
    n = mesh.n_nodes
    in1 = mesh.regions == int(Region.OMEGA1)
    return RegionMatrices(
        _scatter(mesh.triangles, k, n, in1),
        _scatter(mesh.triangles, k, n, ~in1),
        _scatter(mesh.triangles, m, n, in1),
        _scatter(mesh.triangles, m, n, ~in1),
    )


@dataclasses.dataclass(frozen=True)
class DofMap:
    """Node-to-unknown map with quasi-periodic phases.

    ``value[node] = phase[node] * u[dof[node]]``.
    """

    dof: np.ndarray
    phase: np.ndarray
    n_dofs: int

    @property
    def prolongation(self) -> sp.csr_matrix:
        n = len(self.dof)
        return sp.csr_matrix((self.phase, (np.arange(n), self.dof)), shape=(n, self.n_dofs))

    def expand(self, u: np.ndarray) -> np.ndarray:
        return self.phase * np.asarray(u)[self.dof]


def build_dof_map(mesh: Mesh, alpha: float) -> DofMap:
    n = mesh.n_nodes
    is_right = np.zeros(n, dtype=bool)
    is_right[mesh.periodic_pairs[:, 1]] = True
    free = np.flatnonzero(~is_right)
    dof = np.empty(n, dtype=np.int64)
    dof[free] = np.arange(len(free))
    left, right = mesh.periodic_pairs[:, 0], mesh.periodic_pairs[:, 1]
    dof[right] = dof[left]
    phase = np.ones(n, dtype=complex)
    phase[right] = np.exp(1j * alpha * mesh.period)
    return DofMap(dof, phase, len(free))


@dataclasses.dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Folded linear system ``(sparse_part + DtN) u = rhs``.

    Attributes:
        node_matrix: unfolded volume operator on all mesh nodes; complex
            symmetric because coefficients are never conjugated.
        sparse_part: ``P^H node_matrix P`` with ``P`` the quasi-periodic
            prolongation.
        dtn_block: dense ``-eps1^-1 <T u, v>`` coupling among the Gamma_0
            unknowns listed in ``gamma0_dofs``.
    """

    config: ProblemConfig
    scalars: DerivedScalars
    mesh: Mesh
    modes: ModeSet
    dof_map: DofMap
    regions: RegionMatrices
    node_matrix: sp.csr_matrix
    sparse_part: sp.csr_matrix
    dtn_block: np.ndarray
    gamma0_dofs: np.ndarray
    trace_to_modes: np.ndarray
    rhs: np.ndarray

    @property
    def dimension(self) -> int:
        return self.dof_map.n_dofs

    def matrix(self) -> sp.csc_matrix:
        """Full system matrix with the DtN block embedded, CSC for factorization."""
        g = self.gamma0_dofs
        rows = np.repeat(g, len(g))
        cols = np.tile(g, len(g))
        dense = sp.coo_matrix(
            (self.dtn_block.ravel(), (rows, cols)), shape=(self.dimension,) * 2
        )
        return (self.sparse_part + dense).tocsc()


def _check_consistency(config: ProblemConfig, mesh: Mesh, modes: ModeSet):
    if abs(mesh.period - config.period) > 1e-12 * config.period or mesh.profile != config.profile:
        raise TruncationMismatch("mesh geometry does not match the configuration")
    if abs(mesh.h1 - config.h1) > 1e-12 * config.h1:
        raise TruncationMismatch("mesh height does not match h1")
    if abs(modes.period - config.period) > 1e-12 * config.period:
        raise TruncationMismatch("mode set period does not match the configuration")
    if modes.truncation > max_truncation(mesh.nx):
        raise TruncationMismatch(
            f"truncation N={modes.truncation} exceeds {max_truncation(mesh.nx)} "
            f"supported by nx={mesh.nx}"
        )


def assemble(config: ProblemConfig, mesh: Mesh, modes: ModeSet) -> AssembledSystem:
    """Assemble the folded Galerkin system for the configuration."""
    scalars = derive_scalars(config)
    _check_consistency(config, mesh, modes)
    check_quality(mesh)

    mats = region_matrices(mesh)
    eps1 = config.eps1
    eps_s = permittivity_at(config, Region.OMEGA2)
    w2 = config.omega**2
    node_matrix = (
        mats.stiffness1 / eps1
        + mats.stiffness2 / eps_s
        - w2 * config.mu1 * mats.mass1
        - (w2 * config.mu2 + 1j * config.sigma) * mats.mass2
    ).tocsr()

    dmap = build_dof_map(mesh, scalars.alpha)
    P = dmap.prolongation
    sparse_part = (P.conj().T @ node_matrix @ P).tocsr()
    sparse_part.sum_duplicates()
    sparse_part.sort_indices()

    nx = mesh.nx
    g_nodes = mesh.gamma0_nodes
    gamma0_dofs = dmap.dof[g_nodes[:nx]]
    B = fourier_matrix(modes, nx)
    dtn_block = -(modes.period / eps1) * (B.conj().T @ (1j * modes.beta_n[:, None] * B))

    # per-edge trapezoidal rule for <eps1^-1 g, v>, folded with P^H
    x = mesh.nodes[g_nodes, 0]
    g = incident_datum(scalars, config.h1, x)
    h = np.diff(x)
    f_node = np.zeros(mesh.n_nodes, dtype=complex)
    np.add.at(f_node, g_nodes[:-1], 0.5 * h * g[:-1])
    np.add.at(f_node, g_nodes[1:], 0.5 * h * g[1:])
    rhs = P.conj().T @ (f_node / eps1)

    return AssembledSystem(
        config=config, scalars=scalars, mesh=mesh, modes=modes, dof_map=dmap,
        regions=mats, node_matrix=node_matrix, sparse_part=sparse_part,
        dtn_block=dtn_block, gamma0_dofs=gamma0_dofs, trace_to_modes=B, rhs=rhs,
    )


def apply_operator(system: AssembledSystem, vector) -> np.ndarray:
    """Matrix-free action of the full operator (volume part plus DtN block)."""
    v = np.asarray(vector)
    if v.shape != (system.dimension,):
        raise ValueError(f"expected vector of length {system.dimension}, got shape {v.shape}")
    out = system.sparse_part @ v.astype(complex)
    g = system.gamma0_dofs
    out[g] += system.dtn_block @ v[g]
    return out


def form_terms(system: AssembledSystem, u: np.ndarray, v: np.ndarray | None = None) -> dict:
    """Individual contributions to ``a(u, v)`` (``v = u`` by default).

    Keys: ``grad1``, ``grad2`` (unit-coefficient gradient pairings per
    region), ``mass1``, ``mass2``, ``dtn`` (``<T u, v>``) and ``a``.
    """
    v = u if v is None else v
    U = system.dof_map.expand(u)
    V = system.dof_map.expand(v)
    r = system.regions
    cfg = system.config

    def pair(m):
        return complex(np.vdot(V, m @ U))

    terms = {
        "grad1": pair(r.stiffness1),
        "grad2": pair(r.stiffness2),
        "mass1": pair(r.mass1),
        "mass2": pair(r.mass2),
    }
    B = system.trace_to_modes
    g = system.gamma0_dofs
    uh, vh = B @ u[g], B @ v[g]
    terms["dtn"] = complex(system.modes.period * np.sum(1j * system.modes.beta_n * uh * np.conj(vh)))
    eps_s = permittivity_at(cfg, Region.OMEGA2)
    w2 = cfg.omega**2
    terms["a"] = (
        terms["grad1"] / cfg.eps1
        + terms["grad2"] / eps_s
        - w2 * cfg.mu1 * terms["mass1"]
        - (w2 * cfg.mu2 + 1j * cfg.sigma) * terms["mass2"]
        - terms["dtn"] / cfg.eps1
    )
    return terms


def dump_coo(system: AssembledSystem, path) -> None:
    """Write the full matrix as ``row col re im`` lines, then the rhs as ``rhs i re im``."""
    A = system.matrix().tocoo()
    order = np.lexsort((A.col, A.row))
    with open(Path(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# dimension {system.dimension}\n")
        for k in order:
            z = A.data[k]
            fh.write(f"{A.row[k]} {A.col[k]} {z.real!r} {z.imag!r}\n")
        for i, z in enumerate(system.rhs):
            fh.write(f"rhs {i} {z.real!r} {z.imag!r}\n")
