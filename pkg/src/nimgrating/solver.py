"""Direct solves, limiting-absorption continuation and solve diagnostics."""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from . import dtn
from ._parallel import ordered_map
from .assembly import AssembledSystem, apply_operator, assemble, form_terms, max_truncation
from .exceptions import NimGratingError, SingularSystem
from .mesh import Mesh, build_mesh, default_resolution
from .problem import ProblemConfig, Region, derive_scalars, permittivity_at

logger = logging.getLogger(__name__)

RCOND_THRESHOLD = 1e-14
ENERGY_TOL = 1e-8


@dataclasses.dataclass(frozen=True, eq=False)
class ComplexField:
    """Finite element solution over the free unknowns of ``system``."""

    coefficients: np.ndarray
    system: AssembledSystem

    @property
    def mesh(self) -> Mesh:
        return self.system.mesh

    @property
    def node_values(self) -> np.ndarray:
        """Values at every mesh node, right-side nodes reconstructed by phase."""
        return self.system.dof_map.expand(self.coefficients)

    def value_at_node(self, node: int) -> complex:
        return complex(self.node_values[node])

    def trace_gamma0(self) -> np.ndarray:
        """Samples at ``x_j = j * period / nx``, ``j = 0..nx-1``."""
        return self.node_values[self.mesh.gamma0_nodes[:-1]]

    def trace_interface(self) -> np.ndarray:
        """Values on S at every interface node, both endpoints included."""
        return self.node_values[self.mesh.interface_nodes]

    def restrict(self, region: Region) -> np.ndarray:
        """Node values with nodes outside ``region`` set to zero."""
        out = np.zeros(self.mesh.n_nodes, dtype=complex)
        idx = self.mesh.region_nodes(region)
        out[idx] = self.node_values[idx]
        return out

    def l2_norm(self, region: Region | None = None) -> float:
        r = self.system.regions
        m = {None: r.mass, Region.OMEGA1: r.mass1, Region.OMEGA2: r.mass2}[region]
        U = self.node_values
        return math.sqrt(max(np.vdot(U, m @ U).real, 0.0))

    def gradient_norm(self, region: Region | None = None) -> float:
        r = self.system.regions
        k = {None: r.stiffness, Region.OMEGA1: r.stiffness1, Region.OMEGA2: r.stiffness2}[region]
        U = self.node_values
        return math.sqrt(max(np.vdot(U, k @ U).real, 0.0))

    def h1_norm(self, region: Region | None = None) -> float:
        return math.hypot(self.l2_norm(region), self.gradient_norm(region))

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        if other.system.dimension != self.system.dimension:
            raise ValueError("fields live on different meshes")
        return ComplexField(self.coefficients - other.coefficients, self.system)


@dataclasses.dataclass(frozen=True)
class SolveReport:
    sigma: float
    h1_norm: float
    l2_norm: float
    g_norm: float
    stability_ratio: float
    energy_residual: float
    relative_residual: float
    efficiencies: dict
    efficiency_sum: float
    absorption: float
    condition_estimate: float

    @property
    def energy_accepted(self) -> bool:
        return self.energy_residual <= ENERGY_TOL * max(1.0, self.h1_norm**2)

    def row(self) -> dict:
        return {
            "sigma": self.sigma,
            "h1_norm": self.h1_norm,
            "l2_norm": self.l2_norm,
            "g_norm": self.g_norm,
            "stability_ratio": self.stability_ratio,
            "energy_residual": self.energy_residual,
            "relative_residual": self.relative_residual,
            "efficiency_sum": self.efficiency_sum,
            "absorption": self.absorption,
            "condition_estimate": self.condition_estimate,
        }


def prepare(
    config: ProblemConfig,
    resolution: Sequence[int] | None = None,
    truncation: int | None = None,
):
    """Mesh and mode set with the package defaults.

    The default truncation reaches ``|alpha_n| >= 3 kappa_1`` on both sides
    and is capped by what the Gamma_0 grid resolves.
    """
    scalars = derive_scalars(config)
    nx, ny1, ny2 = resolution if resolution is not None else default_resolution(config)
    mesh = build_mesh(config, nx, ny1, ny2)
    if truncation is None:
        truncation = min(dtn.default_truncation(scalars, config.period), max_truncation(nx))
    modes = dtn.build_mode_set(scalars, config.period, truncation)
    return mesh, modes


def reciprocal_condition(A, lu, max_iter: int = 5) -> float:
    """Hager-Higham 1-norm estimate of ``1 / (||A||_1 ||A^-1||_1)``.

    Deterministic: starts from the uniform vector.
    """
    n = A.shape[0]
    anorm = float(abs(A).sum(axis=0).max())
    if anorm == 0.0:
        return 0.0
    x = np.full(n, 1.0 / n, dtype=complex)
    est = 0.0
    last_j = -1
    for _ in range(max_iter):
        y = lu.solve(x)
        est = max(est, float(np.abs(y).sum()))
        absy = np.abs(y)
        xi = np.where(absy > 0, y / np.where(absy > 0, absy, 1.0), 1.0)
        z = lu.solve(xi, trans="H")
        j = int(np.argmax(np.abs(z)))
        if np.abs(z[j]) <= np.real(np.vdot(z, x)) or j == last_j:
            break
        x = np.zeros(n, dtype=complex)
        x[j] = 1.0
        last_j = j
    # alternating-sign probe guards against underestimation
    alt = np.array([(-1) ** k * (1 + k / max(n - 1, 1)) for k in range(n)], dtype=complex)
    est = max(est, 2.0 * float(np.abs(lu.solve(alt)).sum()) / (3.0 * n))
    if not np.isfinite(est) or est == 0.0:
        return 0.0
    return 1.0 / (anorm * est)


def g_norm(system: AssembledSystem) -> float:
    """``||g||_{H^-1/2(Gamma_0)}``; only mode 0 of g is nonzero."""
    from .analysis import trace_norm

    s = system.scalars
    coeffs = np.zeros(len(system.modes), dtype=complex)
    coeffs[system.modes.truncation] = -2j * s.beta * np.exp(-1j * s.beta * system.config.h1)
    return trace_norm(dtn.TraceCoefficients(coeffs, system.modes.alpha_n), -0.5, system.config.period).value


def absorption(field: ComplexField) -> float:
    """Absorbed power over the incident flux ``beta * period / eps1``."""
    cfg = field.system.config
    if cfg.sigma == 0:
        return 0.0
    eps_s = permittivity_at(cfg, Region.OMEGA2)
    s = cfg.sigma
    loss = (s / cfg.omega) / abs(eps_s) ** 2 * field.gradient_norm(Region.OMEGA2) ** 2
    loss += s * field.l2_norm(Region.OMEGA2) ** 2
    return cfg.eps1 * loss / (field.system.scalars.beta * cfg.period)


def solve(system: AssembledSystem) -> tuple[ComplexField, SolveReport]:
    """Sparse LU solve of the assembled system.

    Raises:
        SingularSystem: reciprocal condition estimate below ``1e-14``.
    """
    A = system.matrix()
    try:
        lu = spla.splu(A, permc_spec="COLAMD")
    except RuntimeError as exc:  # exactly singular factor
        raise SingularSystem(0.0, f"factorization failed: {exc}") from exc
    rcond = reciprocal_condition(A, lu)
    if rcond < RCOND_THRESHOLD:
        raise SingularSystem(rcond)
    u = lu.solve(system.rhs.astype(complex))
    field = ComplexField(u, system)
    return field, report(field, rcond)


def report(field: ComplexField, rcond: float = float("nan")) -> SolveReport:
    system = field.system
    u = field.coefficients
    rhs_norm = np.linalg.norm(system.rhs)
    resid = np.linalg.norm(apply_operator(system, u) - system.rhs)
    a_uu = form_terms(system, u)["a"]
    energy_residual = abs(a_uu - np.vdot(u, system.rhs))
    h1 = field.h1_norm()
    gn = g_norm(system)
    rayleigh = dtn.rayleigh_coefficients(system.modes, field.trace_gamma0(), system.scalars, system.config.h1)
    eff = dtn.efficiencies(system.modes, rayleigh, system.scalars)
    return SolveReport(
        sigma=system.config.sigma,
        h1_norm=h1,
        l2_norm=field.l2_norm(),
        g_norm=gn,
        stability_ratio=h1 / gn,
        energy_residual=float(energy_residual),
        relative_residual=float(resid / rhs_norm) if rhs_norm > 0 else float(resid),
        efficiencies=eff,
        efficiency_sum=float(sum(eff.values())),
        absorption=absorption(field),
        condition_estimate=rcond,
    )


def solve_config(config: ProblemConfig, mesh: Mesh, modes: dtn.ModeSet):
    return solve(assemble(config, mesh, modes))


@dataclasses.dataclass(frozen=True, eq=False)
class LapsResult:
    sigmas: tuple[float, ...]
    fields: tuple          # ComplexField or None per sigma
    reports: tuple         # SolveReport or None per sigma
    failures: dict         # sigma -> message
    sigma0_field: ComplexField | None
    sigma0_report: SolveReport | None
    deltas: tuple[float, ...]
    gaps: tuple[float, ...]
    limit_gap: float
    fitted_rate: float

    def rows(self):
        for k, s in enumerate(self.sigmas):
            yield {
                "sigma": s,
                "delta": self.deltas[k] if k < len(self.deltas) else float("nan"),
                "limit_gap": self.gaps[k],
            }


def _try_solve(config, mesh, modes):
    try:
        return solve_config(config, mesh, modes), None
    except NimGratingError as exc:
        logger.warning("solve failed at sigma=%g: %s", config.sigma, exc)
        return None, str(exc)


def laps_continuation(
    config: ProblemConfig, mesh: Mesh, modes: dtn.ModeSet, sigma0: float = 1.0, num_steps: int = 13
) -> LapsResult:
    """Solve along ``sigma_k = sigma0 * 2^-k`` and compare with the direct sigma = 0 solve."""
    if not sigma0 > 0:
        raise ValueError("sigma0 must be positive")
    if num_steps < 2:
        raise ValueError("num_steps must be at least 2")
    sigmas = tuple(sigma0 * 2.0**-k for k in range(num_steps))
    results = ordered_map(lambda s: _try_solve(config.replace(sigma=s), mesh, modes), sigmas + (0.0,))
    *cont, (direct, direct_err) = results
    failures = {s: err for s, (_, err) in zip(sigmas, cont) if err is not None}
    if direct_err is not None:
        failures[0.0] = direct_err
    fields = tuple(r[0][0] if r[0] else None for r in cont)
    reports = tuple(r[0][1] if r[0] else None for r in cont)
    u0 = direct[0] if direct else None

    def dist(a, b):
        if a is None or b is None:
            return float("nan")
        return (a - b).l2_norm()

    deltas = tuple(dist(fields[k], fields[k + 1]) for k in range(num_steps - 1))
    gaps = tuple(dist(f, u0) for f in fields)
    ok = [(s, g) for s, g in zip(sigmas, gaps) if np.isfinite(g) and g > 0]
    rate = float("nan")
    if len(ok) >= 2:
        ls, lg = np.log([s for s, _ in ok]), np.log([g for _, g in ok])
        rate = float(np.polyfit(ls, lg, 1)[0])
    return LapsResult(
        sigmas=sigmas, fields=fields, reports=reports, failures=failures,
        sigma0_field=u0, sigma0_report=direct[1] if direct else None,
        deltas=deltas, gaps=gaps, limit_gap=gaps[-1], fitted_rate=rate,
    )


@dataclasses.dataclass(frozen=True)
class StabilitySweep:
    sigmas: tuple[float, ...]
    reports: tuple
    failures: dict

    @property
    def ratios(self) -> np.ndarray:
        return np.array([r.stability_ratio if r else np.nan for r in self.reports])

    @property
    def max_ratio(self) -> float:
        return float(np.nanmax(self.ratios))

    @property
    def spread(self) -> float:
        """max / min stability ratio over successful solves."""
        r = self.ratios
        return float(np.nanmax(r) / np.nanmin(r))


def stability_sweep(
    config: ProblemConfig, sigmas: Sequence[float], mesh: Mesh, modes: dtn.ModeSet
) -> StabilitySweep:
    if any(s < 0 for s in sigmas):
        raise ValueError("sigma values must be nonnegative")
    results = ordered_map(lambda s: _try_solve(config.replace(sigma=s), mesh, modes), sigmas)
    reports = tuple(r[0][1] if r[0] else None for r in results)
    failures = {s: r[1] for s, r in zip(sigmas, results) if r[1] is not None}
    return StabilitySweep(tuple(sigmas), reports, failures)


# --- CSV exports --------------------------------------------------------------

def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_rows(path, rows, header=None) -> None:
    rows = list(rows)
    header = header or (list(rows[0]) if rows else [])
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(r.get(k, "")) for k in header])


def write_field_csv(path, field: ComplexField) -> None:
    U = field.node_values
    rows = (
        {"node": k, "x1": x[0], "x2": x[1], "re_u": z.real, "im_u": z.imag, "abs_u": abs(z)}
        for k, (x, z) in enumerate(zip(field.mesh.nodes, U))
    )
    write_rows(path, rows, ["node", "x1", "x2", "re_u", "im_u", "abs_u"])


def write_report_csv(path, reports: Sequence[SolveReport]) -> None:
    write_rows(path, (r.row() for r in reports if r is not None))

