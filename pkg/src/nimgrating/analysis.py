"""Diagnostics: trace norms, harmonic extension, coercivity constant, ADN checker."""

from __future__ import annotations

import dataclasses
import math
from typing import Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla
from numpy.polynomial import polynomial as P

from ._parallel import ordered_map
from .assembly import AssembledSystem, assemble
from .dtn import TraceCoefficients
from .problem import ProblemConfig, Region, derive_scalars
from .exceptions import NimGratingError
from .solver import ComplexField, solve, write_rows
from .transforms import FlatteningMap, jacobian_det, pullback_metric, reflected_metric


@dataclasses.dataclass(frozen=True)
class TraceNorm:
    s: float
    value: float


def trace_norm(trace: TraceCoefficients, s: float, period: float) -> TraceNorm:
    """``||w||_{H^s}^2 = period * sum_n (1 + alpha_n^2)^s |w_n|^2`` over the retained modes."""
    if s not in (-0.5, 0.5):
        raise ValueError(f"unsupported Sobolev order {s}; use -1/2 or 1/2")
    weight = (1.0 + np.asarray(trace.alpha_n, dtype=float) ** 2) ** s
    return TraceNorm(s, float(math.sqrt(period * np.sum(weight * np.abs(trace.coeffs) ** 2))))


# --- harmonic extension ---------------------------------------------------------

def _interface_split(system: AssembledSystem):
    """Folded Omega_2 stiffness and the interface / interior unknowns of Omega_2."""
    mesh = system.mesh
    dmap = system.dof_map
    Pm = dmap.prolongation
    K2 = (Pm.conj().T @ system.regions.stiffness2 @ Pm).tocsr()
    omega2 = np.unique(dmap.dof[mesh.region_nodes(Region.OMEGA2)])
    iface = dmap.dof[mesh.interface_nodes[:-1]]
    interior = np.setdiff1d(omega2, iface)
    return K2, iface, interior


def extension_R(trace, system: AssembledSystem):
    """Discrete harmonic extension of interface values into Omega_2.

    Solves the Omega_2 Laplace problem with Dirichlet data on S, homogeneous
    Neumann data on Gamma and quasi-periodic sides.

    Args:
        trace: values at the interface nodes ``x1 = j*period/nx``,
            ``j = 0..nx-1`` (a trailing value at ``x1 = period`` is ignored).

    Returns:
        A :class:`~nimgrating.solver.ComplexField` vanishing away from Omega_2.
    """
    nx = system.mesh.nx
    psi = np.asarray(trace, dtype=complex)
    if len(psi) == nx + 1:
        psi = psi[:-1]
    if len(psi) != nx:
        raise ValueError(f"expected {nx} interface values, got {len(psi)}")
    K2, iface, interior = _interface_split(system)
    u = np.zeros(system.dimension, dtype=complex)
    u[iface] = psi
    if len(interior):
        K_ii = K2[interior][:, interior].tocsc()
        K_is = K2[interior][:, iface]
        u[interior] = spla.spsolve(K_ii, -(K_is @ psi))
    return ComplexField(u, system)


def _schur(K, iface, interior):
    K = K.tocsr()
    S = K[iface][:, iface].toarray()
    if len(interior):
        K_is = K[interior][:, iface].toarray()
        lu = spla.splu(K[interior][:, interior].tocsc())
        S = S - K[iface][:, interior].toarray() @ lu.solve(K_is.astype(K.dtype))
    return 0.5 * (S + S.conj().T)


def interface_schur_complements(system: AssembledSystem):
    """Dirichlet energy matrices of the two regions on the interface unknowns.

    ``psi^H S_k psi`` is the smallest unit-coefficient Dirichlet energy in
    region ``k`` among discrete fields with interface values ``psi``.
    """
    mesh = system.mesh
    dmap = system.dof_map
    Pm = dmap.prolongation
    iface = dmap.dof[mesh.interface_nodes[:-1]]
    out = []
    for region, K in ((Region.OMEGA1, system.regions.stiffness1), (Region.OMEGA2, system.regions.stiffness2)):
        Kf = (Pm.conj().T @ K @ Pm).tocsr()
        dofs = np.unique(dmap.dof[mesh.region_nodes(region)])
        out.append(_schur(Kf, iface, np.setdiff1d(dofs, iface)))
    return out[0], out[1]


def extension_bound(system: AssembledSystem) -> float:
    """``sup ||R psi||_{H1(Omega_2)} / ||psi||_{H^1/2(S)}`` over discrete traces.

    The trace norm uses the full discrete Fourier transform of the interface
    values, with ``alpha_n`` the quasi-periodic frequencies.
    """
    mesh = system.mesh
    nx = mesh.nx
    K2, iface, interior = _interface_split(system)
    Pm = system.dof_map.prolongation
    M2 = (Pm.conj().T @ system.regions.mass2 @ Pm).tocsr()
    H = _schur_extension_energy(K2, M2, iface, interior)
    n = np.fft.fftfreq(nx, d=1.0 / nx)
    alpha_n = system.scalars.alpha + 2 * np.pi * n / mesh.period
    x = np.arange(nx) * mesh.period / nx
    F = np.exp(-1j * np.outer(alpha_n, x)) / nx
    W = mesh.period * F.conj().T @ np.diag(np.sqrt(1.0 + alpha_n**2)) @ F
    W = 0.5 * (W + W.conj().T)
    top = sla.eigh(H, W, eigvals_only=True, subset_by_index=[nx - 1, nx - 1])[0]
    return float(math.sqrt(max(top, 0.0)))


def _schur_extension_energy(K2, M2, iface, interior):
    """H1 energy (stiffness + mass) of the harmonic extension as a matrix on ``iface``."""
    n_if = len(iface)
    E = np.zeros((len(iface) + len(interior), n_if), dtype=complex)
    E[:n_if] = np.eye(n_if)
    if len(interior):
        lu = spla.splu(K2[interior][:, interior].tocsc())
        E[n_if:] = -lu.solve(K2[interior][:, iface].toarray().astype(complex))
    order = np.concatenate([iface, interior])
    A = (K2 + M2)[order][:, order]
    H = E.conj().T @ (A @ E)
    return 0.5 * (H + H.conj().T)


# --- coercivity ---------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class CoercivityReport:
    K: float
    condition_value: float
    condition_met: bool
    lower_bound_terms: tuple[float, float]
    young_parameter: float
    k_defined: bool = True

    def row(self) -> dict:
        return {
            "K": self.K,
            "condition_value": self.condition_value,
            "condition_met": self.condition_met,
            "omega2_factor": self.lower_bound_terms[0],
            "omega1_factor": self.lower_bound_terms[1],
            "young_parameter": self.young_parameter,
            "k_defined": self.k_defined,
        }


def coercivity_factor(config: ProblemConfig) -> float:
    """``(|eps2| + sigma/omega) / (eps2^2 + (sigma/omega)^2)``."""
    s = config.sigma / config.omega
    return (abs(config.eps2) + s) / (config.eps2**2 + s**2)


def coercivity_report(config: ProblemConfig, K: float) -> CoercivityReport:
    """Condition value and the two lower-bound factors for a given ``K``.

    The Young parameter is ``sqrt(condition_value)`` clipped into (0, 1).
    """
    if not np.isfinite(K):
        nan = float("nan")
        return CoercivityReport(nan, nan, False, (nan, nan), nan, k_defined=False)
    cv = coercivity_factor(config) * K
    s = config.sigma / config.omega / abs(config.eps2)
    tiny = 1e-12
    e = min(max(math.sqrt(cv), tiny), 1.0 - tiny)
    t_omega2 = 1.0 + s - e - s * e
    t_omega1 = 1.0 - cv / e
    return CoercivityReport(float(K), float(cv), bool(cv < 1.0), (t_omega2, t_omega1), e)


def coercivity_check(config: ProblemConfig, field, mesh=None) -> CoercivityReport:
    """A posteriori ``K`` from a solved field through its harmonic extension.

    ``mesh`` is accepted for interface symmetry; the field carries its own.
    """
    system = field.system
    if mesh is not None and mesh is not system.mesh:
        raise ValueError("field was computed on a different mesh")
    denom = field.gradient_norm(Region.OMEGA1) ** 2 / config.eps1
    if denom <= 0.0:
        return coercivity_report(config, float("nan"))
    ext = extension_R(field.trace_interface(), system)
    num = ext.gradient_norm(Region.OMEGA2) ** 2
    return coercivity_report(config, num / denom)


def worst_case_K(system: AssembledSystem, tol: float = 1e-8, max_iter: int = 20000) -> float:
    """``max psi^H S2 psi / (eps1^-1 psi^H S1 psi)`` over interface traces by power iteration.

    Traces with zero energy on both sides (constants at normal incidence)
    are projected out.
    """
    S1, S2 = interface_schur_complements(system)
    S1 = S1 / system.config.eps1
    w, V = np.linalg.eigh(S1)
    keep = w > 1e-12 * w.max()
    Vr = V[:, keep] / np.sqrt(w[keep])
    C = Vr.conj().T @ S2 @ Vr
    C = 0.5 * (C + C.conj().T)
    x = np.ones(C.shape[0], dtype=complex) + 1j * np.linspace(0.0, 1.0, C.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(max_iter):
        y = C @ x
        new = float(np.real(np.vdot(x, y)))
        x = y / np.linalg.norm(y)
        if abs(new - lam) <= tol * max(abs(new), 1.0):
            return new
        lam = new
    return lam


def coercivity_sweep(config: ProblemConfig, sigmas: Sequence[float], mesh, modes) -> list[dict]:
    """A posteriori coercivity rows per sigma, paired with whether the solve succeeded.

    The condition is only recorded; it never gates a solve.
    """
    def one(sigma):
        cfg = config.replace(sigma=sigma)
        try:
            field, _ = solve(assemble(cfg, mesh, modes))
        except NimGratingError as exc:
            return {"sigma": sigma, "solved": False, **coercivity_report(cfg, float("nan")).row(), "error": str(exc)}
        return {"sigma": sigma, "solved": True, **coercivity_check(cfg, field).row(), "error": ""}

    return ordered_map(one, list(sigmas))


# --- complementing boundary condition -----------------------------------------

@dataclasses.dataclass(frozen=True)
class AdnSample:
    x1: float
    f: float
    fprime: float
    xi1: float
    sigma: float
    tau1_plus: complex
    tau1_minus: complex
    tau2_plus: complex
    tau2_minus: complex
    independence_margin: float
    delta_residual: float
    root_mismatch: float
    conjugacy_residual: float

    def row(self) -> dict:
        return {
            "x1": self.x1, "f": self.f, "fprime": self.fprime, "xi1": self.xi1, "sigma": self.sigma,
            "tau1_plus_re": self.tau1_plus.real, "tau1_plus_im": self.tau1_plus.imag,
            "tau2_plus_re": self.tau2_plus.real, "tau2_plus_im": self.tau2_plus.imag,
            "independence_margin": self.independence_margin,
            "delta_residual": self.delta_residual,
            "conjugacy_residual": self.conjugacy_residual,
        }


def characteristic_roots(f, fp, h1, period, xi1):
    """Closed-form roots of the two quadratic symbols on the flattened interface.

    ``tau1`` belongs to the Omega_1 symbol, ``tau2`` to the mirrored Omega_2
    symbol. The ``+`` roots carry ``2 i |xi1|`` so that Im > 0 for either sign
    of ``xi1``.
    """
    c = 2.0 / (period * (fp**2 + 1.0))
    im = 2j * abs(xi1)
    t1p = c * (h1 - f) * (fp * xi1 + 0.5 * im)
    t1m = c * (h1 - f) * (fp * xi1 - 0.5 * im)
    t2p = c * f * (-fp * xi1 + 0.5 * im)
    t2m = c * f * (-fp * xi1 - 0.5 * im)
    return t1p, t1m, t2p, t2m


def _quadratic_symbol(J, M, xi1):
    """Coefficients (ascending in tau) of ``J * M_ij xi_i xi_j`` with ``xi = (xi1, tau)``."""
    return J * np.array([M[0, 0] * xi1**2, (M[0, 1] + M[1, 0]) * xi1, M[1, 1]], dtype=complex)


def _conormal_symbol(J, M, xi1):
    """Coefficients of ``J * M_2i xi_i``."""
    return J * np.array([M[1, 0] * xi1, M[1, 1]], dtype=complex)


def _remainder(poly, modulus):
    rem = P.polydiv(np.asarray(poly, dtype=complex), np.asarray(modulus, dtype=complex))[1]
    out = np.zeros(len(modulus) - 1, dtype=complex)
    out[: len(rem)] = rem
    return out


def adn_check(config: ProblemConfig, x1: float, xi1: float, sigma: float | None = None) -> AdnSample:
    """Complementing-condition test at one interface point and tangential frequency.

    Builds ``D = B' L*`` for the flattened, mirrored transmission system,
    reduces every entry modulo ``M+ = (tau - tau1+)(tau - tau2+)`` and returns
    the smallest singular value of the ``2 x 4`` remainder coefficient matrix.
    """
    if xi1 == 0:
        raise ValueError("xi1 must be nonzero (the tangent vector must not vanish)")
    sigma = config.sigma if sigma is None else sigma
    cfg = config.replace(sigma=sigma)
    derive_scalars(cfg)
    prof, lam, h1 = cfg.profile, cfg.period, cfg.h1
    plus = FlatteningMap("plus", prof, h1)
    minus = FlatteningMap("minus", prof, h1)
    xt = np.array([2.0 * x1 / lam - 1.0, 0.0])
    M_plus = pullback_metric(plus, xt)
    M_refl = reflected_metric(minus, xt)
    J_plus = float(jacobian_det(plus, xt))
    J_minus = float(jacobian_det(minus, np.array([xt[0], 0.0])))
    eps1 = cfg.eps1
    eps_t = complex(cfg.eps2, sigma / cfg.omega)

    q_plus = _quadratic_symbol(J_plus, M_plus, xi1)
    q_minus = _quadratic_symbol(J_minus, M_refl, xi1)
    p_plus = _conormal_symbol(J_plus, M_plus, xi1)
    p_minus = _conormal_symbol(J_minus, M_refl, xi1)

    f = float(prof(x1))
    fp = float(prof.derivative(x1))
    t1p, t1m, t2p, t2m = characteristic_roots(f, fp, h1, lam, xi1)

    # D = B' L*, with L' = diag(q+/eps1, q-) and B' = [[1, -eps~], [p+/eps1, p-]]
    D = [
        [q_minus, -eps_t / eps1 * q_plus],
        [P.polymul(p_plus, q_minus) / eps1, P.polymul(p_minus, q_plus) / eps1],
    ]
    m_plus = P.polyfromroots([t1p, t2p])
    R = np.array([np.concatenate([_remainder(D[i][0], m_plus), _remainder(D[i][1], m_plus)]) for i in range(2)])
    margin = float(np.linalg.svd(R, compute_uv=False)[-1])

    delta = P.polymul(q_plus, q_minus) / eps1
    roots = np.array([t1p, t1m, t2p, t2m])
    scale = np.sum(np.abs(delta)) * np.max(np.maximum(1.0, np.abs(roots))) ** 4
    residual = float(np.max(np.abs(P.polyval(roots, delta))) / scale)

    # numerically computed roots of each symbol, ordered (Im > 0, Im < 0)
    scale_r = max(1.0, float(np.max(np.abs(roots))))
    mismatch = conj_res = 0.0
    for q, (rp, rm) in ((q_plus, (t1p, t1m)), (q_minus, (t2p, t2m))):
        num = P.polyroots(q)
        num = num[np.argsort(-num.imag)]
        mismatch = max(mismatch, abs(num[0] - rp), abs(num[1] - rm))
        conj_res = max(conj_res, abs(num[1] - np.conj(num[0])), abs(rm - np.conj(rp)))
    return AdnSample(
        x1=float(x1), f=f, fprime=fp, xi1=float(xi1), sigma=float(sigma),
        tau1_plus=complex(t1p), tau1_minus=complex(t1m), tau2_plus=complex(t2p), tau2_minus=complex(t2m),
        independence_margin=margin, delta_residual=residual,
        root_mismatch=float(mismatch / scale_r), conjugacy_residual=float(conj_res / scale_r),
    )


def adn_sweep(
    config: ProblemConfig,
    x1_values: Sequence[float],
    xi1_values: Sequence[float],
    sigmas: Sequence[float],
) -> list[AdnSample]:
    """Margins over the grid ``x1 x xi1 x sigma`` (sigma varies slowest)."""
    if any(xi == 0 for xi in xi1_values):
        raise ValueError("xi1 grid contains 0; the tangent vector must not vanish")
    grid = [(x1, xi, s) for s in sigmas for x1 in x1_values for xi in xi1_values]
    return ordered_map(lambda p: adn_check(config, *p), grid)


def default_x1_grid(config: ProblemConfig, n: int = 32) -> np.ndarray:
    return np.arange(n) * config.period / n


def write_table(path, samples: Sequence[AdnSample]) -> None:
    write_rows(path, (s.row() for s in samples))
