"""Closed-form mode-matching solution for a flat interface ``x2 = h2``.

Per mode ``n`` the field is ``exp(i alpha_n x1)`` times

* ``A_n cos(gamma_n x2) + B_n sin(gamma_n x2)`` in ``0 < x2 < h2`` with
  ``B_n = 0`` (Neumann on Gamma),
* ``C_n exp(i beta_n x2) + D_n exp(-i beta_n x2)`` for ``x2 > h2`` with
  ``D_n`` the incident amplitude (1 for ``n = 0``, otherwise 0).

``A_n`` and ``C_n`` follow from continuity of ``u`` and ``eps^-1 d_2 u`` at
``h2``. The reflection coefficient is ``r_n = C_n exp(i beta_n h1)``, the
modal coefficient of the diffracted field on Gamma_0.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path

import numpy as np

from .dtn import ModeSet, TraceCoefficients
from .exceptions import DegenerateLayer, InvalidConfig
from .problem import ProblemConfig, Region, derive_scalars, permittivity_at

DET_TOL = 1e-13


@dataclasses.dataclass(frozen=True)
class LayeredSolution:
    config: ProblemConfig
    modes: ModeSet
    h2: float
    gamma_n: np.ndarray
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def reflection(self) -> TraceCoefficients:
        return TraceCoefficients(self.C * np.exp(1j * self.modes.beta_n * self.config.h1), self.modes.alpha_n)


def _principal_root(z):
    """Square root with Im >= 0, and Re >= 0 when Im == 0."""
    r = np.sqrt(np.asarray(z, dtype=complex))
    flip = (r.imag < 0) | ((r.imag == 0) & (r.real < 0))
    return np.where(flip, -r, r)


def solve_flat(config: ProblemConfig, modes: ModeSet) -> LayeredSolution:
    """Per-mode 2x2 interface solve for a flat profile.

    Raises:
        InvalidConfig: the profile is not flat.
        DegenerateLayer: some per-mode determinant is below ``1e-13``.
    """
    if not config.profile.is_flat:
        raise InvalidConfig(["oracle needs a flat profile (all trigonometric coefficients zero)"])
    derive_scalars(config)
    h2 = config.profile.mean
    eps1 = config.eps1
    eps_s = permittivity_at(config, Region.OMEGA2)
    k2sq = eps_s * (config.omega**2 * config.mu2 + 1j * config.sigma)
    a_n = modes.alpha_n
    b_n = modes.beta_n
    gamma = _principal_root(k2sq - a_n**2)
    D = (modes.n == 0).astype(complex)

    c, s = np.cos(gamma * h2), np.sin(gamma * h2)
    ep, em = np.exp(1j * b_n * h2), np.exp(-1j * b_n * h2)
    # rows: continuity of u, continuity of eps^-1 d_2 u; unknowns (A, C)
    m11, m12 = c, -ep
    m21, m22 = -gamma * s / eps_s, -1j * b_n * ep / eps1
    r1 = D * em
    r2 = -1j * b_n * D * em / eps1
    det = m11 * m22 - m12 * m21
    bad = np.abs(det) < DET_TOL
    if np.any(bad):
        n = int(modes.n[np.argmax(bad)])
        raise DegenerateLayer(f"mode {n}: interface determinant {abs(det[np.argmax(bad)]):.3e}")
    A = (r1 * m22 - m12 * r2) / det
    C = (m11 * r2 - m21 * r1) / det
    return LayeredSolution(config, modes, h2, gamma, A, np.zeros_like(A), C, D)


def evaluate_field(solution: LayeredSolution, points) -> np.ndarray:
    """Analytic total field at ``points`` (shape ``(..., 2)``) of the closed cell."""
    p = np.asarray(points, dtype=float)
    x1, x2 = p[..., 0], p[..., 1]
    cfg = solution.config
    tol = 1e-12 * max(1.0, cfg.h1, cfg.period)
    if np.any(x2 < -tol) or np.any(x2 > cfg.h1 + tol) or np.any(x1 < -tol) or np.any(x1 > cfg.period + tol):
        raise ValueError("point outside the cell")
    m = solution.modes
    x1e, x2e = x1[..., None], x2[..., None]
    lower = solution.A * np.cos(solution.gamma_n * x2e) + solution.B * np.sin(solution.gamma_n * x2e)
    upper = solution.C * np.exp(1j * m.beta_n * x2e) + solution.D * np.exp(-1j * m.beta_n * x2e)
    vertical = np.where(x2e <= solution.h2, lower, upper)
    return np.sum(vertical * np.exp(1j * m.alpha_n * x1e), axis=-1)


def evaluate_dx2(solution: LayeredSolution, points, side: str = "auto") -> np.ndarray:
    """Analytic ``d u / d x2``; ``side`` picks the layer formula at ``x2 = h2``."""
    p = np.asarray(points, dtype=float)
    x1e, x2e = p[..., 0][..., None], p[..., 1][..., None]
    g, m = solution.gamma_n, solution.modes
    lower = g * (-solution.A * np.sin(g * x2e) + solution.B * np.cos(g * x2e))
    upper = 1j * m.beta_n * (solution.C * np.exp(1j * m.beta_n * x2e) - solution.D * np.exp(-1j * m.beta_n * x2e))
    if side == "lower":
        vertical = lower
    elif side == "upper":
        vertical = upper
    else:
        vertical = np.where(x2e <= solution.h2, lower, upper)
    return np.sum(vertical * np.exp(1j * m.alpha_n * x1e), axis=-1)


def write_coefficients_csv(path, solution: LayeredSolution) -> None:
    r = solution.reflection.coeffs
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "gamma_re", "gamma_im", "A_re", "A_im", "C_re", "C_im", "r_re", "r_im"])
        for k, n in enumerate(solution.modes.n):
            vals = [solution.gamma_n[k], solution.A[k], solution.C[k], r[k]]
            w.writerow([int(n)] + [repr(float(getattr(z, part))) for z in vals for part in ("real", "imag")])


# --- comparison against the finite element solution --------------------------

# symmetric 7-point rule on triangles, exact for degree 5
_R15 = np.sqrt(15.0)
_A1, _B1 = (6 - _R15) / 21, (9 + 2 * _R15) / 21
_A2, _B2 = (6 + _R15) / 21, (9 - 2 * _R15) / 21
_Q7_BARY = np.array([
    [1 / 3, 1 / 3, 1 / 3],
    [_B1, _A1, _A1], [_A1, _B1, _A1], [_A1, _A1, _B1],
    [_B2, _A2, _A2], [_A2, _B2, _A2], [_A2, _A2, _B2],
])
_Q7_W = np.array([9 / 40, *[(155 - _R15) / 1200] * 3, *[(155 + _R15) / 1200] * 3])


def l2_error(field, solution: LayeredSolution) -> float:
    """``||u_h - u||_{L2(Omega)}`` with a 7-point rule on every triangle."""
    mesh = field.mesh
    U = field.node_values
    p = mesh.nodes[mesh.triangles]
    area = np.abs(mesh.signed_areas())
    qp = np.einsum("qk,tkd->tqd", _Q7_BARY, p)
    uh = np.einsum("qk,tk->tq", _Q7_BARY, U[mesh.triangles])
    err = np.abs(uh - evaluate_field(solution, qp)) ** 2
    return float(np.sqrt(np.sum(area[:, None] * _Q7_W * err)))
