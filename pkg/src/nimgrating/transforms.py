"""Flattening maps between the physical regions and reference rectangles.

``plus`` maps Omega_1 onto ``D+ = (-1, 1) x (0, 1)`` and ``minus`` maps
Omega_2 onto ``D- = (-1, 1) x (-1, 0)``; both send the profile ``S`` to
``x~2 = 0``. Metrics are evaluated from the exact profile derivatives.

All functions accept points as arrays of shape ``(..., 2)``.
"""

from __future__ import annotations

import dataclasses
from typing import Literal

import numpy as np

from .problem import GratingProfile

DOMAIN_TOL = 1e-12


@dataclasses.dataclass(frozen=True)
class FlatteningMap:
    side: Literal["plus", "minus"]
    profile: GratingProfile
    h1: float

    def __post_init__(self):
        if self.side not in ("plus", "minus"):
            raise ValueError(f"side must be 'plus' or 'minus', got {self.side!r}")

    @property
    def period(self) -> float:
        return self.profile.period

    def _height(self, f):
        # thickness of the layer measured from S
        return self.h1 - f if self.side == "plus" else f


def _split(points):
    p = np.asarray(points, dtype=float)
    if p.shape[-1] != 2:
        raise ValueError("points must have trailing dimension 2")
    return p[..., 0], p[..., 1]


def map_forward(fmap: FlatteningMap, x) -> np.ndarray:
    """Physical point(s) to reference coordinates."""
    x1, x2 = _split(x)
    lam = fmap.period
    tol = DOMAIN_TOL * max(1.0, lam, fmap.h1)
    if np.any(x1 < -tol) or np.any(x1 > lam + tol):
        raise ValueError("point outside the period cell")
    f = fmap.profile(x1)
    if fmap.side == "plus":
        if np.any(x2 < f - tol) or np.any(x2 > fmap.h1 + tol):
            raise ValueError("point outside Omega_1")
        xt2 = (x2 - f) / (fmap.h1 - f)
    else:
        if np.any(x2 < -tol) or np.any(x2 > f + tol):
            raise ValueError("point outside Omega_2")
        xt2 = (x2 - f) / f
    return np.stack([2.0 * x1 / lam - 1.0, xt2], axis=-1)


def _physical_x1(fmap, xt1):
    return 0.5 * fmap.period * (np.asarray(xt1) + 1.0)


def _check_reference(fmap, xt1, xt2):
    tol = DOMAIN_TOL
    lo, hi = (0.0, 1.0) if fmap.side == "plus" else (-1.0, 0.0)
    if np.any(np.abs(xt1) > 1 + tol) or np.any(xt2 < lo - tol) or np.any(xt2 > hi + tol):
        raise ValueError(f"point outside D{'+' if fmap.side == 'plus' else '-'}")


def map_inverse(fmap: FlatteningMap, xt) -> np.ndarray:
    """Reference coordinates back to the physical region."""
    xt1, xt2 = _split(xt)
    _check_reference(fmap, xt1, xt2)
    x1 = _physical_x1(fmap, xt1)
    f = fmap.profile(x1)
    if fmap.side == "plus":
        x2 = f + xt2 * (fmap.h1 - f)
    else:
        x2 = f * (1.0 + xt2)
    return np.stack([x1, x2], axis=-1)


def jacobian_det(fmap: FlatteningMap, xt) -> np.ndarray:
    """|det d(Psi^-1)/d(x~)|: (period/2)(h1 - f) on D+, (period/2) f on D-."""
    xt1, xt2 = _split(xt)
    _check_reference(fmap, xt1, xt2)
    f = fmap.profile(_physical_x1(fmap, xt1))
    return 0.5 * fmap.period * fmap._height(f)


def forward_jacobian(fmap: FlatteningMap, xt) -> np.ndarray:
    """Matrix ``d x~_i / d x_j`` evaluated at the physical image of ``xt``."""
    xt1, xt2 = _split(xt)
    _check_reference(fmap, xt1, xt2)
    x1 = _physical_x1(fmap, xt1)
    f = fmap.profile(x1)
    fp = fmap.profile.derivative(x1)
    d = fmap._height(f)
    jac = np.zeros(np.shape(xt1) + (2, 2))
    jac[..., 0, 0] = 2.0 / fmap.period
    if fmap.side == "plus":
        jac[..., 1, 0] = fp * (xt2 - 1.0) / d
    else:
        jac[..., 1, 0] = -fp * (xt2 + 1.0) / d
    jac[..., 1, 1] = 1.0 / d
    return jac


def pullback_metric(fmap: FlatteningMap, xt) -> np.ndarray:
    """Metric ``(dPsi/dx)(dPsi/dx)^T`` expressed in reference coordinates.

    With this metric ``|grad_x u|^2 = grad_x~ u . (metric grad_x~ u)``.
    """
    jac = forward_jacobian(fmap, xt)
    return jac @ np.swapaxes(jac, -1, -2)


def reflected_metric(fmap_minus: FlatteningMap, xt) -> np.ndarray:
    """Metric of the Omega_2 equation after mirroring D- onto D+.

    Diagonal entries are those of the minus metric at ``(x~1, -x~2)``,
    off-diagonal entries change sign.
    """
    if fmap_minus.side != "minus":
        raise ValueError("reflected_metric needs the minus-side map")
    xt = np.asarray(xt, dtype=float)
    xt1, xt2 = _split(xt)
    if np.any(xt2 < -DOMAIN_TOL) or np.any(xt2 > 1 + DOMAIN_TOL):
        raise ValueError("point outside D+")
    mirrored = np.stack([xt1, -xt2], axis=-1)
    m = pullback_metric(fmap_minus, mirrored)
    m[..., 0, 1] *= -1.0
    m[..., 1, 0] *= -1.0
    return m


def metric_eigenvalue_bounds(fmap: FlatteningMap, n: int = 64) -> tuple[float, float]:
    """Smallest and largest metric eigenvalue over an ``n x n`` grid of the closed cell."""
    lo, hi = (0.0, 1.0) if fmap.side == "plus" else (-1.0, 0.0)
    g1, g2 = np.meshgrid(np.linspace(-1, 1, n), np.linspace(lo, hi, n), indexing="ij")
    ev = np.linalg.eigvalsh(pullback_metric(fmap, np.stack([g1, g2], axis=-1)))
    return float(ev.min()), float(ev.max())
