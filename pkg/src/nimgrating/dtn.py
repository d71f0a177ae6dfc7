"""Fourier mode set, DtN operator, incident datum and Rayleigh coefficients.

Quasi-periodic traces on a horizontal line are represented by their Fourier
coefficients ``w_n``, ``n = -N..N``, with respect to ``exp(i alpha_n x1)``.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from pathlib import Path

import numpy as np

from .exceptions import InsufficientSampling, TruncationMismatch, WoodAnomaly
from .problem import DerivedScalars, incident_field

WOOD_TOL = 1e-10
DEFAULT_TAIL_FACTOR = 3.0


@dataclasses.dataclass(frozen=True)
class ModeSet:
    truncation: int
    period: float
    kappa1: float
    alpha_n: np.ndarray
    beta_n: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    @property
    def propagating(self) -> np.ndarray:
        return np.abs(self.alpha_n) < self.kappa1

    @property
    def classification(self) -> list[str]:
        return ["propagating" if p else "evanescent" for p in self.propagating]

    def __len__(self):
        return 2 * self.truncation + 1


@dataclasses.dataclass(frozen=True)
class TraceCoefficients:
    coeffs: np.ndarray
    alpha_n: np.ndarray

    @property
    def truncation(self) -> int:
        return (len(self.coeffs) - 1) // 2

    def __add__(self, other):
        _check_same(self, other)
        return TraceCoefficients(self.coeffs + other.coeffs, self.alpha_n)

    def scale(self, c) -> "TraceCoefficients":
        return TraceCoefficients(c * self.coeffs, self.alpha_n)

    def evaluate(self, x1) -> np.ndarray:
        """Sum the series at ``x1``."""
        return np.exp(1j * np.multiply.outer(np.asarray(x1, float), self.alpha_n)) @ self.coeffs


def _check_same(a: TraceCoefficients, b: TraceCoefficients):
    if len(a.coeffs) != len(b.coeffs):
        raise TruncationMismatch(
            f"truncation {a.truncation} does not match {b.truncation}"
        )


def build_mode_set(scalars: DerivedScalars, period: float, truncation: int) -> ModeSet:
    """Tangential wavenumbers and propagation constants for ``n = -N..N``.

    Raises:
        WoodAnomaly: some ``|alpha_n|`` lies within ``1e-10`` of ``kappa_1``.
    """
    if truncation < 0:
        raise ValueError("truncation must be nonnegative")
    n = np.arange(-truncation, truncation + 1)
    alpha_n = scalars.alpha + 2 * math.pi * n / period
    k1 = scalars.kappa1
    gap = np.abs(np.abs(alpha_n) - k1)
    if np.any(gap < WOOD_TOL):
        i = int(np.argmin(gap))
        raise WoodAnomaly(int(n[i]), float(alpha_n[i]), k1)
    beta_n = np.where(
        np.abs(alpha_n) < k1,
        np.sqrt(np.clip(k1**2 - alpha_n**2, 0.0, None)) + 0j,
        1j * np.sqrt(np.clip(alpha_n**2 - k1**2, 0.0, None)),
    )
    return ModeSet(truncation, period, k1, alpha_n, beta_n)


def default_truncation(scalars: DerivedScalars, period: float, factor=DEFAULT_TAIL_FACTOR) -> int:
    """Smallest N such that both extreme modes reach ``|alpha_n| >= factor * kappa_1``."""
    step = 2 * math.pi / period
    target = factor * scalars.kappa1
    n_plus = math.ceil((target - scalars.alpha) / step)
    n_minus = math.ceil((target + scalars.alpha) / step)
    return max(0, n_plus, n_minus)


def apply_dtn(modes: ModeSet, trace: TraceCoefficients) -> TraceCoefficients:
    """Coefficientwise ``w_n -> i beta_n w_n``."""
    if len(trace.coeffs) != len(modes):
        raise TruncationMismatch(
            f"trace truncation {trace.truncation} does not match mode set {modes.truncation}"
        )
    return TraceCoefficients(1j * modes.beta_n * trace.coeffs, modes.alpha_n)


def dtn_pairing(modes: ModeSet, w: TraceCoefficients, v: TraceCoefficients | None = None) -> complex:
    """``<T w, v>_{Gamma_0} = period * sum_n i beta_n w_n conj(v_n)``."""
    v = w if v is None else v
    tw = apply_dtn(modes, w)
    _check_same(tw, v)
    return complex(modes.period * np.sum(tw.coeffs * np.conj(v.coeffs)))


def incident_datum(scalars: DerivedScalars, h1: float, x1) -> np.ndarray:
    """Boundary datum ``g = -2 i beta exp(i(alpha x1 - beta h1))``."""
    x1 = np.asarray(x1, dtype=float)
    return -2j * scalars.beta * np.exp(1j * (scalars.alpha * x1 - scalars.beta * h1))


def fourier_matrix(modes: ModeSet, n_samples: int) -> np.ndarray:
    """Trapezoidal map from uniform samples ``x_j = j*period/n_samples`` to coefficients.

    Row ``n`` computes ``(1/n_samples) sum_j w(x_j) exp(-i alpha_n x_j)``.
    """
    x = np.arange(n_samples) * (modes.period / n_samples)
    return np.exp(-1j * np.outer(modes.alpha_n, x)) / n_samples


def trace_coefficients(modes: ModeSet, samples) -> TraceCoefficients:
    """Fourier coefficients of a quasi-periodic trace sampled on the uniform grid."""
    samples = np.asarray(samples)
    return TraceCoefficients(fourier_matrix(modes, len(samples)) @ samples, modes.alpha_n)


def rayleigh_coefficients(
    modes: ModeSet, trace, scalars: DerivedScalars, h1: float
) -> TraceCoefficients:
    """Modal coefficients ``u_n^d(h1)`` of the diffracted field on ``Gamma_0``.

    Args:
        trace: total field sampled at ``x_j = j*period/M``, ``j = 0..M-1``.
    """
    trace = np.asarray(trace)
    m = len(trace)
    if m < 4 * modes.truncation + 4:
        raise InsufficientSampling(
            f"{m} samples cannot resolve {len(modes)} modes (need >= {4 * modes.truncation + 4})"
        )
    x = np.arange(m) * (modes.period / m)
    return trace_coefficients(modes, trace - incident_field(scalars, x, h1))


def efficiencies(modes: ModeSet, rayleigh: TraceCoefficients, scalars: DerivedScalars) -> dict[int, float]:
    """``e_n = (beta_n / beta) |u_n^d(h1)|^2`` for propagating modes only."""
    _check_same(rayleigh, TraceCoefficients(np.zeros(len(modes)), modes.alpha_n))
    out = {}
    for n, b, c, prop in zip(modes.n, modes.beta_n, rayleigh.coeffs, modes.propagating):
        if prop:
            out[int(n)] = float(b.real / scalars.beta * abs(c) ** 2)
    return out


def write_efficiency_csv(path, modes: ModeSet, rayleigh: TraceCoefficients, scalars: DerivedScalars):
    eff = efficiencies(modes, rayleigh, scalars)
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "alpha_n", "beta_n_re", "beta_n_im", "coeff_re", "coeff_im", "efficiency"])
        for n, a, b, c in zip(modes.n, modes.alpha_n, modes.beta_n, rayleigh.coeffs):
            e = eff.get(int(n))
            w.writerow([
                int(n), repr(float(a)), repr(float(b.real)), repr(float(b.imag)),
                repr(float(c.real)), repr(float(c.imag)), "" if e is None else repr(e),
            ])
