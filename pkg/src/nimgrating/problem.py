"""Problem definition: grating profile, material parameters, derived scalars.

A configuration describes one period of the structure

* ``Omega_1``: conventional dielectric (eps1 > 0, mu1 > 0) between the
  grating profile ``S`` and the artificial boundary ``Gamma_0`` at ``x2 = h1``;
* ``Omega_2``: negative-index medium (eps2 < 0, mu2 < 0) between the PEC
  plane ``Gamma`` at ``x2 = 0`` and ``S``.

Configurations are immutable. Validation returns violations as data.
"""

from __future__ import annotations

import configparser
import dataclasses
import enum
import logging
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import InvalidConfig

logger = logging.getLogger(__name__)

CRITICAL_CONTRAST_BAND = 1e-6
_DOMAIN_TOL = 1e-12


class Region(enum.IntEnum):
    OMEGA1 = 1
    OMEGA2 = 2


@dataclasses.dataclass(frozen=True)
class GratingProfile:
    """Truncated trigonometric series

    ``f(x1) = mean + sum_m a_m cos(2 pi m x1 / period) + b_m sin(2 pi m x1 / period)``

    with ``m = 1, 2, ...``. Finite series keep ``f``, ``f'`` and ``f''`` exact.
    """

    mean: float
    cosine_coeffs: tuple[float, ...] = ()
    sine_coeffs: tuple[float, ...] = ()
    period: float = 2 * math.pi

    def __post_init__(self):
        object.__setattr__(self, "cosine_coeffs", tuple(float(a) for a in self.cosine_coeffs))
        object.__setattr__(self, "sine_coeffs", tuple(float(b) for b in self.sine_coeffs))

    @classmethod
    def flat(cls, height: float, period: float) -> "GratingProfile":
        return cls(mean=height, period=period)

    @property
    def is_flat(self) -> bool:
        return all(a == 0.0 for a in self.cosine_coeffs) and all(
            b == 0.0 for b in self.sine_coeffs
        )

    def _terms(self):
        k = 2 * math.pi / self.period
        n = max(len(self.cosine_coeffs), len(self.sine_coeffs))
        a = np.zeros(n)
        b = np.zeros(n)
        a[: len(self.cosine_coeffs)] = self.cosine_coeffs
        b[: len(self.sine_coeffs)] = self.sine_coeffs
        return k * np.arange(1, n + 1), a, b

    def evaluate(self, x1, derivative: int = 0):
        """Evaluate ``f`` (or its first or second derivative) at ``x1``."""
        x1 = np.asarray(x1, dtype=float)
        km, a, b = self._terms()
        phase = np.multiply.outer(x1, km)
        c, s = np.cos(phase), np.sin(phase)
        if derivative == 0:
            return self.mean + c @ a + s @ b
        if derivative == 1:
            return s @ (-a * km) + c @ (b * km)
        if derivative == 2:
            return -(c @ (a * km**2) + s @ (b * km**2))
        raise ValueError("derivative must be 0, 1 or 2")

    def __call__(self, x1):
        return self.evaluate(x1)

    def derivative(self, x1):
        return self.evaluate(x1, 1)

    def second_derivative(self, x1):
        return self.evaluate(x1, 2)

    def _sample(self):
        n_terms = max(len(self.cosine_coeffs), len(self.sine_coeffs))
        x = np.linspace(0.0, self.period, 2048 * (n_terms + 1), endpoint=False)
        return self.evaluate(x)

    def minimum(self) -> float:
        return float(np.min(self._sample()))

    def maximum(self) -> float:
        return float(np.max(self._sample()))


@dataclasses.dataclass(frozen=True)
class ProblemConfig:
    """All physical and geometric parameters of one run.

    ``relax_signs`` disables the sign checks on eps2 and mu2. It exists for the
    homogeneous total-reflection sanity tests only.
    """

    profile: GratingProfile
    h1: float
    eps1: float
    mu1: float
    eps2: float
    mu2: float
    omega: float
    theta: float
    sigma: float = 0.0
    relax_signs: bool = False

    @property
    def period(self) -> float:
        return self.profile.period

    def replace(self, **changes) -> "ProblemConfig":
        return dataclasses.replace(self, **changes)


@dataclasses.dataclass(frozen=True)
class DerivedScalars:
    kappa1: float
    kappa2sq: float
    alpha: float
    beta: float


def validate(config: ProblemConfig) -> list[str]:
    """Return every violated invariant of ``config`` (empty list: valid)."""
    out = []
    c = config
    if not c.period > 0:
        out.append(f"period must be positive, got {c.period}")
    if not c.eps1 > 0:
        out.append(f"eps1 must be positive, got {c.eps1}")
    if not c.mu1 > 0:
        out.append(f"mu1 must be positive, got {c.mu1}")
    if not c.relax_signs:
        if not c.eps2 < 0:
            out.append(f"eps2 must be negative, got {c.eps2}")
        if not c.mu2 < 0:
            out.append(f"mu2 must be negative, got {c.mu2}")
    if c.eps2 != 0 and abs(c.eps1 / c.eps2 + 1.0) < CRITICAL_CONTRAST_BAND:
        out.append(
            f"critical contrast eps1/eps2 = -1 (eps1/eps2 = {c.eps1 / c.eps2:.9g})"
        )
    if c.eps2 == 0:
        out.append("eps2 must be nonzero")
    if not c.omega > 0:
        out.append(f"omega must be positive, got {c.omega}")
    if not -math.pi / 2 < c.theta < math.pi / 2:
        out.append(f"theta must lie in (-pi/2, pi/2), got {c.theta}")
    if not c.sigma >= 0:
        out.append(f"sigma must be nonnegative, got {c.sigma}")
    if c.period > 0:
        fmin, fmax = c.profile.minimum(), c.profile.maximum()
        if not fmin > 0:
            out.append(f"grating profile must stay above Gamma (min f = {fmin:.6g})")
        if not c.h1 > fmax:
            out.append(f"h1 below grating (h1 = {c.h1:.6g}, max f = {fmax:.6g})")
    return out


def check(config: ProblemConfig) -> None:
    """Raise :class:`InvalidConfig` unless ``config`` is valid."""
    violations = validate(config)
    if violations:
        raise InvalidConfig(violations)
    if config.profile.is_flat:
        logger.info("flat grating profile: covered by the flat-interface case")


def derive_scalars(config: ProblemConfig) -> DerivedScalars:
    check(config)
    kappa1 = config.omega * math.sqrt(config.eps1 * config.mu1)
    return DerivedScalars(
        kappa1=kappa1,
        kappa2sq=config.omega**2 * config.eps2 * config.mu2,
        alpha=kappa1 * math.sin(config.theta),
        beta=kappa1 * math.cos(config.theta),
    )


def permittivity_at(config: ProblemConfig, region: Region) -> complex:
    """Modified permittivity: eps1 in Omega_1, eps2 + i sigma / omega in Omega_2."""
    if Region(region) is Region.OMEGA1:
        return complex(config.eps1)
    return complex(config.eps2, config.sigma / config.omega)


def permeability_at(config: ProblemConfig, region: Region) -> float:
    return config.mu1 if Region(region) is Region.OMEGA1 else config.mu2


def incident_field(scalars: DerivedScalars, x1, x2):
    """Plane wave exp(i(alpha x1 - beta x2))."""
    return np.exp(1j * (scalars.alpha * np.asarray(x1) - scalars.beta * np.asarray(x2)))


# --- reference configurations -------------------------------------------------

def reference_config(sigma: float = 0.0) -> ProblemConfig:
    """Shipped non-flat reference: f = 1 + 0.2 cos(x1) on a 2 pi period.

    The incidence angle pi/6 keeps every alpha_n away from kappa_1.
    """
    return ProblemConfig(
        profile=GratingProfile(mean=1.0, cosine_coeffs=(0.2,), period=2 * math.pi),
        h1=2.0, eps1=1.0, mu1=1.0, eps2=-2.0, mu2=-1.0,
        omega=1.0, theta=math.pi / 6, sigma=sigma,
    )


def reference_flat_config(sigma: float = 0.0) -> ProblemConfig:
    """Flat interface at height 1 under normal incidence."""
    return ProblemConfig(
        profile=GratingProfile.flat(1.0, 2 * math.pi),
        h1=2.0, eps1=1.0, mu1=1.0, eps2=-2.0, mu2=-1.0,
        omega=1.0, theta=0.0, sigma=sigma,
    )


# --- config files -------------------------------------------------------------

@dataclasses.dataclass(frozen=True)
class Numerics:
    """Discretization settings read from the ``[numerics]`` section."""

    nx: int | None = None
    ny1: int | None = None
    ny2: int | None = None
    modes: int | None = None


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(t) for t in text.replace(",", " ").split())


def _opt_int(section, key):
    if section is None or key not in section or not section[key].strip():
        return None
    return int(section[key])


def parse_config(text: str) -> tuple[ProblemConfig, Numerics]:
    """Parse the INI-style configuration format.

    Sections ``[grating]`` (period, mean, cos, sin, h1), ``[materials]``
    (eps1, mu1, eps2, mu2, sigma), ``[incidence]`` (omega, theta in radians)
    and the optional ``[numerics]`` (nx, ny1, ny2, modes).
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidConfig([f"unreadable configuration: {exc}"]) from None
    try:
        g = parser["grating"]
        m = parser["materials"]
        inc = parser["incidence"]
    except KeyError as exc:
        raise InvalidConfig([f"missing section {exc.args[0]}"]) from None
    num = parser["numerics"] if parser.has_section("numerics") else None
    try:
        profile = GratingProfile(
            mean=float(g["mean"]),
            cosine_coeffs=_floats(g.get("cos", "")),
            sine_coeffs=_floats(g.get("sin", "")),
            period=float(g["period"]),
        )
        config = ProblemConfig(
            profile=profile,
            h1=float(g["h1"]),
            eps1=float(m["eps1"]),
            mu1=float(m["mu1"]),
            eps2=float(m["eps2"]),
            mu2=float(m["mu2"]),
            sigma=float(m.get("sigma", "0")),
            omega=float(inc["omega"]),
            theta=float(inc.get("theta", "0")),
        )
        numerics = Numerics(
            nx=_opt_int(num, "nx"), ny1=_opt_int(num, "ny1"),
            ny2=_opt_int(num, "ny2"), modes=_opt_int(num, "modes"),
        )
    except KeyError as exc:
        raise InvalidConfig([f"missing key {exc.args[0]}"]) from None
    except ValueError as exc:
        raise InvalidConfig([f"malformed value: {exc}"]) from None
    return config, numerics


def load_config(path: str | Path) -> tuple[ProblemConfig, Numerics]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(config: ProblemConfig, numerics: Numerics | None = None) -> str:
    def join(values: Sequence[float]) -> str:
        return ", ".join(repr(v) for v in values)

    p = config.profile
    lines = [
        "[grating]",
        f"period = {p.period!r}",
        f"mean = {p.mean!r}",
        f"cos = {join(p.cosine_coeffs)}",
        f"sin = {join(p.sine_coeffs)}",
        f"h1 = {config.h1!r}",
        "",
        "[materials]",
        f"eps1 = {config.eps1!r}",
        f"mu1 = {config.mu1!r}",
        f"eps2 = {config.eps2!r}",
        f"mu2 = {config.mu2!r}",
        f"sigma = {config.sigma!r}",
        "",
        "[incidence]",
        f"omega = {config.omega!r}",
        f"theta = {config.theta!r}",
    ]
    if numerics is not None:
        lines += ["", "[numerics]"]
        for key in ("nx", "ny1", "ny2", "modes"):
            value = getattr(numerics, key)
            if value is not None:
                lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
