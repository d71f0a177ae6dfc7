import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nimgrating.exceptions import InvalidConfig
from nimgrating.problem import (
    GratingProfile,
    Numerics,
    Region,
    check,
    derive_scalars,
    format_config,
    incident_field,
    parse_config,
    permeability_at,
    permittivity_at,
    validate,
)

from conftest import make_config


def test_reference_flat_is_valid():
    assert validate(make_config()) == []


def test_critical_contrast_is_named():
    msgs = validate(make_config(eps2=-1.0))
    assert any("critical contrast" in m for m in msgs)


def test_critical_contrast_guard_band():
    assert validate(make_config(eps2=-1.0 - 1e-7))
    assert not validate(make_config(eps2=-1.0 - 1e-4))


def test_h1_below_grating():
    msgs = validate(make_config(h1=0.5))
    assert any("h1 below grating" in m for m in msgs)


def test_sign_violations_collected_together():
    msgs = validate(make_config(eps2=2.0, mu2=1.0, eps1=-1.0))
    assert len(msgs) == 3


def test_relax_signs_admits_homogeneous_stack():
    assert validate(make_config(eps2=1.0, mu2=1.0, relax_signs=True)) == []


def test_profile_must_stay_above_gamma():
    prof = GratingProfile(mean=0.5, cosine_coeffs=(0.6,), period=2 * math.pi)
    assert any("above Gamma" in m for m in validate(make_config(profile=prof)))


def test_check_raises_with_all_violations():
    with pytest.raises(InvalidConfig) as info:
        check(make_config(eps2=-1.0, h1=0.5))
    assert len(info.value.violations) == 2


def test_validate_is_pure():
    cfg = make_config(eps2=-1.0, h1=0.5)
    assert validate(cfg) == validate(cfg)


def test_derived_scalars_normal_incidence():
    s = derive_scalars(make_config())
    assert (s.kappa1, s.alpha, s.beta) == (1.0, 0.0, 1.0)


def test_derived_scalars_oblique():
    s = derive_scalars(make_config(eps1=2.0, mu1=2.0, theta=math.pi / 6, eps2=-3.0))
    assert s.kappa1 == pytest.approx(2.0)
    assert s.alpha == pytest.approx(1.0)
    assert s.beta == pytest.approx(math.sqrt(3))


def test_kappa2_squared():
    assert derive_scalars(make_config()).kappa2sq == pytest.approx(2.0)


@given(st.floats(-1.5, 1.5), st.floats(0.1, 5.0), st.floats(0.1, 4.0))
def test_alpha_beta_on_circle(theta, omega, eps1):
    s = derive_scalars(make_config(theta=theta, omega=omega, eps1=eps1, eps2=-eps1 - 1.0))
    assert s.alpha**2 + s.beta**2 == pytest.approx(s.kappa1**2, rel=1e-12)
    assert s.beta > 0


def test_permittivity_cases():
    assert permittivity_at(make_config(), Region.OMEGA2) == -2
    assert permittivity_at(make_config(sigma=1.0, omega=2.0), Region.OMEGA2) == complex(-2, 0.5)
    for sigma in (0.0, 3.0):
        assert permittivity_at(make_config(sigma=sigma), Region.OMEGA1) == 1.0
    assert permeability_at(make_config(), Region.OMEGA2) == -1.0


@given(st.one_of(st.just(0.0), st.floats(1e-8, 10.0)), st.floats(0.1, 10.0))
def test_loss_sign(sigma, omega):
    eps = permittivity_at(make_config(sigma=sigma, omega=omega), Region.OMEGA2)
    assert eps.imag >= 0
    assert (eps.imag == 0) == (sigma == 0)


def test_incident_field_unimodular():
    s = derive_scalars(make_config(theta=0.3))
    x = np.linspace(0, 6, 7)
    assert np.allclose(np.abs(incident_field(s, x, 1.3)), 1.0)


profiles = st.builds(
    GratingProfile,
    mean=st.floats(1.0, 2.0),
    cosine_coeffs=st.lists(st.floats(-0.2, 0.2), max_size=3).map(tuple),
    sine_coeffs=st.lists(st.floats(-0.2, 0.2), max_size=3).map(tuple),
    period=st.floats(0.5, 10.0),
)


@settings(max_examples=50)
@given(profiles, st.floats(-5, 5))
def test_profile_periodic(prof, x):
    for d in (0, 1, 2):
        assert prof.evaluate(x + prof.period, d) == pytest.approx(prof.evaluate(x, d), abs=1e-9)


@settings(max_examples=30)
@given(profiles, st.floats(0, 1))
def test_profile_derivatives_match_finite_differences(prof, t):
    x = t * prof.period
    k = 2 * math.pi * 3 / prof.period  # highest wavenumber
    h = 1e-4 / k
    fd1 = (prof(x + h) - prof(x - h)) / (2 * h)
    fd2 = (prof(x + h) - 2 * prof(x) + prof(x - h)) / h**2
    assert prof.derivative(x) == pytest.approx(fd1, abs=1e-6 * k)
    assert prof.second_derivative(x) == pytest.approx(fd2, abs=1e-4 * k**2)


def test_profile_extremes():
    prof = GratingProfile(mean=1.0, cosine_coeffs=(0.2,), period=2 * math.pi)
    assert prof.maximum() == pytest.approx(1.2)
    assert prof.minimum() == pytest.approx(0.8)
    assert not prof.is_flat and GratingProfile.flat(1.0, 1.0).is_flat


def test_config_round_trip():
    prof = GratingProfile(mean=1.1, cosine_coeffs=(0.2, 0.05), sine_coeffs=(0.01,), period=3.0)
    cfg = make_config(profile=prof, theta=0.25, sigma=0.5)
    num = Numerics(nx=16, ny1=3, ny2=4, modes=2)
    assert parse_config(format_config(cfg, num)) == (cfg, num)


def test_config_missing_section():
    with pytest.raises(InvalidConfig, match="materials"):
        parse_config("[grating]\nperiod=1\nmean=1\nh1=2\n[incidence]\nomega=1\n")


@pytest.mark.parametrize("text", ["no header", "[grating]\nperiod = abc\n[materials]\n[incidence]\n"])
def test_config_malformed(text):
    with pytest.raises(InvalidConfig):
        parse_config(text)


def test_shipped_configs_parse():
    from pathlib import Path

    root = Path(__file__).resolve().parent.parent / "configs"
    for name in ("reference.ini", "reference_flat.ini"):
        cfg, _ = parse_config((root / name).read_text())
        assert validate(cfg) == []
