import numpy as np
import pytest

from nimgrating import dtn, oracle, solver
from nimgrating.assembly import assemble
from nimgrating.exceptions import InvalidConfig
from nimgrating.mesh import build_mesh, refine
from nimgrating.problem import derive_scalars

from conftest import make_config


def flat_solution(cfg, N):
    return oracle.solve_flat(cfg, dtn.build_mode_set(derive_scalars(cfg), cfg.period, N))


OBLIQUE = make_config(theta=0.3, sigma=0.2)


def test_homogeneous_total_reflection():
    cfg = make_config(eps2=1.0, mu2=1.0, relax_signs=True)
    sol = flat_solution(cfg, 0)
    assert abs(sol.reflection.coeffs[0]) == pytest.approx(1.0)
    x2 = np.linspace(0, 2, 9)
    pts = np.stack([np.full_like(x2, 0.7), x2], axis=-1)
    u = oracle.evaluate_field(sol, pts)
    ratio = u / (2 * np.cos(x2))
    assert np.allclose(ratio, ratio[0])
    assert abs(ratio[0]) == pytest.approx(1.0)


def test_reference_flat_reflection_unimodular(flat_config):
    assert abs(flat_solution(flat_config, 0).reflection.coeffs[0]) == pytest.approx(1.0)


def test_absorption_reduces_reflection(flat_config):
    r = flat_solution(flat_config.replace(sigma=5.0), 0).reflection.coeffs[0]
    assert abs(r) < 1


def test_interface_continuity():
    sol = flat_solution(OBLIQUE, 3)
    x1 = np.linspace(0, OBLIQUE.period, 7)
    pts = np.stack([x1, np.full_like(x1, sol.h2)], axis=-1)
    below = np.sum([sol.A * np.cos(sol.gamma_n * sol.h2) * np.exp(1j * sol.modes.alpha_n * x)
                    for x in x1], axis=1)
    assert np.allclose(oracle.evaluate_field(sol, pts), below, atol=1e-12)
    d_lo = oracle.evaluate_dx2(sol, pts, "lower") / complex(OBLIQUE.eps2, OBLIQUE.sigma / OBLIQUE.omega)
    d_hi = oracle.evaluate_dx2(sol, pts, "upper") / OBLIQUE.eps1
    assert np.allclose(d_lo, d_hi, atol=1e-12)


def test_neumann_on_gamma():
    sol = flat_solution(OBLIQUE, 3)
    x1 = np.linspace(0, OBLIQUE.period, 5)
    h = 1e-6
    u0 = oracle.evaluate_field(sol, np.stack([x1, np.zeros(5)], -1))
    uh = oracle.evaluate_field(sol, np.stack([x1, np.full(5, h)], -1))
    u2h = oracle.evaluate_field(sol, np.stack([x1, np.full(5, 2 * h)], -1))
    assert np.max(np.abs((-3 * u0 + 4 * uh - u2h) / (2 * h))) <= 1e-6


def test_quasi_periodicity():
    sol = flat_solution(OBLIQUE, 3)
    x2 = np.linspace(0, 2, 6)
    a = oracle.evaluate_field(sol, np.stack([np.zeros(6), x2], -1))
    b = oracle.evaluate_field(sol, np.stack([np.full(6, OBLIQUE.period), x2], -1))
    assert np.allclose(b, np.exp(1j * derive_scalars(OBLIQUE).alpha * OBLIQUE.period) * a, atol=1e-12)


def test_helmholtz_residual():
    cfg = OBLIQUE
    sol = flat_solution(cfg, 2)
    h = 1e-3
    for (x1, x2, eps, k2) in ((1.0, 0.5, complex(cfg.eps2, cfg.sigma / cfg.omega), cfg.mu2), (2.0, 1.6, cfg.eps1, cfg.mu1)):
        def u(a, b):
            return oracle.evaluate_field(sol, np.array([a, b]))
        lap = (u(x1 + h, x2) + u(x1 - h, x2) + u(x1, x2 + h) + u(x1, x2 - h) - 4 * u(x1, x2)) / h**2
        sig = cfg.sigma if x2 < sol.h2 else 0.0
        res = lap / eps + (cfg.omega**2 * k2 + 1j * sig) * u(x1, x2)
        assert abs(res) <= 1e-5 * max(1.0, abs(u(x1, x2)))


def test_dtn_condition_on_gamma0():
    cfg = OBLIQUE
    sol = flat_solution(cfg, 3)
    m, s = sol.modes, derive_scalars(cfg)
    x = np.arange(32) * cfg.period / 32
    pts = np.stack([x, np.full_like(x, cfg.h1)], -1)
    du = dtn.trace_coefficients(m, oracle.evaluate_dx2(sol, pts, "upper"))
    u = dtn.trace_coefficients(m, oracle.evaluate_field(sol, pts))
    g = dtn.trace_coefficients(m, dtn.incident_datum(s, cfg.h1, x))
    assert np.allclose(du.coeffs, dtn.apply_dtn(m, u).coeffs + g.coeffs, atol=1e-10)


def test_rayleigh_from_oracle_trace():
    cfg = OBLIQUE
    sol = flat_solution(cfg, 3)
    x = np.arange(32) * cfg.period / 32
    trace = oracle.evaluate_field(sol, np.stack([x, np.full_like(x, cfg.h1)], -1))
    r = dtn.rayleigh_coefficients(sol.modes, trace, derive_scalars(cfg), cfg.h1)
    assert np.allclose(r.coeffs, sol.reflection.coeffs, atol=1e-8)


def test_point_outside_cell():
    sol = flat_solution(OBLIQUE, 1)
    with pytest.raises(ValueError):
        oracle.evaluate_field(sol, np.array([1.0, 2.5]))


def test_requires_flat_profile(ref_config):
    modes = dtn.build_mode_set(derive_scalars(ref_config), ref_config.period, 1)
    with pytest.raises(InvalidConfig):
        oracle.solve_flat(ref_config, modes)


def test_fem_convergence_oblique():
    cfg = OBLIQUE
    modes = dtn.build_mode_set(derive_scalars(cfg), cfg.period, 2)
    sol = oracle.solve_flat(cfg, modes)
    mesh = build_mesh(cfg, 16, 3, 3)
    errs = []
    for _ in range(3):
        field, _ = solver.solve(assemble(cfg, mesh, modes))
        errs.append(oracle.l2_error(field, sol))
        mesh = refine(mesh)
    assert np.all(np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 1.8)


def test_quadrature_rule_exact_degree_five():
    # integrate x^a y^b over the reference triangle
    from math import factorial

    for a, b in ((0, 0), (2, 3), (5, 0), (1, 4)):
        pts = oracle._Q7_BARY[:, 1:]
        approx = 0.5 * np.sum(oracle._Q7_W * pts[:, 0] ** a * pts[:, 1] ** b)
        exact = factorial(a) * factorial(b) / factorial(a + b + 2)
        assert approx == pytest.approx(exact, rel=1e-13)


def test_coefficients_csv(tmp_path):
    sol = flat_solution(OBLIQUE, 1)
    oracle.write_coefficients_csv(tmp_path / "c.csv", sol)
    assert len((tmp_path / "c.csv").read_text().splitlines()) == 4
