import math

import numpy as np
import pytest

from nimgrating.exceptions import MeshError
from nimgrating.mesh import (
    build_mesh,
    build_mesh_geometry,
    check_quality,
    default_resolution,
    export_csv,
    refine,
)
from nimgrating.problem import GratingProfile, Region

WAVY = GratingProfile(mean=1.0, cosine_coeffs=(0.2,), sine_coeffs=(0.05,), period=2 * math.pi)


def test_nine_node_example():
    m = build_mesh_geometry(GratingProfile.flat(1.0, 2.0), 2.0, 2, 1, 1)
    assert m.n_nodes == 9 and len(m.triangles) == 8
    assert len(m.boundary_edges["interface"]) == 2
    s1 = set(np.unique(m.triangles[m.regions == Region.OMEGA1]))
    s2 = set(np.unique(m.triangles[m.regions == Region.OMEGA2]))
    assert sorted(s1 & s2) == sorted(m.interface_nodes.tolist())
    assert len(s1 & s2) == 3


@pytest.mark.parametrize("profile", [GratingProfile.flat(1.0, 2.0), WAVY])
def test_mesh_invariants(profile):
    m = build_mesh_geometry(profile, 2.0, 12, 4, 3)
    nx, ny1, ny2 = m.resolution
    assert m.n_nodes == (nx + 1) * (ny1 + ny2 + 1)
    assert np.all(m.signed_areas() > 0)
    L, R = m.nodes[m.periodic_pairs[:, 0]], m.nodes[m.periodic_pairs[:, 1]]
    assert np.allclose(R[:, 1], L[:, 1], atol=1e-12)
    assert np.allclose(R[:, 0] - L[:, 0], profile.period, atol=1e-12)
    s = m.nodes[m.interface_nodes]
    assert np.allclose(s[:, 1], profile(s[:, 0]), atol=1e-12)
    # region tags partition: no Omega_2 triangle above S, no Omega_1 below
    cent = m.nodes[m.triangles].mean(axis=1)
    above = cent[:, 1] > profile(cent[:, 0])
    assert np.all(above == (m.regions == Region.OMEGA1))
    g0 = m.nodes[m.gamma0_nodes]
    assert np.allclose(np.diff(g0[:, 0]), profile.period / nx)
    assert np.allclose(g0[:, 1], 2.0)


def test_flat_area_sum():
    m = build_mesh_geometry(GratingProfile.flat(1.0, 2.0), 2.0, 8, 3, 2)
    assert m.signed_areas().sum() == pytest.approx(4.0, abs=1e-10)


def test_boundary_tags():
    m = build_mesh_geometry(WAVY, 2.0, 6, 2, 2)
    assert set(m.boundary_edges) == {"gamma", "gamma0", "interface", "side_left", "side_right"}
    assert len(m.boundary_edges["gamma0"]) == 6
    assert len(m.boundary_edges["side_left"]) == 4


def test_refinement():
    m = build_mesh_geometry(GratingProfile.flat(1.0, 2.0), 2.0, 2, 1, 1)
    r = refine(m)
    assert len(r.triangles) == 32
    assert {k: 2 * len(v) for k, v in m.boundary_edges.items()} == {k: len(v) for k, v in r.boundary_edges.items()}
    w = refine(build_mesh_geometry(WAVY, 2.0, 8, 2, 2))
    s = w.nodes[w.interface_nodes]
    assert np.allclose(s[:, 1], WAVY(s[:, 0]), atol=1e-12)


@pytest.mark.parametrize("args", [(1, 1, 1), (4, 0, 2), (4, 2, 0)])
def test_too_small(args):
    with pytest.raises(MeshError):
        build_mesh_geometry(WAVY, 2.0, *args)


def test_degenerate_geometry():
    with pytest.raises(MeshError):
        build_mesh_geometry(GratingProfile(mean=0.1, cosine_coeffs=(0.3,)), 2.0, 8, 2, 2)
    with pytest.raises(MeshError):
        build_mesh_geometry(WAVY, 1.1, 8, 2, 2)


def test_quality_gate():
    thin = build_mesh_geometry(GratingProfile.flat(1.0, 2 * math.pi), 2.0, 4, 2, 400)
    with pytest.raises(MeshError):
        check_quality(thin)
    check_quality(build_mesh_geometry(WAVY, 2.0, 16, 3, 3))


def test_default_resolution(ref_config):
    assert default_resolution(ref_config) == (32, 6, 6)
    m = build_mesh(ref_config, *default_resolution(ref_config))
    assert m.min_angle > 20


def test_export(tmp_path):
    m = build_mesh_geometry(WAVY, 2.0, 4, 1, 1)
    export_csv(m, tmp_path / "n.csv", tmp_path / "t.csv")
    assert len((tmp_path / "n.csv").read_text().splitlines()) == m.n_nodes + 1
    assert len((tmp_path / "t.csv").read_text().splitlines()) == len(m.triangles) + 1
