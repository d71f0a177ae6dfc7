import math
import sys

import pytest

from nimgrating import assembly, solver
from nimgrating.problem import GratingProfile, ProblemConfig, reference_config, reference_flat_config


def make_config(**kw) -> ProblemConfig:
    """Flat-stack defaults on a 2*pi period, overridable per keyword."""
    profile = kw.pop("profile", GratingProfile.flat(1.0, 2 * math.pi))
    base = dict(h1=2.0, eps1=1.0, mu1=1.0, eps2=-2.0, mu2=-1.0, omega=1.0, theta=0.0, sigma=0.0)
    base.update(kw)
    return ProblemConfig(profile=profile, **base)


@pytest.fixture(scope="session")
def ref_config():
    return reference_config()


@pytest.fixture(scope="session")
def flat_config():
    return reference_flat_config()


@pytest.fixture(scope="session")
def ref_system(ref_config):
    mesh, modes = solver.prepare(ref_config)
    return assembly.assemble(ref_config, mesh, modes)


@pytest.fixture(scope="session")
def ref_solution(ref_system):
    return solver.solve(ref_system)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
