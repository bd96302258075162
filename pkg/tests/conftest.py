import numpy as np
import pytest

from anisphere.mesh import build_icosphere
from anisphere.norms import norm_from_spec


def pytest_addoption(parser):
    parser.addoption(
        "--subdiv", type=int, default=5,
        help="icosphere subdivision level for the main test mesh",
    )


@pytest.fixture(scope="session")
def subdiv(request):
    return request.config.getoption("--subdiv")


@pytest.fixture(scope="session")
def mesh_cache():
    cache = {}

    def get(level):
        if level not in cache:
            cache[level] = build_icosphere(level)
        return cache[level]

    return get


@pytest.fixture(scope="session")
def mesh(mesh_cache, subdiv):
    return mesh_cache(subdiv)


@pytest.fixture(scope="session")
def mesh4(mesh_cache):
    return mesh_cache(4)


@pytest.fixture(scope="session")
def mesh3(mesh_cache):
    return mesh_cache(3)


@pytest.fixture(scope="session")
def norm_cache(mesh_cache):
    cache = {}

    def get(level, kind="isotropic", **kw):
        key = (level, kind, tuple(sorted(kw.items())))
        if key not in cache:
            spec = {"kind": kind, **kw}
            cache[key] = norm_from_spec(spec, mesh_cache(level))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def iso(norm_cache, subdiv):
    return norm_cache(subdiv, "isotropic")


@pytest.fixture(scope="session")
def ani(norm_cache, subdiv):
    return norm_cache(subdiv, "axisymmetric", a=0.3)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
