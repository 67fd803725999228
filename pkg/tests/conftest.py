import numpy as np
import pytest

from abplab.geometry import euclidean, gaussian_plane, hyperbolic, sphere
from abplab.report import seeded_rng

ALL_MODELS = [euclidean(), sphere(1.0), hyperbolic(1.0), gaussian_plane(1.0)]


@pytest.fixture(params=ALL_MODELS, ids=[m.kind for m in ALL_MODELS])
def model(request):
    return request.param


@pytest.fixture
def rng():
    return seeded_rng(20260811, "tests")


def random_tangent(m, p, L, gen):
    e1, e2 = m.tangent_frame(p)
    th = gen.uniform(0.0, 2.0 * np.pi)
    return L * (np.cos(th) * e1 + np.sin(th) * e2)


def random_point(m, gen, spread):
    return m.exp(m.origin(), random_tangent(m, m.origin(), spread * np.sqrt(gen.uniform()), gen))
