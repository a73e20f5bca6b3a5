"""Shared builders for the test suite."""

import numpy as np
import pytest

from rwre_boundary.environment import DisorderSpec, EtaLaw, JumpLaw
from rwre_boundary.geometry import BoundaryPoint, Face


@pytest.fixture
def face4():
    return Face.positive(4)


@pytest.fixture
def alpha4():
    return JumpLaw.uniform(4)


@pytest.fixture
def eta4(alpha4):
    return EtaLaw.two_point(alpha4)


@pytest.fixture
def spec4(alpha4, eta4):
    return DisorderSpec(alpha4, eta4, 0.3)


@pytest.fixture
def x_skew(face4):
    return BoundaryPoint(face4, (0.4, 0.3, 0.2, 0.1))


def make_spec(d=4, eps=0.3, alpha=None, pattern=None):
    alpha = alpha or JumpLaw.uniform(d)
    return DisorderSpec(alpha, EtaLaw.two_point(alpha, pattern=pattern), eps)


def nonuniform_alpha(d=4):
    """A strictly elliptic, non-symmetric kernel for tests that must not
    rely on symmetry cancellations."""
    w = np.arange(1.0, 2 * d + 1.0)
    w = 0.5 * w / w.sum() + 0.5 / (2 * d)
    return JumpLaw(tuple(w / w.sum()))


def random_offfacet_point(face, rng, floor=0.02):
    d = face.d
    delta = rng.dirichlet(np.ones(d))
    delta = (1 - d * floor) * delta + floor
    return BoundaryPoint(face, tuple(delta / delta.sum()))
