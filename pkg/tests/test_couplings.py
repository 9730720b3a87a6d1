import numpy as np
import pytest

from isingtree.couplings import (
    CouplingAssignment,
    CouplingError,
    interpolated,
    uniform,
)
from isingtree.topology import build_tree


def test_uniform_everywhere():
    t = build_tree(3, 2)
    c = uniform(0.4)
    for u, v in t.edges():
        assert c.beta_of(t, u, v) == 0.4


def test_interpolated_splits_at_last_level():
    t = build_tree(3, 2)
    c = interpolated(0.4, 0.1)
    es = t.boundary_edges()
    for u, v in es.interior:
        assert c.beta_of(t, u, v) == 0.4
    for u, v in es.boundary:
        assert c.beta_of(t, u, v) == 0.1
        assert c.beta_of(t, v, u) == 0.1  # orientation-free


def test_override_wins():
    t = build_tree(3, 2)
    c = CouplingAssignment(interior=0.4, overrides={((), (0,)): 0.9})
    assert c.beta_of(t, (), (0,)) == 0.9
    assert c.beta_of(t, (0,), ()) == 0.9
    assert c.beta_of(t, (), (1,)) == 0.4


def test_beta_up_layout():
    t = build_tree(3, 2)
    c = interpolated(0.4, 0.1)
    bu = c.beta_up(t)
    assert bu[0] == 0.0
    assert np.all(bu[t.levels[1]] == 0.4)
    assert np.all(bu[t.levels[2]] == 0.1)


def test_validation():
    with pytest.raises(CouplingError):
        uniform(-0.1)
    with pytest.raises(CouplingError):
        interpolated(0.4, 0.5)
    with pytest.raises(CouplingError):
        interpolated(0.4, -0.1)
    with pytest.raises(CouplingError):
        CouplingAssignment(interior=0.1, overrides={((), (0,)): -1.0})
