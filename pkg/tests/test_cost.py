import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sisrobust.cost import CostModel, cost


def test_examples():
    cm = CostModel.homogeneous(1, 0.1, 0.5)
    assert cost(cm, 0, 0.5) == 0.0
    assert cost(cm, 0, 0.1) == pytest.approx(1.0, abs=1e-15)
    assert cost(cm, 0, 0.25) == pytest.approx(0.25)
    with pytest.raises(ValueError):
        cost(cm, 0, 0.6)
    with pytest.raises(ValueError):
        cm(0, 0.05)


def test_validation():
    with pytest.raises(ValueError):
        CostModel([0.5], [0.5])
    with pytest.raises(ValueError):
        CostModel([0.1], [1.2])
    cm = CostModel.from_delta0([0.5, 0.3], 0.1)
    assert np.allclose(cm.upper, [0.5, 0.7])


@settings(max_examples=100, deadline=None)
@given(st.floats(0.01, 0.4), st.floats(0.45, 1.0), st.floats(0.0, 1.0))
def test_monotone_and_inverse(lo, hi, s):
    cm = CostModel.homogeneous(1, lo, hi)
    dc = cm.inverse(0, s)
    assert lo * (1 - 1e-12) <= dc <= hi * (1 + 1e-12)
    assert cost(cm, 0, dc) == pytest.approx(s, abs=1e-9)
    grid = np.linspace(lo, hi, 7)
    vals = [cost(cm, 0, x) for x in grid]
    assert all(a > b for a, b in zip(vals, vals[1:]))
    assert cm.total([dc], [0]) == pytest.approx(s, abs=1e-9)
