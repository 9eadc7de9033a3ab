import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dual_lp_oracle, primal_lp_oracle, random_network
from sisrobust.epidemic import ObservationSet, observe, simulate
from sisrobust.network import ContactNetwork
from sisrobust.uncertainty import (
    DataConstraint,
    EmptyUncertaintySetError,
    InconsistentDataError,
    UncertaintyModel,
    assemble,
    build_data_constraints,
    build_model,
    build_prior,
    contains,
    row_dual,
    row_sup,
    sample_matrices,
)

NET2 = ContactNetwork(2, [1, 0], [0, 1], [0.2, 0.2])
RHS2 = 1 - np.sqrt(0.9)


def two_node_obs(sensors=(0, 1)):
    values = np.array([[0.5, 0.5], [0.3, 0.3]])[:, list(sensors)]
    return ObservationSet(2, tuple(sensors), values, np.full(len(sensors), 0.5))


def test_prior_examples():
    net = ContactNetwork(2, [1], [0], [0.2])
    p = build_prior(net, 1, 1)
    assert p.lower[0] == p.upper[0] == 0.2
    p = build_prior(net, 0.5, 1.5)
    assert p.lower[0] == pytest.approx(0.1) and p.upper[0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        build_prior(ContactNetwork(2, [1], [0], [0.7]), 0.5, 1.5)
    with pytest.raises(ValueError):
        build_prior(net, 1.2, 1.5)


def test_data_constraint_examples():
    cons = build_data_constraints(two_node_obs())
    c = [d for d in cons if d.row == 0][0]
    assert c.rhs == pytest.approx(RHS2, abs=1e-15)
    assert c.rhs == pytest.approx(0.051317, abs=1e-6)
    assert np.allclose(c.coeffs, [0.25, 0.25])
    assert 0.25 * 0.2 <= c.rhs
    single = build_data_constraints(two_node_obs((0,)))
    assert np.allclose(single[0].coeffs, [0.25, 0.0])
    zeros = ObservationSet(2, (0, 1), np.zeros((3, 2)), np.full(2, 0.5))
    assert build_data_constraints(zeros) == []


def test_inconsistent_ratio():
    obs = ObservationSet(2, (0,), np.array([[0.5], [0.1]]), np.array([0.5]))
    with pytest.raises(InconsistentDataError):
        build_data_constraints(obs)


def test_two_node_model():
    model = build_model(NET2, two_node_obs(), 0.5, 1.5)
    row = model.rows[0]
    assert row_sup(model, 0, [1.0]) == pytest.approx(RHS2 / 0.25, abs=1e-12)
    assert row_sup(model, 0, [1.0]) == pytest.approx(0.205269, abs=5e-6)
    assert row_sup(model, 0, [0.0]) == 0.0
    assert row_dual(model, 0, [1.0]) == pytest.approx(RHS2 / 0.25, abs=1e-12)
    B = NET2.rate_matrix()
    assert contains(model, B)
    assert not contains(model, 1.5 * B)
    off = B.copy()
    off[0, 0] = 0.1
    assert not contains(model, off)
    box = build_model(NET2, None, 0.5, 1.5)
    assert row_sup(box, 0, [2.0]) == pytest.approx(0.6)
    assert row.num_data == 1


def test_contradictory_data():
    prior = build_prior(ContactNetwork(2, [1, 0], [0, 1], [0.2, 0.2]), 0.5, 1.5)
    bad = DataConstraint(0, np.array([0.0, 0.25]), 0.01)
    with pytest.raises(EmptyUncertaintySetError):
        assemble(prior, [bad])


def test_json_round_trip():
    rng = np.random.default_rng(5)
    net = random_network(rng, 5)
    traj = simulate(net, net.rate_matrix(), np.full(5, 0.5), np.full(5, 0.5), 6)
    model = build_model(net, observe(traj, [0, 1, 3]), 0.5, 1.5)
    back = UncertaintyModel.from_json(model.to_json())
    for a, b in zip(model.rows, back.rows):
        assert a.edges == b.edges
        assert np.array_equal(a.F, b.F) and np.array_equal(a.g, b.g)
    assert back.provenance["sensors"] == [1, 2, 4]


@st.composite
def scenarios(draw):
    rng = np.random.default_rng(draw(st.integers(0, 2**31)))
    n = draw(st.integers(2, 8))
    net = random_network(rng, n)
    delta0 = rng.uniform(0.2, 0.8, n)
    traj = simulate(net, net.rate_matrix(), delta0, rng.uniform(0.1, 0.9, n), 12)
    return net, traj, rng


@settings(max_examples=25, deadline=None)
@given(scenarios())
def test_superset_and_shrinkage(case):
    net, traj, rng = case
    n = net.n
    full = observe(traj, range(n))
    weights = [rng.uniform(0, 2, len(net.in_edges(i))) for i in range(n)]
    prev = None
    for T in (1, 4, 8, 12):
        model = build_model(net, full.prefix(T), 0.5, 1.5)
        assert contains(model, net.rate_matrix())
        sups = np.array([row_sup(model, i, weights[i]) for i in range(n)])
        if prev is not None:
            assert np.all(sups <= prev + 1e-9)
        prev = sups
    # more sensors: rows observed in both sets only tighten
    small = rng.choice(n, size=max(1, n // 2), replace=False)
    m_small = build_model(net, observe(traj, small), 0.5, 1.5)
    m_full = build_model(net, full, 0.5, 1.5)
    for i in small:
        assert row_sup(m_full, i, weights[i]) <= row_sup(m_small, i, weights[i]) + 1e-9


@settings(max_examples=25, deadline=None)
@given(scenarios())
def test_duality_and_sampling(case):
    net, traj, rng = case
    model = build_model(net, observe(traj, range(net.n)), 0.5, 1.5)
    for row in model.rows:
        m = rng.uniform(0, 3, row.dim)
        primal = row.sup(m)
        assert primal == pytest.approx(primal_lp_oracle(row.F, row.g, m), rel=1e-7, abs=1e-9)
        assert row.dual(m)[0] == pytest.approx(dual_lp_oracle(row.F, row.g, m), rel=1e-7, abs=1e-9)
    samples = sample_matrices(model, 5, seed=2, steps=10)
    assert all(contains(model, B) for B in samples)
    assert np.array_equal(samples, sample_matrices(model, 5, seed=2, steps=10))


def test_degenerate_box_sup():
    rng = np.random.default_rng(6)
    net = random_network(rng, 6)
    model = build_model(net, None, 1.0, 1.0)
    B = net.rate_matrix()
    for i, row in enumerate(model.rows):
        m = rng.uniform(0, 2, row.dim)
        assert row_sup(model, i, m) == pytest.approx(m @ model.row_vector(B, i), abs=1e-15)
    assert all(np.array_equal(S, B) for S in sample_matrices(model, 3))
