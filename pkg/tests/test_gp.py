import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from oracles import TIGHT, primal_lp_oracle, random_network
from sisrobust.allocate import robust_allocate
from sisrobust.cost import CostModel
from sisrobust.epidemic import ObservationSet
from sisrobust.gp import (
    LAMBDA,
    Monomial,
    Posynomial,
    ProgramBuilder,
    assemble_known_network,
    assemble_robust_allocation,
    dc_name,
    dualize_robust_row,
    log_transform,
    u_name,
)
from sisrobust.network import ContactNetwork
from sisrobust.solver import solve
from sisrobust.uncertainty import EmptyUncertaintySetError, build_model

NET2 = ContactNetwork(2, [1, 0], [0, 1], [0.2, 0.2])


def block_excess(block, values) -> float:
    """``min_nu (g @ nu + fixed(x)) - 1`` over multipliers meeting the block's other rows at ``values``."""
    names = list(block.nu_names)
    col = {nm: k for k, nm in enumerate(names)}
    A, b, c, const = [], [], np.zeros(len(names)), 0.0
    for posy, linear, rhs, label in block.constraints:
        row = np.zeros(len(names))
        for nm, v in linear.items():
            row[col[nm]] = v
        offset = posy(values) if posy is not None else 0.0
        if label.endswith("sup"):
            c, const = row, offset - rhs
        else:
            A.append(row)
            b.append(rhs - offset)
    if not names:
        return const
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=(None, None), method="highs", options=TIGHT)
    assert res.status == 0, res.message
    return float(res.fun) + const


def test_log_transform_examples():
    prog = log_transform(Monomial.var("x1"), [], [Monomial(1.0, {"x1": 1, "x2": 1})])
    assert prog.log_names == ("x1", "x2")
    assert np.array_equal(prog.eq_A, [[1.0, 1.0]]) and np.array_equal(prog.eq_b, [0.0])

    prog = log_transform(Monomial.var("x1"), [Monomial.var("x1") + Monomial.var("x2")])
    assert prog.exp_A.toarray().tolist() == [[1.0, 0.0], [0.0, 1.0]]
    assert np.array_equal(prog.exp_b, [0.0, 0.0])
    assert np.array_equal(prog.exp_owner, [0, 0]) and np.array_equal(prog.rhs, [1.0])
    y = np.log([0.3, 0.6])
    assert prog.constraint_values(y)[0] == pytest.approx(0.3 + 0.6 - 1.0)

    us = [f"u{i}" for i in range(4)]
    prog = log_transform(Monomial.var("u0"), [], [Monomial(1.0, {u: 1.0 for u in us})])
    assert np.array_equal(prog.eq_A, np.ones((1, 4))) and prog.eq_b[0] == 0.0

    prog = log_transform(Monomial(2.0, {"x": 1.0}), [Monomial(3.0, {"x": -1.0})])
    assert prog.objective_offset == pytest.approx(math.log(2.0))
    assert prog.exp_b[0] == pytest.approx(math.log(3.0))


def test_nonpositive_coefficient():
    with pytest.raises(ValueError):
        Monomial(0.0, {"x": 1})
    with pytest.raises(ValueError):
        Monomial(-1.0, {"x": 1})
    with pytest.raises(ValueError):
        Posynomial([])


def test_builder_rejects_bad_variables():
    bld = ProgramBuilder()
    bld.log_var("x")
    with pytest.raises(ValueError):
        bld.lin_var("x")
    with pytest.raises(KeyError):
        bld.add_inequality(Monomial.var("y"))
    bld.lin_var("nu")
    with pytest.raises(KeyError):
        bld.add_inequality(Monomial.var("nu"))


def test_dualize_degenerate_box():
    mono = [Monomial(1.0, {"u2": 1, "u1": -1, "lam": -1}), Monomial(1.0, {"u3": 1, "u1": -1, "lam": -1})]
    fixed = Monomial(1.0, {"d": 1, "lam": -1})
    F = np.vstack([-np.eye(2), np.eye(2)])
    g = np.array([0.2, 0.4, -0.2, -0.4])
    block = dualize_robust_row(F, g, mono, fixed)
    assert block.nu_names == () and len(block.free) == 0
    values = {"u1": 1.0, "u2": 2.0, "u3": 0.5, "lam": 1.5, "d": 0.3}
    nominal = (0.2 * 2.0 + 0.4 * 0.5 + 0.3) / 1.5
    assert block.fixed_term(values) == pytest.approx(nominal)
    (posy, lin, rhs, _), = block.constraints
    assert lin == {} and rhs == 1.0 and posy(values) == pytest.approx(nominal)


@pytest.mark.parametrize("u2,lam,d", [(1.0, 1.0, 0.5), (2.0, 1.0, 0.3), (1.0, 0.8, 0.5), (3.0, 1.3, 0.39)])
def test_dualize_single_edge(u2, lam, d):
    mono = [Monomial(1.0, {"u2": 1, "u1": -1, "lam": -1})]
    fixed = Monomial(1.0, {"d": 1, "lam": -1})
    block = dualize_robust_row([[-1.0], [1.0]], [0.3, -0.1], mono, fixed)
    values = {"u1": 1.0, "u2": u2, "lam": lam, "d": d}
    expected = 0.3 * u2 / lam + d / lam - 1.0
    assert block_excess(block, values) == pytest.approx(expected, abs=1e-9)


def test_dualize_two_node_data_row():
    obs = ObservationSet(2, (0, 1), np.array([[0.5, 0.5], [0.3, 0.3]]), np.full(2, 0.5))
    model = build_model(NET2, obs, 0.5, 1.5)
    row = model.rows[0]
    mono = [Monomial(1.0, {"u1": 1, "u0": -1, "lam": -1})]
    fixed = Monomial(1.0, {"d": 1, "lam": -1})
    block = dualize_robust_row(row.F, row.g, mono, fixed, "r0.", row.lower, row.upper)
    values = {"u0": 1.0, "u1": 1.0, "lam": 1.0, "d": 0.5}
    excess = block_excess(block, values)
    assert excess == pytest.approx(0.205269 + 0.5 - 1.0, abs=5e-6)
    assert excess == pytest.approx((1 - math.sqrt(0.9)) / 0.25 + 0.5 - 1.0, abs=1e-9)
    assert excess <= 0
    # tightening lambda until the sup binds
    values["lam"] = 0.7
    assert block_excess(block, values) > 0


def test_unbounded_or_empty_row():
    mono = [Monomial.var("a")]
    with pytest.raises(ValueError, match="unbounded"):
        dualize_robust_row([[1.0]], [-0.1], mono, Monomial.var("b"))
    with pytest.raises(EmptyUncertaintySetError):
        dualize_robust_row([[-1.0], [1.0]], [0.1, -0.2], mono, Monomial.var("b"))
    with pytest.raises(ValueError):
        dualize_robust_row([[-1.0, 0.0]], [0.1], mono, Monomial.var("b"))


def random_row(rng):
    k = int(rng.integers(1, 5))
    lo = rng.uniform(0.01, 0.2, k)
    hi = lo + rng.uniform(0, 0.3, k) * (rng.random(k) > 0.2)
    x0 = rng.uniform(lo, hi)
    nd = int(rng.integers(0, 5))
    A = rng.uniform(0, 1, (nd, k)) * (rng.random((nd, k)) > 0.3)
    rhs = A @ x0 + rng.uniform(0, 0.05, nd)
    F = np.vstack([-np.eye(k), np.eye(k), -A])
    g = np.concatenate([hi, -lo, rhs])
    return F, g, lo, hi


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.booleans())
def test_dualization_soundness(seed, prune):
    rng = np.random.default_rng(seed)
    F, g, lo, hi = random_row(rng)
    k = F.shape[1]
    names = [f"x{j}" for j in range(k)]
    mono = [Monomial(1.0, {nm: 1.0}) for nm in names]
    fixed = Monomial(1.0, {"f": 1.0})
    block = dualize_robust_row(F, g, mono, fixed, lower=lo, upper=hi, prune=prune)
    for _ in range(5):
        m = rng.uniform(0.01, 3.0, k)
        sup = primal_lp_oracle(F, g, m)
        values = dict(zip(names, m))
        # place the fixed term on both sides of the threshold
        for target in (1.0 - 1e-6, 1.0 + 1e-6):
            values["f"] = max(target - sup, 1e-9)
            feasible = block_excess(block, values) <= 1e-9
            assert feasible == (sup + values["f"] <= 1.0 + 1e-8)
        values["f"] = 0.25
        assert block_excess(block, values) == pytest.approx(sup + 0.25 - 1.0, abs=1e-8)


def test_strict_multipliers_are_strict():
    rng = np.random.default_rng(2)
    F, g, lo, hi = random_row(rng)
    k = F.shape[1]
    names = [f"x{j}" for j in range(k)]
    block = dualize_robust_row(F, g, [Monomial.var(nm) for nm in names], Monomial.var("f"), lower=lo, upper=hi)
    values = dict(zip(names, np.full(k, 0.1)))
    values["f"] = 0.2
    nu = block.strict_multipliers(values)
    assert nu is not None and np.all(nu > 0)
    col = dict(zip(block.nu_names, nu))
    for posy, lin, rhs, _ in block.constraints:
        lhs = (posy(values) if posy is not None else 0.0) + sum(v * col[nm] for nm, v in lin.items())
        assert lhs < rhs


def _values_from(sol, prog):
    return {nm: (math.exp(sol.z[k]) if k < len(prog.log_names) else sol.z[k]) for k, nm in enumerate(prog.names)}


def test_round_trip_known_network():
    rng = np.random.default_rng(11)
    for _ in range(5):
        n = int(rng.integers(2, 7))
        B = random_network(rng, n).rate_matrix()
        cost = CostModel.from_delta0(rng.uniform(0.3, 0.7, n), 0.1)
        prog = assemble_known_network(B, cost, 0.4 * n)
        sol = solve(prog)
        x = _values_from(sol, prog)
        lam = x[LAMBDA]
        for i in range(n):
            row = (B[i] @ np.array([x[u_name(j)] for j in range(n)]) / x[u_name(i)] + x[dc_name(i)]) / lam
            assert row <= 1.0 + 1e-7
        assert np.prod([x[u_name(i)] for i in range(n)]) == pytest.approx(1.0, abs=1e-7)
        spend = sum(cost(i, min(max(x[dc_name(i)], cost.lower[i]), cost.upper[i])) for i in range(n))
        assert spend <= 0.4 * n + 1e-7


def test_round_trip_robust_program():
    rng = np.random.default_rng(12)
    net = random_network(rng, 4)
    model = build_model(net, None, 0.5, 1.5)
    cost = CostModel.homogeneous(4, 0.1, 0.5)
    prog = assemble_robust_allocation(model, cost, 2.0)
    sol = solve(prog)
    assert sol.status == "optimal"
    z = sol.z
    assert prog.constraint_values(z).max() <= 1e-7
    # worst case over a box is the upper corner
    x = _values_from(sol, prog)
    Bu = model.upper_matrix()
    u = np.array([x[u_name(i)] for i in range(4)])
    rows = (Bu @ u / u + np.array([x[dc_name(i)] for i in range(4)])) / x[LAMBDA]
    assert rows.max() <= 1.0 + 1e-7


def test_scaling_invariance():
    rng = np.random.default_rng(13)
    net = random_network(rng, 5)
    B = net.rate_matrix()
    cost = CostModel.homogeneous(5, 0.1, 0.5)
    prog = assemble_known_network(B, cost, 2.5)
    sol = solve(prog)
    # shifting every log u by the same constant leaves every constraint value unchanged
    z = sol.z.copy()
    idx = [prog.index(u_name(i)) for i in range(5)]
    z[idx] += 0.7
    assert np.allclose(prog.constraint_values(z), prog.constraint_values(sol.z), atol=1e-12)
    # the normalization only fixes that shift, so solving with a different hint yields the same optimum
    lam = math.exp(sol.objective)
    model = build_model(net, None, 1.0, 1.0)
    assert robust_allocate(model, cost, 2.5).lambda_star == pytest.approx(lam, abs=1e-6)


def test_control_pins_other_nodes():
    rng = np.random.default_rng(14)
    net = random_network(rng, 4)
    model = build_model(net, None, 0.5, 1.5)
    cost = CostModel.homogeneous(4, 0.1, 0.5)
    prog = assemble_robust_allocation(model, cost, 1.0, control=[1, 3])
    pins = {tuple(np.flatnonzero(r)): b for r, b in zip(prog.eq_A, prog.eq_b)}
    for i in (0, 2):
        assert pins[(prog.index(dc_name(i)),)] == pytest.approx(math.log(0.5))
    assert (prog.index(dc_name(1)),) not in pins
    assert sum("budget" == lbl for lbl in prog.labels) == 1
    with pytest.raises(ValueError):
        assemble_robust_allocation(model, cost, -1.0)
    with pytest.raises(ValueError):
        assemble_robust_allocation(model, cost, 1.0, control=[7])


def test_budget_normalization():
    cost = CostModel(np.array([0.1, 0.2]), np.array([0.5, 0.4]))
    B = np.array([[0.0, 0.2], [0.3, 0.0]])
    prog = assemble_known_network(B, cost, 0.75)
    k = 1.0 / (1.0 / cost.lower - 1.0 / cost.upper)
    total = 0.75 + np.sum(k / cost.upper)
    # the budget posynomial is the last inequality
    budget_row = prog.num_constraints - 1
    terms = np.flatnonzero(prog.exp_owner == budget_row)
    assert np.allclose(np.sort(np.exp(prog.exp_b[terms])), np.sort(k / total))
    dc = np.array([0.2, 0.3])
    z = np.zeros(prog.num_vars)
    z[[prog.index(dc_name(0)), prog.index(dc_name(1))]] = np.log(dc)
    spend = np.sum((1 / dc - 1 / cost.upper) * k)
    value = prog.constraint_values(z)[budget_row]
    assert value == pytest.approx((spend - 0.75) / total, abs=1e-12)


def a_prog_constraints(model, cost):
    return assemble_robust_allocation(model, cost, 1.0).num_constraints


def test_json_dump_is_deterministic(tmp_path):
    rng = np.random.default_rng(15)
    net = random_network(rng, 3)
    model = build_model(net, None, 0.5, 1.5)
    cost = CostModel.homogeneous(3, 0.1, 0.5)
    a = assemble_robust_allocation(model, cost, 1.0).dump_json(tmp_path / "p.json")
    b = assemble_robust_allocation(model, cost, 1.0).dump_json()
    assert a == b
    d = json.loads((tmp_path / "p.json").read_text())
    assert d["objective"] == {LAMBDA: 1.0}
    assert len(d["affine"]) == a_prog_constraints(model, cost)
    assert set(d["log_variables"]) >= {dc_name(0), u_name(2), LAMBDA}
