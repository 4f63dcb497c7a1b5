import math
import random

import pytest

from emdarp.graph import expand_graph
from emdarp.model import build_model
from emdarp.scheduling import schedule_routes
from emdarp.search import (
    SearchConfig, branch_and_bound, exhaustive_oracle, request_order, _insertions,
)
from emdarp.solution import encode_plan

from conftest import make_instance


def _random_doc_over(rng, n_requests, n_agents, n_stations, dups):
    def pt():
        return [round(rng.uniform(0.0, 300.0), 1), round(rng.uniform(0.0, 300.0), 1)]

    requests = []
    for _ in range(n_requests):
        lo = round(rng.uniform(0.0, 20.0), 1)
        requests.append({
            "pickup": pt(), "delivery": pt(),
            "passengers": rng.randint(1, 2), "equipment": rng.randint(0, 1),
            "service_time": round(rng.uniform(0.5, 2.0), 1),
            "tw_kind": rng.choice(["pickup", "delivery"]),
            "tw_lo": lo, "tw_hi": lo + round(rng.uniform(20.0, 60.0), 1),
            "priority": rng.choice([1.0, 2.0, 5.0]),
        })
    agents = [{
        "start": pt(), "initial_delay": round(rng.uniform(0.0, 2.0), 1),
        "cap_passengers": 3, "cap_equipment": 2, "conversion": 1.0,
        "max_duration": 600.0, "station_service_time": 2.0,
        "soc_min": 0.25, "soc_init": 1.0, "soc_target": 0.85,
    } for _ in range(n_agents)]
    stations = [{"pos": pt(), "earliest_available": 0.0} for _ in range(n_stations)]
    return {"requests": requests, "agents": agents, "stations": stations,
            "depots": [pt()]}


def test_request_order_by_priority():
    over = {"requests": [
        {"pickup": [10.0, 0.0], "delivery": [10.0, 50.0], "passengers": 1,
         "service_time": 1.0, "tw_kind": "pickup", "tw_lo": 0.0, "tw_hi": 60.0,
         "priority": 1.0},
        {"pickup": [20.0, 0.0], "delivery": [20.0, 50.0], "passengers": 1,
         "service_time": 1.0, "tw_kind": "pickup", "tw_lo": 0.0, "tw_hi": 60.0,
         "priority": 5.0},
        {"pickup": [30.0, 0.0], "delivery": [30.0, 50.0], "passengers": 1,
         "service_time": 1.0, "tw_kind": "pickup", "tw_lo": 0.0, "tw_hi": 60.0,
         "priority": 5.0},
    ]}
    inst = make_instance(n_requests=3, over=over)
    assert request_order(inst) == [1, 2, 0]


def test_insertions_cover_all_position_pairs():
    chains = _insertions([10, 11], 1, 2)
    assert len(chains) == 6  # 3 pickup slots before each, triangular pairs
    assert [1, 2, 10, 11] in chains
    assert [10, 1, 11, 2] in chains
    for chain in chains:
        assert chain.index(1) < chain.index(2)


def test_single_request_served():
    inst = make_instance()
    g = expand_graph(inst)
    res = branch_and_bound(inst, g)
    assert res.status == "optimal"
    chains = [[g.pickup_node(0), g.delivery_node(0), g.hf[0]]]
    want = schedule_routes(inst, g, chains, [True]).objective
    assert res.objective == pytest.approx(want)
    assert res.solution.accepted == [True]
    assert res.gap == 0.0


def test_unservable_request_is_rejected():
    over = {"requests": [{
        "pickup": [100.0, 0.0], "delivery": [100.0, 300.0], "passengers": 5,
        "service_time": 1.0, "tw_kind": "pickup", "tw_lo": 0.0, "tw_hi": 60.0,
    }]}
    inst = make_instance(over=over)
    res = branch_and_bound(inst)
    assert res.status == "optimal"
    assert res.solution.accepted == [False]
    assert res.objective == pytest.approx(10000.0)


def test_nonselective_overload_is_infeasible():
    over = {"requests": [{
        "pickup": [100.0, 0.0], "delivery": [100.0, 300.0], "passengers": 5,
        "service_time": 1.0, "tw_kind": "pickup", "tw_lo": 0.0, "tw_hi": 60.0,
    }], "config": {"duplicate_visits": 0, "selective": False, "open_vrp": False,
                   "weights": {"epsilon": 0.001, "zeta": 1.0, "eta": 10000.0}}}
    inst = make_instance(over=over)
    res = branch_and_bound(inst)
    assert res.status == "infeasible"
    assert res.solution is None
    oracle = exhaustive_oracle(inst)
    assert oracle.status == "infeasible"


def test_forced_charging_stop():
    # drains too much to finish on one battery; the optimum plugs in en route
    matrix = [
        [0.0, 10.0, 20.0, 30.0, 40.0],
        [10.0, 0.0, 10.0, 20.0, 30.0],
        [20.0, 10.0, 0.0, 5.0, 10.0],
        [30.0, 20.0, 5.0, 0.0, 5.0],
        [40.0, 30.0, 10.0, 5.0, 0.0],
    ]
    over = {
        "costs": {"mode": "matrix", "matrix": matrix},
        "battery": {"alpha0": 0.025, "alpha1": 0.001, "alpha2": 0.0005,
                    "beta1": 0.034, "beta2": 0.012, "beta3": 0.005},
        "requests": [{"pickup": [0.0, 0.0], "delivery": [0.0, 0.0],
                      "passengers": 1, "service_time": 1.0, "tw_kind": "pickup",
                      "tw_lo": 0.0, "tw_hi": 60.0, "force_accept": True}],
    }
    inst = make_instance(n_stations=1, dups=0, over=over)
    g = expand_graph(inst)
    res = branch_and_bound(inst, g)
    assert res.status == "optimal"
    nodes = res.solution.plans[0].nodes
    assert g.f_node(0, 0) in nodes
    oracle = exhaustive_oracle(inst, g)
    assert oracle.objective == pytest.approx(res.objective)


def test_node_limit_reports_gap():
    inst = make_instance(n_requests=3, n_agents=2)
    res = branch_and_bound(inst, config=SearchConfig(node_limit=1))
    assert res.status in ("feasible", "limit")
    if res.solution is not None:
        assert res.status == "feasible"
        assert res.gap >= 0.0
        assert res.best_bound <= res.objective + 1e-9


def test_solution_satisfies_full_model():
    inst = make_instance(n_requests=2, n_agents=2, n_stations=1, dups=1)
    g = expand_graph(inst)
    res = branch_and_bound(inst, g)
    assert res.status == "optimal"
    model = build_model(inst, g)
    values = encode_plan(model, res.solution)
    bad = model.check_feasible(values)
    assert bad == [], [(c.tag, c.index, c.part, v) for c, v in bad[:8]]
    assert model.objective_value(values) == pytest.approx(res.objective)


def test_oracle_caps():
    with pytest.raises(ValueError, match="oracle caps exceeded"):
        exhaustive_oracle(make_instance(n_requests=5))
    with pytest.raises(ValueError, match="oracle caps exceeded"):
        exhaustive_oracle(make_instance(n_agents=3))
    with pytest.raises(ValueError, match="oracle caps exceeded"):
        exhaustive_oracle(make_instance(n_stations=1, dups=2))


@pytest.mark.parametrize("seed", range(10))
def test_matches_exhaustive_enumeration(seed):
    rng = random.Random(seed)
    n_requests = rng.randint(1, 3)
    n_agents = rng.randint(1, 2)
    n_stations = rng.randint(0, 1)
    over = _random_doc_over(rng, n_requests, n_agents, n_stations, dups=1 - 1)
    inst = make_instance(n_requests=n_requests, n_agents=n_agents,
                         n_stations=n_stations, dups=0, over=over)
    g = expand_graph(inst)
    res = branch_and_bound(inst, g)
    oracle = exhaustive_oracle(inst, g)
    assert res.status == oracle.status
    if res.status == "optimal":
        assert res.objective == pytest.approx(oracle.objective, abs=1e-6)
        assert res.solution.accepted == oracle.solution.accepted


def test_deterministic_runs():
    inst = make_instance(n_requests=3, n_agents=2)
    a = branch_and_bound(inst)
    b = branch_and_bound(inst)
    assert a.objective == b.objective
    assert [p.nodes for p in a.solution.plans] == [p.nodes for p in b.solution.plans]
    assert (a.nodes, a.leaves) == (b.nodes, b.leaves)
