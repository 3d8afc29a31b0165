import math
import os

import pytest

import halmarket as hm


def model_a():
    return hm.UpstreamModel("A", 0.05, 0.20)


def model_b():
    return hm.UpstreamModel("B", 0.30, 0.13)


def population(mu=0.5):
    return hm.UserPopulation(hm.UserType(3.0, 10.0), hm.UserType(1.0, 1.5), mu)


def test_closed_forms():
    params = hm.MarketParams(0.95, 0.70)
    cost = hm.CostFunction(0.125, 2.0)

    assert hm.hallucination_prob(model_a(), 0.0, 0.70) == 0.20
    assert hm.hallucination_prob(model_a(), 1.0, 0.70) == pytest.approx(
        0.20 * math.exp(-0.70), rel=1e-14
    )
    assert hm.effort_cost(cost, 2.0) == 0.5
    assert hm.per_period_utility(hm.UserType(1.0, 1.5), 0.20, 0.05) == pytest.approx(0.45)
    assert hm.enforcement_price(model_a(), 0.0, cost, params) == 0.05

    with pytest.raises(ValueError):
        hm.hallucination_prob(model_a(), -1.0, 0.70)
    with pytest.raises(hm.SingularInputError):
        hm.rent_factor(model_a(), 0.0, params)


def test_solve_reference_market():
    catalog = hm.ModelCatalog([model_a(), model_b()])
    params = hm.MarketParams(0.95, 0.70)
    cost = hm.CostFunction(0.125, 2.0)

    res = hm.solve_equilibrium(catalog, population(0.5), cost, params)
    assert res.active
    assert res.contract.model.id == "B"
    assert res.contract.effort > 0.5
    assert res.binding_type == hm.BindingType.Low

    res_low_mix = hm.solve_equilibrium(catalog, population(0.1), cost, params)
    assert res_low_mix.contract.model.id == "A"

    spot = hm.spot_equilibrium(catalog, population(0.5))
    assert spot.contract.effort == 0.0
    assert spot.contract.price == 0.30


def test_simulation_matches_analytics():
    params = hm.MarketParams(0.95, 0.70)
    cost = hm.CostFunction(0.125, 2.0)
    price = hm.enforcement_price(model_a(), 1.0, cost, params)
    contract = hm.Contract(model_a(), price, 1.0)

    cfg = hm.SimConfig()
    cfg.cohort_size = 20000
    cfg.seed = 12
    cfg.threads = 2
    res = hm.simulate_relationships(contract, population(0.5), cost, params, cfg)

    analytic = hm.continuation_value(contract, cost, params)
    assert abs(res.agent_value.mean - analytic) <= 3.0 * res.agent_value.se


def test_scenario_loading():
    scenario_dir = os.environ["HALMARKET_SCENARIO_DIR"]
    sc = hm.load_scenario(os.path.join(scenario_dir, "paper_3_3.scenario"))
    assert sc.delta == 0.95
    assert [m.id for m in sc.catalog.models] == ["A", "B"]
    assert sc.cost.coefficient == 0.125

    again = hm.parse_scenario(hm.emit_scenario(sc))
    assert again.delta == sc.delta
    assert again.mu == sc.mu
