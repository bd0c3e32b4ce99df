import math

import pytest

import eolsr


def test_configs_round_trip():
    rfc = eolsr.rfc_default()
    assert rfc.hello_interval == 2.0
    assert rfc.tc_interval == 5.0
    best = eolsr.reference_best()
    assert eolsr.OlsrConfig.from_json(best.to_json()) == best
    bad = eolsr.rfc_default()
    bad.hello_interval = 99.0
    with pytest.raises(eolsr.ValidationError):
        bad.validate()


def test_energy_model():
    assert math.isclose(eolsr.energy_send(4096), 1.50186667, rel_tol=1e-8)
    assert math.isclose(eolsr.energy_recv(4096), 0.88746667, rel_tol=1e-8)
    assert math.isclose(eolsr.broadcast_energy(4096, 3), 4.16426667, rel_tol=1e-8)


def test_fitness_and_analysis():
    ctx = eolsr.FitnessContext(9104.19, 87.12)
    assert abs(eolsr.fitness(6305.58, 75.14, ctx) - 0.6482) < 1e-4
    assert abs(eolsr.penalized_fitness(6305.58, 70.0, ctx) - 0.769027) < 1e-4
    assert abs(eolsr.gap_energy(6305.58, 9104.19) - 0.3074) < 1e-4
    assert abs(eolsr.efficiency(19.10, 24) - 0.7958) < 5e-4
    assert eolsr.kruskal_wallis([[1, 2], [3, 4]])["statistic"] == pytest.approx(2.4)
    w = eolsr.wilcoxon([1, 0, 3], [0, 2, 0])
    assert (w["w_plus"], w["w_minus"]) == (4.0, 2.0)
    with pytest.raises(eolsr.EolsrError):
        eolsr.wilcoxon([1, 2], [1, 2])


def test_simulate_and_compare(tmp_path):
    sc = eolsr.generate_grid_scenario(400, 300, 8, flows=3, seed=2, duration=60, flow_start=20, flow_duration=20)
    assert sc.node_count == 8
    assert sc.flow_count == 3
    m = eolsr.simulate(sc, eolsr.rfc_default(), seed=4)
    assert 0.0 <= m["pdr"] <= 100.0
    assert m["e_total_mj"] > 0.0
    assert m == eolsr.simulate(sc, eolsr.rfc_default(), seed=4)
    cmp = eolsr.compare_against_reference(sc, eolsr.rfc_default(), seed=4)
    assert cmp["gap_energy"] == 0.0

    path = sc.save(str(tmp_path), "s")
    again = eolsr.load_scenario(path)
    assert again.node_count == sc.node_count
    assert eolsr.simulate(again, eolsr.rfc_default(), seed=4) == m


def test_missing_scenario_raises():
    with pytest.raises(eolsr.ConfigError):
        eolsr.load_scenario("/nonexistent/scenario.json")


def test_tune_small():
    sc = eolsr.generate_grid_scenario(400, 300, 6, flows=2, seed=3, duration=40, flow_start=10, flow_duration=15)
    r = eolsr.tune(sc, pop=4, gens=1, seed=5)
    r["best_config"].validate()
    assert r["best_fitness"] < 2.0
    assert r["history_csv"].startswith("generation,")
