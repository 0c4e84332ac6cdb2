import json

import numpy as np
import pytest

import adafgl


def small_graph():
    return adafgl.make_masks(
        adafgl.sbm_generate(120, 3, 0.1, 0.01, 8, seed=2, feature_signal=0.8), (0.2, 0.4, 0.4), 1
    )


def test_graph_construction_and_homophily():
    g = adafgl.Graph(3, [(0, 1), (1, 2), (1, 0)], np.eye(3), [0, 0, 1])
    assert g.num_edges == 2
    assert g.dropped_edges == 1
    assert adafgl.edge_homophily(g) == pytest.approx(0.5)
    assert adafgl.node_homophily(g) == pytest.approx((1.0 + 0.5 + 0.0) / 3)
    assert np.array_equal(g.features, np.eye(3))
    empty = adafgl.Graph(2, [], np.zeros((2, 1)), [0, 1])
    assert adafgl.edge_homophily(empty) is None


def test_graph_round_trip(tmp_path):
    g = small_graph()
    adafgl.save_graph(g, tmp_path / "g")
    assert adafgl.load_graph(tmp_path / "g") == g
    assert g.count("train") == 24


def test_splits_and_hcs(tmp_path):
    g = small_graph()
    task = adafgl.structure_noniid_split(g, 3, p_s=0.5, ratio=0.5, seed=4)
    assert task.num_clients == 3
    assert sum(task.client(i).num_nodes for i in range(3)) == g.num_nodes
    for i in range(3):
        rec = task.injection(i)
        assert rec["mode"] in ("homo", "hetero")
        assert rec["added"] <= rec["requested"]
    adafgl.save_task(task, tmp_path / "t")
    assert adafgl.load_task(tmp_path / "t") == task
    report = adafgl.compute_hcs(task.client(0), seed=1)
    assert 0.0 <= report["hcs"] <= 1.0
    assert len(report["accuracy_trace"]) == 6


def test_train_returns_results(tmp_path):
    adafgl.set_quiet(True)
    adafgl.save_graph(small_graph(), tmp_path / "g")
    cfg = adafgl.default_config()
    cfg.update(dataset=str(tmp_path / "g"), out=str(tmp_path / "out"), seeds=[0, 1], threads=1)
    cfg["split"]["num_clients"] = 3
    cfg["federation"]["rounds"] = 3
    cfg["adafgl"]["epochs"] = 3
    results = adafgl.train(cfg)
    assert results["seeds"] == [0, 1]
    assert len(results["runs"]) == 2
    with open(tmp_path / "out" / "results.json") as f:
        assert json.load(f) == results


def test_bad_config_raises():
    with pytest.raises(adafgl.ConfigError):
        adafgl.train({"split": {"num_clients": 0}})
    with pytest.raises(ValueError):
        adafgl.train({"no_such_key": 1})
