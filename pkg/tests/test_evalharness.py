"""Scoring, ranking, and the replicate runner."""

import json
import math

import numpy as np
import pytest

from ggmsel.errors import DimensionMismatch
from ggmsel.evalharness import (
    DISSIM_KIND,
    PRECISION_KIND,
    default_grid,
    dissim_risks,
    matrix_mse,
    mean_table,
    network_stat_errors,
    oracle_lambda,
    partial_correlations,
    rank_methods,
    rank_table,
    recovery,
    run_replicate,
    run_scenarios,
)
from ggmsel.netstats import Graph
from ggmsel.selector import AIC, PC
from ggmsel.simgen import HUBS, SimSpec


def graph_from_edges(p, edges):
    adj = np.zeros((p, p), dtype=bool)
    for i, j in edges:
        adj[i, j] = adj[j, i] = True
    return adj


class StubPath:
    """Minimal stand-in exposing just grid + adjacency(k)."""

    def __init__(self, grid, adjs):
        self.grid = np.asarray(grid, dtype=float)
        self._adjs = adjs

    def adjacency(self, k):
        return self._adjs[k]


# -- recovery ------------------------------------------------------------------


def test_recovery_hand_counts():
    truth = graph_from_edges(4, [(0, 1), (1, 2), (2, 3)])
    est = graph_from_edges(4, [(0, 1), (1, 2), (0, 3)])
    score = recovery(est, truth)
    assert (score.tp, score.fp, score.fn, score.tn) == (2, 1, 1, 2)
    assert score.tdr == pytest.approx(2.0 / 3.0)
    # Graph wrappers are accepted too
    assert recovery(Graph(est), Graph(truth)).tp == 2


def test_recovery_empty_estimate_has_undefined_tdr():
    truth = graph_from_edges(3, [(0, 1)])
    score = recovery(np.zeros((3, 3), dtype=bool), truth)
    assert score.tdr is None
    assert (score.tp, score.fp, score.fn, score.tn) == (0, 0, 1, 2)


def test_recovery_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        recovery(np.zeros((3, 3), dtype=bool), np.zeros((4, 4), dtype=bool))


# -- matrix errors -------------------------------------------------------------


def test_partial_correlations_hand():
    omega = np.array([[2.0, -1.0], [-1.0, 2.0]])
    pc = partial_correlations(omega)
    assert pc[0, 1] == pytest.approx(0.5)
    assert pc[0, 0] == 1.0 and pc[1, 1] == 1.0


def test_matrix_mse_dissim_hand():
    a = np.zeros((3, 3))
    b = np.zeros((3, 3))
    b[0, 1] = b[1, 0] = 0.6
    assert matrix_mse(a, b, DISSIM_KIND) == pytest.approx(0.36 / 3.0)
    assert matrix_mse(a, b) == matrix_mse(b, a)


def test_matrix_mse_precision_scale_invariant():
    rng = np.random.default_rng(3)
    m = rng.random((4, 4))
    omega = m @ m.T + 4.0 * np.eye(4)
    assert matrix_mse(omega, 3.7 * omega, PRECISION_KIND) == pytest.approx(0.0, abs=1e-12)
    other = omega.copy()
    other[0, 1] = other[1, 0] = other[0, 1] + 1.0
    assert matrix_mse(omega, other, PRECISION_KIND) > 0.0


def test_matrix_mse_validation():
    with pytest.raises(ValueError):
        matrix_mse(np.zeros((2, 2)), np.zeros((2, 2)), kind="spectral")
    with pytest.raises(DimensionMismatch):
        matrix_mse(np.zeros((2, 2)), np.zeros((3, 3)))


# -- oracle --------------------------------------------------------------------


def test_oracle_prefers_larger_lambda_on_ties():
    truth = graph_from_edges(3, [(0, 1), (1, 2)])
    empty = np.zeros((3, 3), dtype=bool)
    path = StubPath([0.1, 0.2, 0.3], [truth, truth, empty])
    risks = dissim_risks(path, truth)
    assert risks[0] == 0.0 and risks[1] == 0.0 and risks[2] > 0.0
    assert oracle_lambda(path, truth) == pytest.approx(0.2)


def test_oracle_skips_failed_points():
    truth = graph_from_edges(3, [(0, 1)])
    path = StubPath([0.1, 0.2], [None, truth])
    assert oracle_lambda(path, Graph(truth)) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        oracle_lambda(StubPath([0.1], [None]), truth)


# -- ranking -------------------------------------------------------------------


def test_rank_methods_midranks():
    ranks = rank_methods({"a": 1.0, "b": 2.0, "c": 2.0})
    assert ranks == {"a": 1.0, "b": 2.5, "c": 2.5}
    flipped = rank_methods({"a": 1.0, "b": 2.0}, lower_is_better=False)
    assert flipped == {"a": 2.0, "b": 1.0}
    with pytest.raises(ValueError):
        rank_methods({"a": 1.0})


def _fake_record(rep, tdrs, label="s", n=100):
    return {
        "label": label, "n": n, "rep": rep,
        "methods": {name: {"tdr": val, "mse_dissim": None if val is None else 1 - val}
                    for name, val in tdrs.items()},
    }


def test_rank_table_and_mean_table():
    records = [
        _fake_record(0, {"a": 0.9, "b": 0.5}),
        _fake_record(1, {"a": 0.8, "b": 0.9}),
        _fake_record(2, {"a": 0.7, "b": None}),  # one defined value: skipped
    ]
    ranks = rank_table(records, "tdr")
    col = ranks[("s", 100)]
    assert col["a"] == pytest.approx(1.5)
    assert col["b"] == pytest.approx(1.5)

    means = mean_table(records, "tdr")
    assert means.loc["a", ("s", 100)] == pytest.approx((0.9 + 0.8 + 0.7) / 3)
    assert means.loc["b", ("s", 100)] == pytest.approx(0.7)


# -- network statistic errors --------------------------------------------------


def test_network_stat_errors_empty_vs_triangle():
    k3 = graph_from_edges(3, [(0, 1), (0, 2), (1, 2)])
    empty = np.zeros((3, 3), dtype=bool)
    errs = network_stat_errors(empty, k3)
    assert errs["harmonic"] is None
    assert errs["estrada"] == pytest.approx(
        abs(3.0 - (math.exp(2.0) + 2.0 * math.exp(-1.0))))
    assert errs["ad"] == pytest.approx(1.0)
    assert errs["ac"] == pytest.approx(0.0)
    assert errs["degree"] == pytest.approx(2.0)
    same = network_stat_errors(k3, k3)
    assert same["estrada"] == pytest.approx(0.0, abs=1e-12)
    assert same["degree"] == 0.0


def test_network_stat_errors_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        network_stat_errors(np.zeros((2, 2), dtype=bool),
                            np.zeros((3, 3), dtype=bool))


# -- grids and the replicate runner --------------------------------------------


def test_default_grid_switches_on_n():
    small = default_grid(100)
    assert small.size == 70
    assert small[0] == pytest.approx(0.20) and small[-1] == pytest.approx(0.66)
    big = default_grid(101)
    assert big[0] == pytest.approx(0.03) and big[-1] == pytest.approx(0.40)


def test_run_replicate_record_shape():
    spec = SimSpec(p=12, n=60, topology=HUBS, cluster_sizes=(12,),
                   hub_prob=0.0, background_edge_prob_range=(0.15, 0.25),
                   seed=5)
    grid = np.linspace(0.1, 0.7, 6)
    record = run_replicate(spec, rep=0, methods=(PC, AIC), grid=grid)
    from ggmsel.simgen import generate_replicate

    gt, _ = generate_replicate(spec, rep=0)
    true_edges = int(gt.graph.adjacency[np.triu_indices(12, 1)].sum())
    assert record["p"] == 12 and record["n"] == 60 and record["rep"] == 0
    assert record["label"] == "p12-hubs"
    assert record["oracle_lambda"] in grid
    assert not record["errors"]
    for name in (PC, AIC):
        entry = record["methods"][name]
        if entry["lambda"] is not None:
            assert entry["lambda"] in grid
            assert 0.0 <= entry["mse_dissim"]
            assert entry["tp"] + entry["fn"] == true_edges
            assert "err_estrada" in entry
    json.dumps(record)  # must be serializable as written


def test_run_scenarios_order_independent_of_threads():
    spec_a = SimSpec(p=10, n=40, topology=HUBS, cluster_sizes=(10,),
                     hub_prob=0.0, background_edge_prob_range=(0.2, 0.3), seed=1)
    spec_b = SimSpec(p=10, n=40, topology=HUBS, cluster_sizes=(10,),
                     hub_prob=0.0, background_edge_prob_range=(0.2, 0.3), seed=2)
    specs = [("A", spec_a), ("B", spec_b)]
    grid_kw = dict(methods=(PC,), reps=2)
    serial = run_scenarios(specs, jobs=1, **grid_kw)
    threaded = run_scenarios(specs, jobs=3, **grid_kw)
    assert [(r["label"], r["rep"]) for r in serial] == \
        [("A", 0), ("A", 1), ("B", 0), ("B", 1)]
    for a, b in zip(serial, threaded):
        assert a["label"] == b["label"] and a["rep"] == b["rep"]
        assert a["methods"][PC]["lambda"] == b["methods"][PC]["lambda"]
