"""Scoring estimated graphs against ground truth, and the simulation harness.

Edge-recovery counts and the true discovery rate, mean square errors of the
partial-correlation and dissimilarity matrices, absolute errors of five
global network statistics, the oracle penalty level (the grid value whose
estimate's dissimilarities are closest to the truth's), and midrank
aggregation of per-replicate method scores into the rank tables the report
subcommand renders.

The replicate runner at the bottom ties generation, fitting, selection and
scoring together; it is shared by the command line and the acceptance tests.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import pandas as pd
from scipy.stats import rankdata

from .agnes import ac_coefficient, agnes_cluster
from .errors import DimensionMismatch
from .estimator import GLASSO, RegPath
from .netstats import (avg_dissimilarity, degree_histogram, dissimilarities,
                       estrada_index, geodesics, harmonic_mean)
from .selector import METHODS, SubsampleConfig, select_all
from .simgen import SimSpec, generate_replicate

PRECISION_KIND = "precision"
DISSIM_KIND = "dissim"

# Metrics carried in each replicate record, with their ranking direction.
METRIC_LOWER_IS_BETTER = {
    "tdr": False,
    "mse_dissim": True,
    "mse_precision": True,
    "err_harmonic": True,
    "err_ac": True,
    "err_estrada": True,
    "err_ad": True,
    "err_degree": True,
}


@dataclass
class RecoveryScore:
    """Edge-recovery confusion counts over unordered pairs.

    tdr is None (undefined, not zero) when the estimate has no edges.
    """

    tp: int
    fp: int
    fn: int
    tn: int
    tdr: float | None


def _check_same_p(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shapes differ: {a.shape} vs {b.shape}")


def recovery(est, truth) -> RecoveryScore:
    """Confusion counts of an estimated adjacency against the true one."""
    from .netstats import Graph

    e = est.adjacency if isinstance(est, Graph) else np.asarray(est, dtype=bool)
    t = truth.adjacency if isinstance(truth, Graph) else np.asarray(truth, dtype=bool)
    _check_same_p(e, t)
    iu = np.triu_indices(e.shape[0], k=1)
    ev, tv = e[iu], t[iu]
    tp = int(np.sum(ev & tv))
    fp = int(np.sum(ev & ~tv))
    fn = int(np.sum(~ev & tv))
    tn = int(np.sum(~ev & ~tv))
    tdr = tp / (tp + fp) if tp + fp > 0 else None
    return RecoveryScore(tp=tp, fp=fp, fn=fn, tn=tn, tdr=tdr)


def partial_correlations(omega: np.ndarray) -> np.ndarray:
    """Scale a precision matrix to partial correlations -w_ij/sqrt(w_ii w_jj)."""
    d = np.sqrt(np.diag(omega))
    pc = -omega / np.outer(d, d)
    np.fill_diagonal(pc, 1.0)
    return pc


def matrix_mse(a: np.ndarray, b: np.ndarray, kind: str = DISSIM_KIND) -> float:
    """Mean squared upper-triangle difference of two symmetric matrices.

    PRECISION inputs are first normalized to partial-correlation scale, which
    makes the comparison invariant to a common positive rescaling.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    _check_same_p(a, b)
    if kind == PRECISION_KIND:
        a = partial_correlations(a)
        b = partial_correlations(b)
    elif kind != DISSIM_KIND:
        raise ValueError(f"unknown kind {kind!r}")
    iu = np.triu_indices(a.shape[0], k=1)
    return float(np.mean((a[iu] - b[iu]) ** 2))


def dissim_risks(path: RegPath, truth_adj: np.ndarray, q: float = 2.0) -> np.ndarray:
    """Summed |d_true - d_hat|^q over pairs, per grid point (NaN on failures)."""
    d_true = dissimilarities(truth_adj).d
    iu = np.triu_indices(d_true.shape[0], k=1)
    ref = d_true[iu]
    risks = np.full(path.grid.size, np.nan)
    for k in range(path.grid.size):
        adj = path.adjacency(k)
        if adj is None:
            continue
        risks[k] = float(np.sum(np.abs(dissimilarities(adj).d[iu] - ref) ** q))
    return risks


def oracle_lambda(path: RegPath, truth, q: float = 2.0) -> float:
    """Grid value minimizing the true-dissimilarity risk (ties to larger lambda)."""
    from .netstats import Graph
    from .simgen import GroundTruth

    if isinstance(truth, GroundTruth):
        adj = truth.graph.adjacency
    elif isinstance(truth, Graph):
        adj = truth.adjacency
    else:
        adj = np.asarray(truth, dtype=bool)
    risks = dissim_risks(path, adj, q=q)
    defined = np.flatnonzero(~np.isnan(risks))
    if defined.size == 0:
        raise ValueError("no usable estimates on the path")
    best = risks[defined].min()
    return float(path.grid[defined[risks[defined] == best].max()])


def rank_methods(scores: dict, lower_is_better: bool = True) -> dict:
    """Midrank the methods on one metric; rank 1 is best."""
    if len(scores) < 2:
        raise ValueError("need at least two methods to rank")
    names = list(scores)
    vals = np.array([scores[name] for name in names], dtype=float)
    if not lower_is_better:
        vals = -vals
    ranks = rankdata(vals, method="average")
    return dict(zip(names, (float(r) for r in ranks)))


def network_stat_errors(est, truth) -> dict:
    """Absolute errors of five global statistics between two graphs.

    Keys: harmonic, ac, estrada, ad, degree (L1 distance of the degree
    fraction vectors, shorter one zero-padded).  harmonic is None whenever
    either graph has no connected pair at all.
    """
    from .netstats import Graph

    e = est.adjacency if isinstance(est, Graph) else np.asarray(est, dtype=bool)
    t = truth.adjacency if isinstance(truth, Graph) else np.asarray(truth, dtype=bool)
    _check_same_p(e, t)

    def stats(adj):
        dm = dissimilarities(adj)
        return {
            "harmonic": harmonic_mean(geodesics(adj)),
            "ac": ac_coefficient(agnes_cluster(dm.d)),
            "estrada": estrada_index(adj),
            "ad": avg_dissimilarity(dm),
            "hist": degree_histogram(adj),
        }

    se, st = stats(e), stats(t)
    if np.isinf(se["harmonic"]) or np.isinf(st["harmonic"]):
        harm = None
    else:
        harm = abs(se["harmonic"] - st["harmonic"])
    width = max(se["hist"].size, st["hist"].size)
    he = np.pad(se["hist"], (0, width - se["hist"].size))
    ht = np.pad(st["hist"], (0, width - st["hist"].size))
    return {
        "harmonic": harm,
        "ac": abs(se["ac"] - st["ac"]),
        "estrada": abs(se["estrada"] - st["estrada"]),
        "ad": abs(se["ad"] - st["ad"]),
        "degree": float(np.abs(he - ht).sum()),
    }


def default_grid(n: int) -> np.ndarray:
    """The 70-point penalty grids used in the simulations, keyed by sample size."""
    if n <= 100:
        return np.linspace(0.20, 0.66, 70)
    return np.linspace(0.03, 0.40, 70)


def run_replicate(spec: SimSpec, rep: int, methods=METHODS,
                  estimator: str = GLASSO, grid: np.ndarray | None = None,
                  t_subsamples: int = 50, q: float = 2.0, beta: float = 0.05,
                  label: str | None = None) -> dict:
    """Generate, fit, select with every method, and score one replicate.

    Returns a JSON-serializable record: scenario coordinates, the oracle
    lambda, and per-method selections with their recovery and error metrics
    (None marks undefined values, e.g. the TDR of an empty estimate).
    """
    gt, x = generate_replicate(spec, rep)
    if grid is None:
        grid = default_grid(spec.n)
    cfg = SubsampleConfig(t=t_subsamples, seed=spec.seed, rep=rep)
    report = select_all(x, grid, methods, estimator=estimator, cfg=cfg,
                        q=q, beta=beta)
    truth_adj = gt.graph.adjacency
    d_true = dissimilarities(truth_adj).d

    record = {
        "label": label or f"p{spec.p}-{spec.topology}",
        "topology": spec.topology,
        "p": int(spec.p),
        "n": int(spec.n),
        "rep": int(rep),
        "estimator": estimator,
        "seed": int(spec.seed),
        "oracle_lambda": oracle_lambda(report.path, truth_adj, q=q),
        "methods": {},
        "errors": dict(report.errors),
    }
    for name, curve in report.curves.items():
        entry = {"lambda": curve.selected_lambda, "flags": list(curve.flags)}
        if curve.selected_index is not None:
            adj = report.path.adjacency(curve.selected_index)
            score = recovery(adj, truth_adj)
            entry.update(tp=score.tp, fp=score.fp, fn=score.fn, tn=score.tn,
                         tdr=score.tdr)
            entry["mse_dissim"] = matrix_mse(dissimilarities(adj).d, d_true,
                                             DISSIM_KIND)
            est = report.path.estimates[curve.selected_index]
            if estimator == GLASSO and est is not None:
                entry["mse_precision"] = matrix_mse(est.omega, gt.omega,
                                                    PRECISION_KIND)
            else:
                entry["mse_precision"] = None
            errs = network_stat_errors(adj, truth_adj)
            entry.update({f"err_{key}": val for key, val in errs.items()})
        record["methods"][name] = entry
    return record


def run_scenarios(specs, reps: int, methods=METHODS, estimator: str = GLASSO,
                  jobs: int = 1, t_subsamples: int = 50, q: float = 2.0,
                  beta: float = 0.05) -> list:
    """All replicates of several scenarios, optionally on a thread pool.

    specs is an iterable of (label, SimSpec); records come back in
    (spec, replicate) order regardless of the number of threads.
    """
    tasks = [(label, spec, rep) for label, spec in specs for rep in range(reps)]
    if jobs <= 1:
        return [run_replicate(spec, rep, methods=methods, estimator=estimator,
                              t_subsamples=t_subsamples, q=q, beta=beta,
                              label=label)
                for label, spec, rep in tasks]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(run_replicate, spec, rep, methods=methods,
                               estimator=estimator, t_subsamples=t_subsamples,
                               q=q, beta=beta, label=label)
                   for label, spec, rep in tasks]
        return [f.result() for f in futures]


def _metric_frame(records: list, metric: str) -> pd.DataFrame:
    rows = []
    for rec in records:
        for name, entry in rec["methods"].items():
            val = entry.get(metric)
            rows.append({"label": rec["label"], "n": rec["n"], "rep": rec["rep"],
                         "method": name, "value": np.nan if val is None else val})
    return pd.DataFrame(rows)


def rank_table(records: list, metric: str) -> pd.DataFrame:
    """Average per-replicate midranks: rows = methods, columns = (label, n).

    Within each replicate the methods with a defined metric are ranked
    (rank 1 best, direction per METRIC_LOWER_IS_BETTER); ranks are then
    averaged over replicates.
    """
    lower = METRIC_LOWER_IS_BETTER[metric]
    frame = _metric_frame(records, metric)
    out = {}
    for (label, n), cell in frame.groupby(["label", "n"]):
        sums: dict = {}
        counts: dict = {}
        for _, rep_rows in cell.groupby("rep"):
            defined = rep_rows.dropna(subset=["value"])
            if len(defined) < 2:
                continue
            scores = dict(zip(defined["method"], defined["value"]))
            for name, rk in rank_methods(scores, lower_is_better=lower).items():
                sums[name] = sums.get(name, 0.0) + rk
                counts[name] = counts.get(name, 0) + 1
        out[(label, n)] = {name: sums[name] / counts[name] for name in sums}
    table = pd.DataFrame(out).sort_index(axis=1)
    table.index.name = "method"
    return table


def mean_table(records: list, metric: str) -> pd.DataFrame:
    """Per-scenario means of one metric (undefined values excluded)."""
    frame = _metric_frame(records, metric)
    table = frame.pivot_table(index="method", columns=["label", "n"],
                              values="value", aggfunc="mean")
    table.index.name = "method"
    return table
