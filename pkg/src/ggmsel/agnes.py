"""Agglomerative clustering of dissimilarity matrices.

AGNES with the average-of-averages (WPGMA) merge update by default and the
size-weighted (UPGMA) update as an option, the agglomerative coefficient AC,
and a connectivity-closed random subset shortcut that makes the coefficient
affordable on large graphs by matching the degree coefficient of variation.

Cluster labels follow the usual dendrogram convention: singletons are
0..p-1 and the cluster created by merge step t (0-based) is p + t.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NoSubsetFound
from .rng import SUBSET, rng_for

WPGMA = "wpgma"
UPGMA = "upgma"


@dataclass
class Dendrogram:
    """Merge history of one AGNES run.

    merges holds (a, b, height) with a < b the labels of the merged clusters;
    first_merge_height[j] is the height at which original node j first joins
    a larger cluster; max_height is the height of the final merge (merge
    heights are non-decreasing under both update rules, so it is also the
    maximum).
    """

    p: int
    merges: list = field(default_factory=list)
    first_merge_height: np.ndarray = None
    max_height: float = 0.0

    @property
    def degenerate(self) -> bool:
        """True when every input dissimilarity was zero (max height 0)."""
        return self.max_height <= 0.0


def agnes_cluster(d: np.ndarray, linkage: str = WPGMA) -> Dendrogram:
    """Cluster a symmetric dissimilarity matrix bottom-up.

    Each step merges the pair of clusters at minimal dissimilarity, breaking
    ties toward the lexicographically smallest pair of cluster slots, and
    replaces the pair's rows by the average of the two (WPGMA) or the
    size-weighted average (UPGMA).

    Args:
        d: (p, p) symmetric nonnegative dissimilarities, zero diagonal.
        linkage: "wpgma" (default) or "upgma".

    Returns:
        Dendrogram with the full merge list.
    """
    d = np.asarray(d, dtype=float)
    p = d.shape[0]
    if d.ndim != 2 or d.shape[1] != p:
        raise ValueError("dissimilarity matrix must be square")
    if p < 2:
        raise ValueError("need at least two nodes")
    if np.any(d < 0) or np.any(np.diag(d) != 0) or np.any(d != d.T):
        raise ValueError("dissimilarities must be symmetric, nonnegative, zero-diagonal")
    if linkage not in (WPGMA, UPGMA):
        raise ValueError(f"unknown linkage {linkage!r}")

    # Working matrix over cluster slots; retired slots are masked with +inf.
    # The merged cluster stays at the higher slot so a slot that is still a
    # singleton always holds the original node with the same index.
    work = d.copy()
    np.fill_diagonal(work, np.inf)
    sizes = np.ones(p, dtype=np.int64)
    labels = np.arange(p, dtype=np.int64)
    active = np.ones(p, dtype=bool)
    first_height = np.zeros(p, dtype=float)
    merges = []

    for step in range(p - 1):
        # argmin over the row-major upper triangle gives the smallest (h, k)
        # lexicographic pair among the tied minima.
        flat = np.argmin(work)
        h, k = divmod(int(flat), p)
        if h > k:
            h, k = k, h
        height = float(work[h, k])

        if sizes[h] == 1:
            first_height[h] = height
        if sizes[k] == 1:
            first_height[k] = height

        a, b = labels[h], labels[k]
        merges.append((int(min(a, b)), int(max(a, b)), height))

        others = active.copy()
        others[h] = False
        others[k] = False
        if linkage == WPGMA:
            new_row = 0.5 * (work[h, others] + work[k, others])
        else:
            total = sizes[h] + sizes[k]
            new_row = (sizes[h] * work[h, others] + sizes[k] * work[k, others]) / total

        work[k, others] = new_row
        work[others, k] = new_row
        work[h, :] = np.inf
        work[:, h] = np.inf
        active[h] = False
        sizes[k] += sizes[h]
        labels[k] = p + step

    return Dendrogram(p=p, merges=merges, first_merge_height=first_height,
                      max_height=merges[-1][2])


def ac_coefficient(dend: Dendrogram) -> float:
    """Agglomerative coefficient: mean over nodes of 1 - d*_j / d*_max.

    d*_j is the height of node j's first merge and d*_max the final merge
    height.  A degenerate dendrogram (all dissimilarities zero) scores 0;
    check ``dend.degenerate`` to tell it apart from a genuinely unstructured
    matrix.  Two-node inputs always score 0.
    """
    if dend.degenerate:
        return 0.0
    return float(np.mean(1.0 - dend.first_merge_height / dend.max_height))


def degree_cv(degrees: np.ndarray) -> float:
    """Coefficient of variation sd/mean of a degree vector.

    Sample standard deviation (ddof=1).  Fewer than two nodes or a zero mean
    gives 0 by convention.
    """
    deg = np.asarray(degrees, dtype=float)
    if deg.size < 2:
        return 0.0
    mean = deg.mean()
    if mean == 0.0:
        return 0.0
    return float(deg.std(ddof=1) / mean)


def _cv_ratio_ok(cv_s: float, cv_t: float, tau: float) -> bool:
    if cv_t == 0.0:
        # 0/0 compares as 1 (trivially within tau); x/0 with x > 0 never is.
        return cv_s == 0.0
    return abs(cv_s / cv_t - 1.0) <= tau


def select_subset(graph, m: int | None = None, tau: float = 0.25,
                  max_tries: int = 50, seed: int = 0) -> np.ndarray:
    """Random connectivity-closed node subset matching the degree CV.

    Draws m seed nodes uniformly, closes under connected components (every
    node with a path to a seed joins), and accepts when the subset's degree
    coefficient of variation is within a factor tau of the full graph's.
    Degrees are always counted in the full graph.

    Args:
        graph: adjacency matrix or Graph with at least one edge.
        m: seed-set size; default min(max(ceil(0.1 p), 30), p - 1).
        tau: relative CV tolerance.
        max_tries: attempts before giving up.
        seed: base seed for the subset draws.

    Returns:
        Sorted array of selected node indices.

    Raises:
        NoSubsetFound: no draw passed within max_tries.
    """
    from .netstats import Graph

    adj = graph.adjacency if isinstance(graph, Graph) else np.asarray(graph, dtype=bool)
    p = adj.shape[0]
    if adj.sum() == 0:
        raise ValueError("graph must have at least one edge")
    if m is None:
        m = min(max(int(np.ceil(0.1 * p)), 30), p - 1)
    if not 0 < m < p:
        raise ValueError("m must be between 1 and p - 1")

    degrees = adj.sum(axis=1).astype(float)
    cv_full = degree_cv(degrees)
    _, comp = connected_components(csr_matrix(adj), directed=False)

    rng = rng_for(seed, SUBSET)
    for _ in range(max_tries):
        seeds = rng.choice(p, size=m, replace=False)
        keep = np.isin(comp, np.unique(comp[seeds]))
        subset = np.flatnonzero(keep)
        if _cv_ratio_ok(degree_cv(degrees[subset]), cv_full, tau):
            return subset
    raise NoSubsetFound(f"no degree-CV-matched subset in {max_tries} tries (tau={tau})")


def subset_ac(graph, d: np.ndarray, linkage: str = WPGMA, m: int | None = None,
              tau: float = 0.25, max_tries: int = 50, seed: int = 0) -> float:
    """AC computed on a connectivity-closed subset of the nodes.

    Restricts the dissimilarity matrix to the subset chosen by
    :func:`select_subset` and clusters that.  Intended for large p where the
    cubic clustering cost on all nodes is the bottleneck.
    """
    subset = select_subset(graph, m=m, tau=tau, max_tries=max_tries, seed=seed)
    if subset.size < 2:
        return 0.0
    sub = d[np.ix_(subset, subset)]
    return ac_coefficient(agnes_cluster(sub, linkage=linkage))
