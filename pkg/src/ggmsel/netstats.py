"""Graph-theoretic statistics of an estimated graph.

Geodesic distances, the shared-neighbor dissimilarity matrix, the geodesic
distance mean, and the supplementary global statistics (harmonic mean of
geodesics, Estrada index, average dissimilarity, degree distribution).

Graphs are symmetric boolean adjacency matrices with a false diagonal;
np.inf is the distance sentinel for disconnected pairs (an exact IEEE value,
so indicator tests against it are exact).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path


@dataclass
class Graph:
    """Undirected simple graph: adjacency plus cached degrees."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency, dtype=bool)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be square")
        if np.any(adj != adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency diagonal must be false")
        self.adjacency = adj
        self.degrees = adj.sum(axis=1)

    @property
    def p(self) -> int:
        return self.adjacency.shape[0]


def _as_adj(graph) -> np.ndarray:
    if isinstance(graph, Graph):
        return graph.adjacency
    return np.asarray(graph, dtype=bool)


@dataclass
class DissimMatrix:
    """Shared-neighbor dissimilarities: d = 1 - sigma, sigma = eta/sqrt(k_i k_j)."""

    d: np.ndarray
    sigma: np.ndarray
    eta: np.ndarray


def geodesics(graph) -> np.ndarray:
    """All-pairs shortest path lengths by breadth-first search from every node.

    Returns a float matrix; unreachable pairs are np.inf, the diagonal 0.
    """
    adj = _as_adj(graph)
    g = shortest_path(csr_matrix(adj), method="auto", directed=False,
                      unweighted=True)
    return g


def dissimilarities(graph, literal_eta: bool = False) -> DissimMatrix:
    """Dissimilarity matrix from shared-neighbor counts.

    eta_ij counts the neighbors shared by i and j plus the direct adjacency
    A_ij (so adjacent degree-one pairs are not maximally dissimilar and
    sigma stays in [0,1]); ``literal_eta=True`` drops the adjacency term and
    counts shared neighbors only.  sigma is 0 whenever either node is
    isolated; d_ii = 0 by convention.
    """
    adj = _as_adj(graph)
    a = adj.astype(np.float64)
    eta = a @ a
    if not literal_eta:
        eta = eta + a
    np.fill_diagonal(eta, 0.0)
    deg = a.sum(axis=1)
    denom = np.sqrt(np.outer(deg, deg))
    with np.errstate(divide="ignore", invalid="ignore"):
        sigma = np.where(denom > 0, eta / np.where(denom > 0, denom, 1.0), 0.0)
    np.fill_diagonal(sigma, 1.0)
    d = 1.0 - sigma
    np.fill_diagonal(d, 0.0)
    return DissimMatrix(d=d, sigma=sigma, eta=eta)


def connectivity_indicator(graph) -> np.ndarray:
    """Boolean h_ij: true iff i and j are directly connected or share a neighbor.

    Equals sigma_ij > 0 under the adjacency-inclusive eta, i.e. the complement
    of the maximally dissimilar pairs (d_ij = 1).
    """
    adj = _as_adj(graph)
    a = adj.astype(np.float64)
    eta = a @ a + a
    h = eta > 0
    np.fill_diagonal(h, False)
    return h


def geodesic_mean(g: np.ndarray) -> float:
    """Average finite geodesic distance: (2/(p(p-1))) sum_{i<j} g_ij 1[g_ij < inf]."""
    p = g.shape[0]
    iu = np.triu_indices(p, k=1)
    vals = g[iu]
    finite = np.isfinite(vals)
    return float(2.0 * vals[finite].sum() / (p * (p - 1)))


def harmonic_mean(g: np.ndarray) -> float:
    """Harmonic mean of geodesic distances, with 1/inf contributing zero.

    Returns np.inf when every pair is disconnected (the AllDisconnected
    signal — callers test with np.isinf).
    """
    p = g.shape[0]
    iu = np.triu_indices(p, k=1)
    recip = 1.0 / g[iu]
    mean_recip = recip.mean()
    if mean_recip == 0.0:
        return float("inf")
    return float(1.0 / mean_recip)


def estrada_index(graph) -> float:
    """Sum of exp(eigenvalue) over the adjacency spectrum."""
    adj = _as_adj(graph)
    eig = np.linalg.eigvalsh(adj.astype(np.float64))
    return float(np.exp(eig).sum())


def avg_dissimilarity(dm) -> float:
    """Mean upper-triangle dissimilarity."""
    d = dm.d if isinstance(dm, DissimMatrix) else np.asarray(dm, dtype=float)
    p = d.shape[0]
    iu = np.triu_indices(p, k=1)
    return float(2.0 * d[iu].sum() / (p * (p - 1)))


def degree_histogram(graph) -> np.ndarray:
    """Fractions p_k of nodes with degree k, for k = 0..max degree (sums to 1)."""
    adj = _as_adj(graph)
    deg = adj.sum(axis=1).astype(int)
    counts = np.bincount(deg, minlength=1)
    return counts / adj.shape[0]


def stats_record(lam: float, graph, literal_eta: bool = False) -> dict:
    """One per-lambda statistics record for the JSONL export.

    Keys: lambda, edges, H, harmonic, estrada, AD, degree_hist (+ flags).
    Infinite harmonic mean is written as null with an AllDisconnected flag
    since JSON has no infinity.
    """
    adj = _as_adj(graph)
    g = geodesics(adj)
    dm = dissimilarities(adj, literal_eta=literal_eta)
    harm = harmonic_mean(g)
    flags = []
    if np.isinf(harm):
        flags.append("AllDisconnected")
    record = {
        "lambda": float(lam),
        "edges": int(adj.sum() // 2),
        "H": geodesic_mean(g),
        "harmonic": None if np.isinf(harm) else harm,
        "estrada": estrada_index(adj),
        "AD": avg_dissimilarity(dm),
        "degree_hist": [float(v) for v in degree_histogram(adj)],
    }
    if flags:
        record["flags"] = flags
    return record
