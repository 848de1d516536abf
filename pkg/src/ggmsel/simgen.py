"""Synthetic ground truths: clustered random graphs, SPD precisions, MVN data.

Two topology families — hubs-based (a few high-degree nodes per cluster over
sparse background noise) and power-law (zeta-distributed degree sequences
realized by a configuration model) — on preset cluster layouts, turned into
precision matrices by signed Uniform(0.5, 0.9) edge weights with a unit
diagonal plus the smallest diagonal shift delta that brings the condition
number below p.  Data are iid rows from N(0, Omega^-1).

All draws run through dedicated streams (see rng.py) keyed by (seed, stage,
replicate), so replicates are independent and reproducible in any order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InfeasibleDegreeSequence
from .netstats import Graph
from .rng import PRECISION, SAMPLING, TOPOLOGY, rng_for

HUBS = "hubs"
POWERLAW = "powerlaw"

# Cluster layouts used throughout the simulations, by total node count.
CLUSTER_TABLES = {
    50: (50,),
    170: (70, 60, 40),
    290: (70, 100, 40, 50, 30),
    500: (100, 100, 80, 60, 60, 70, 30),
}

# name -> (cluster_sizes, topology, SimSpec overrides); the nonclustered
# variant is a single-block random graph (no hubs, background edges only)
# whose density range roughly matches the clustered layout at the same p.
PRESETS = {
    "p50-hubs": (CLUSTER_TABLES[50], HUBS, {}),
    "p50-powerlaw": (CLUSTER_TABLES[50], POWERLAW, {}),
    "p170-hubs": (CLUSTER_TABLES[170], HUBS, {}),
    "p170-powerlaw": (CLUSTER_TABLES[170], POWERLAW, {}),
    "p170-nonclustered": ((170,), HUBS, {
        "hub_prob": 0.0,
        "background_edge_prob_range": (0.01, 0.05),
    }),
    "p290-hubs": (CLUSTER_TABLES[290], HUBS, {}),
    "p290-powerlaw": (CLUSTER_TABLES[290], POWERLAW, {}),
    "p500-hubs": (CLUSTER_TABLES[500], HUBS, {}),
    "p500-powerlaw": (CLUSTER_TABLES[500], POWERLAW, {}),
}


@dataclass
class SimSpec:
    """Everything that defines one synthetic dataset family."""

    p: int
    n: int
    topology: str
    cluster_sizes: tuple
    hub_prob: float = 0.015
    background_edge_prob_range: tuple = (0.005, 0.03)
    between_cluster_prob_range: tuple = (0.0, 0.1)
    alpha: float = 2.3
    seed: int = 0
    # One between-cluster probability per dataset by default; True draws one
    # per cluster pair instead.
    between_per_pair: bool = False

    def __post_init__(self):
        self.cluster_sizes = tuple(int(s) for s in self.cluster_sizes)
        if self.topology not in (HUBS, POWERLAW):
            raise ValueError(f"unknown topology {self.topology!r}")
        if not self.cluster_sizes or any(s < 2 for s in self.cluster_sizes):
            raise ValueError("cluster sizes must be nonempty, each >= 2")
        if sum(self.cluster_sizes) != self.p:
            raise ValueError("cluster sizes must sum to p")
        for lo, hi in (self.background_edge_prob_range,
                       self.between_cluster_prob_range):
            if not (0.0 <= lo <= hi <= 1.0):
                raise ValueError("probability ranges must be within [0, 1]")
        if not 0.0 <= self.hub_prob <= 1.0:
            raise ValueError("hub_prob must be in [0, 1]")
        if self.alpha <= 1.0:
            raise ValueError("alpha must exceed 1")
        if self.n < 1:
            raise ValueError("n must be positive")


def preset_spec(name: str, n: int, seed: int = 0) -> SimSpec:
    """SimSpec for a named preset (see PRESETS for the valid names)."""
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; valid presets: "
                         + ", ".join(sorted(PRESETS)))
    sizes, topology, overrides = PRESETS[name]
    return SimSpec(p=sum(sizes), n=n, topology=topology, cluster_sizes=sizes,
                   seed=seed, **overrides)


@dataclass
class GroundTruth:
    """True graph, its SPD precision matrix, and how they were produced."""

    graph: Graph
    omega: np.ndarray
    delta: float
    cluster_assignment: np.ndarray = None


def _hub_cluster(rng, adj, nodes, hub_prob):
    """Place hub stars inside one cluster (edges into adj, in place)."""
    size = nodes.size
    b = math.ceil(size / 3)
    hubs = np.flatnonzero(rng.random(size) < hub_prob)
    for i in hubs:
        if b <= 5:
            deg = 5
        else:
            deg = int(math.floor(rng.uniform(5.0, float(b))))
        deg = min(deg, size - 1)
        others = rng.choice(size - 1, size=deg, replace=False)
        others = others + (others >= i)  # skip the hub's own slot
        adj[nodes[i], nodes[others]] = True
        adj[nodes[others], nodes[i]] = True


def _background_cluster(rng, adj, nodes, prob_range):
    """Bernoulli edges on the not-yet-edged within-cluster pairs."""
    size = nodes.size
    q = rng.uniform(*prob_range)
    draws = rng.random((size, size))
    ii, jj = np.triu_indices(size, k=1)
    block = adj[np.ix_(nodes, nodes)]
    hit = (draws[ii, jj] < q) & ~block[ii, jj]
    adj[nodes[ii[hit]], nodes[jj[hit]]] = True
    adj[nodes[jj[hit]], nodes[ii[hit]]] = True


def _powerlaw_degrees(rng, size, alpha):
    """Degree sequence from the zeta pmf p_k ~ k^-alpha truncated at size - 1."""
    ks = np.arange(1, size)
    pmf = ks.astype(np.float64) ** (-alpha)
    pmf /= pmf.sum()
    for _ in range(1000):
        deg = rng.choice(ks, size=size, p=pmf)
        if int(deg.sum()) % 2 == 0:
            return deg
    raise InfeasibleDegreeSequence("no even-total degree sequence in 1000 draws")


def _pair_stubs(rng, deg, rounds=100):
    """Configuration-model pairing; None when every round had a collision."""
    size = deg.size
    stubs = np.repeat(np.arange(size), deg)
    for _ in range(rounds):
        perm = rng.permutation(stubs)
        a, b = perm[0::2], perm[1::2]
        if np.any(a == b):
            continue
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        keys = lo * size + hi
        if np.unique(keys).size != keys.size:
            continue
        return lo, hi
    return None


def _powerlaw_cluster(rng, adj, nodes, alpha, max_resamples=100):
    """Realize one power-law cluster, resampling infeasible sequences."""
    size = nodes.size
    for _ in range(max_resamples):
        deg = _powerlaw_degrees(rng, size, alpha)
        pairing = _pair_stubs(rng, deg)
        if pairing is None:
            continue
        lo, hi = pairing
        adj[nodes[lo], nodes[hi]] = True
        adj[nodes[hi], nodes[lo]] = True
        return
    raise InfeasibleDegreeSequence(
        f"no simple realization for a cluster of {size} in {max_resamples} resamples")


def gen_topology(spec: SimSpec, rep: int = 0):
    """Draw one true graph.

    Args:
        spec: Generation parameters.
        rep: Replicate index (selects the random stream).

    Returns:
        (Graph, cluster_assignment) with assignment[i] the cluster id of node i.
    """
    rng = rng_for(spec.seed, TOPOLOGY, rep)
    p = spec.p
    adj = np.zeros((p, p), dtype=bool)
    assignment = np.zeros(p, dtype=np.int64)

    start = 0
    blocks = []
    for c, size in enumerate(spec.cluster_sizes):
        nodes = np.arange(start, start + size)
        blocks.append(nodes)
        assignment[nodes] = c
        if spec.topology == HUBS:
            _hub_cluster(rng, adj, nodes, spec.hub_prob)
            _background_cluster(rng, adj, nodes, spec.background_edge_prob_range)
        else:
            _powerlaw_cluster(rng, adj, nodes, spec.alpha)
        start += size

    if len(blocks) > 1:
        lo_q, hi_q = spec.between_cluster_prob_range
        q = None if spec.between_per_pair else rng.uniform(lo_q, hi_q)
        for a in range(len(blocks)):
            for b in range(a + 1, len(blocks)):
                qq = rng.uniform(lo_q, hi_q) if spec.between_per_pair else q
                draws = rng.random((blocks[a].size, blocks[b].size))
                ai, bj = np.where(draws < qq)
                adj[blocks[a][ai], blocks[b][bj]] = True
                adj[blocks[b][bj], blocks[a][ai]] = True
    return Graph(adj), assignment


def _delta_shift(gmin: float, gmax: float, p: int) -> float:
    """Smallest diagonal shift making (gmax + d)/(gmin + d) < p, by
    doubling then bisection (0 when the spectrum already qualifies)."""

    def ok(d):
        return gmin + d > 0.0 and gmax + d < p * (gmin + d)

    if ok(0.0):
        return 0.0
    hi = 1.0
    while not ok(hi):
        hi *= 2.0
    lo = 0.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def gen_precision(graph: Graph, seed: int, rep: int = 0,
                  cluster_assignment: np.ndarray | None = None) -> GroundTruth:
    """SPD precision matrix with exactly the graph's support.

    Edge weights are Uniform(0.5, 0.9) magnitudes with independent fair
    signs on a unit diagonal; a diagonal shift delta (smallest such, up to
    1e-10) then forces the condition number below p.
    """
    adj = graph.adjacency
    p = graph.p
    omega = np.eye(p)
    iu = np.where(np.triu(adj, k=1))
    m = iu[0].size
    if m:
        rng = rng_for(seed, PRECISION, rep)
        mags = rng.uniform(0.5, 0.9, size=m)
        signs = np.where(rng.random(m) < 0.5, -1.0, 1.0)
        weights = signs * mags
        omega[iu] = weights
        omega[(iu[1], iu[0])] = weights
    eig = np.linalg.eigvalsh(omega)
    delta = _delta_shift(float(eig[0]), float(eig[-1]), p)
    omega = omega + delta * np.eye(p)
    if cluster_assignment is None:
        cluster_assignment = np.zeros(p, dtype=np.int64)
    return GroundTruth(graph=graph, omega=omega, delta=delta,
                       cluster_assignment=np.asarray(cluster_assignment))


def sample_mvn(gt: GroundTruth, n: int, seed: int, rep: int = 0) -> np.ndarray:
    """n iid rows from N(0, Omega^-1) via the Cholesky factor of Omega.

    Solves against the factor instead of inverting: x = L^-T z with
    Omega = L L^T, so cov(x) = (L L^T)^-1.
    """
    p = gt.omega.shape[0]
    lower = np.linalg.cholesky(gt.omega)
    z = rng_for(seed, SAMPLING, rep).standard_normal((n, p))
    x = scipy.linalg.solve_triangular(lower, z.T, lower=True, trans="T").T
    return np.ascontiguousarray(x)


def generate_replicate(spec: SimSpec, rep: int = 0):
    """One full replicate: (GroundTruth, n x p data matrix)."""
    graph, assignment = gen_topology(spec, rep)
    gt = gen_precision(graph, spec.seed, rep, cluster_assignment=assignment)
    x = sample_mvn(gt, spec.n, spec.seed, rep)
    return gt, x
