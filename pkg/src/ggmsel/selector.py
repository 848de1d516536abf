"""Penalty-level selection on a fitted regularization path.

Three selectors built on network characteristics — path connectivity (the
normalized jump of the mean geodesic distance), subsampled dissimilarity
risk (A-MSE), and the agglomerative coefficient — next to three baselines:
stability selection (StARS) and the analytic information criteria AIC/BIC.

Every method returns a :class:`RiskCurve`; undefined grid points are NaN in
``values`` and soft conditions are accumulated in ``flags`` rather than
raised.  Ties on the defining extremum resolve toward the larger lambda
(sparser model); a curve that is constant across all defined points falls
back to the first defined grid point with an ``AllTied`` flag.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .agnes import WPGMA, ac_coefficient, agnes_cluster
from .errors import MissingPrecision, NoMethods, PathMismatch
from .estimator import GLASSO, MB, PrecisionEstimate, RegPath, SampleCov, fit_path
from .netstats import dissimilarities, geodesic_mean, geodesics
from .rng import SUBSAMPLE, rng_for

PC = "pc"
AMSE = "amse"
AGNES_AC = "agnes"
STARS = "stars"
AIC = "aic"
BIC = "bic"
METHODS = (PC, AMSE, AGNES_AC, STARS, AIC, BIC)

HALF_N = "half_n"
TEN_SQRT_N = "ten_sqrt_n"


@dataclass
class SubsampleConfig:
    """Shared knobs of the subsampling selectors.

    size None picks the method's own rule: ceil(n/2) for the dissimilarity
    risk, min(ceil(10 sqrt(n)), n - 1) for stability selection.  An explicit
    size equal to n degenerates to refitting the full data T times and is
    flagged, not rejected.  rep keys the random streams so that replicates
    of one experiment draw independent subsamples from the same seed.
    """

    t: int = 50
    size: int | None = None
    seed: int = 0
    rep: int = 0

    def __post_init__(self):
        if self.t < 2:
            raise ValueError("need at least two subsamples")

    def resolve(self, n: int, rule: str) -> tuple[int, list[str]]:
        if self.size is not None:
            b = int(self.size)
        elif rule == HALF_N:
            b = int(np.ceil(0.5 * n))
        elif rule == TEN_SQRT_N:
            b = min(int(np.ceil(10.0 * np.sqrt(n))), n - 1)
        else:
            raise ValueError(f"unknown subsample rule {rule!r}")
        if not 2 <= b <= n:
            raise ValueError(f"subsample size {b} out of range for n={n}")
        flags = ["DegenerateSubsample"] if b == n else []
        return b, flags


@dataclass
class RiskCurve:
    """One method's risk values over the grid and the lambda it picked.

    direction is "min" or "max" for extremum selectors and "threshold" for
    stability selection (whose pick is the smallest stable lambda, not an
    extremum of ``values``).  selected_lambda is None only when the method
    could not choose (e.g. a flat connectivity path).
    """

    method: str
    grid: np.ndarray
    values: np.ndarray
    selected_lambda: float | None
    selected_index: int | None
    direction: str
    flags: list = field(default_factory=list)
    config: dict = field(default_factory=dict)


def _select_extremum(values: np.ndarray, direction: str):
    """Index of the extremum with the tie policy; (None, flags) if nothing defined."""
    defined = np.flatnonzero(~np.isnan(values))
    if defined.size == 0:
        return None, ["NoDefinedValue"]
    vals = values[defined]
    if defined.size > 1 and np.all(vals == vals[0]):
        return int(defined[0]), ["AllTied"]
    best = vals.max() if direction == "max" else vals.min()
    tied = defined[vals == best]
    flags = ["Ties"] if tied.size > 1 else []
    return int(tied.max()), flags


def _path_dissims(path: RegPath):
    """Dissimilarity matrix per grid point (None where the estimate failed)."""
    return [None if (adj := path.adjacency(k)) is None else dissimilarities(adj).d
            for k in range(len(path.grid))]


def pc_from_h(grid: np.ndarray, h: np.ndarray, variant: str = "forward") -> RiskCurve:
    """Path-connectivity selection from precomputed mean geodesic distances.

    D_k = H_k - H_{k-1} are the forward differences of the connectivity
    curve.  Each defined D_k is normalized by the mean of the differences
    from k onward ("forward", default) or up to k ("backward"), and the
    largest absolute ratio wins.  Grid points whose running mean is exactly
    zero are excluded (ZeroRunningAverage); a path with every difference
    zero makes no selection and is flagged FlatPath.  NaN H values (failed
    grid points) drop out of the differences and running means.
    """
    if variant not in ("forward", "backward"):
        raise ValueError(f"unknown variant {variant!r}")
    grid = np.asarray(grid, dtype=float)
    h = np.asarray(h, dtype=float)
    m = grid.size
    d = np.full(m, np.nan)
    d[1:] = h[1:] - h[:-1]
    defined = ~np.isnan(d)
    config = {"variant": variant, "h": [None if np.isnan(v) else float(v) for v in h]}

    flags: list = []
    values = np.full(m, np.nan)
    if not defined.any():
        return RiskCurve(PC, grid, values, None, None, "max",
                         ["NoDefinedValue"], config)
    if np.all(d[defined] == 0.0):
        return RiskCurve(PC, grid, values, None, None, "max", ["FlatPath"], config)

    zero_running = False
    for k in np.flatnonzero(defined):
        window = d[k:] if variant == "forward" else d[1:k + 1]
        running = np.nanmean(window)
        if running == 0.0:
            zero_running = True
            continue
        values[k] = abs(d[k]) / abs(running)
    if zero_running:
        flags.append("ZeroRunningAverage")
    idx, sel_flags = _select_extremum(values, "max")
    flags.extend(sel_flags)
    lam = float(grid[idx]) if idx is not None else None
    return RiskCurve(PC, grid, values, lam, idx, "max", flags, config)


def pc_select(path: RegPath, variant: str = "forward") -> RiskCurve:
    """Path connectivity: largest mean-geodesic jump relative to its running mean.

    H(lambda_k) is the average finite geodesic distance of the estimate at
    grid point k; see :func:`pc_from_h` for the selection rule.
    """
    m = path.grid.size
    h = np.full(m, np.nan)
    for k in range(m):
        adj = path.adjacency(k)
        if adj is not None:
            h[k] = geodesic_mean(geodesics(adj))
    return pc_from_h(path.grid, h, variant=variant)


def agnes_select(path: RegPath, linkage: str = WPGMA) -> RiskCurve:
    """Largest agglomerative coefficient of the per-lambda dissimilarity matrices."""
    grid = path.grid
    m = grid.size
    values = np.full(m, np.nan)
    flags: list = []
    degenerate = False
    for k, dk in enumerate(_path_dissims(path)):
        if dk is None:
            continue
        dend = agnes_cluster(dk, linkage=linkage)
        if dend.degenerate:
            degenerate = True
        values[k] = ac_coefficient(dend)
    if degenerate:
        flags.append("DegenerateDendrogram")
    idx, sel_flags = _select_extremum(values, "max")
    flags.extend(sel_flags)
    lam = float(grid[idx]) if idx is not None else None
    return RiskCurve(AGNES_AC, grid, values, lam, idx, "max", flags,
                     {"linkage": linkage})


def _refit_path(data: np.ndarray, path: RegPath) -> RegPath:
    """Fit the same path configuration on (a subsample of) the data."""
    opts = path.options
    return fit_path(data, path.grid, method=path.method, tol=path.tol,
                    max_iter=opts.get("max_iter", 200),
                    penalize_diagonal=opts.get("penalize_diagonal", False),
                    mb_rule=opts.get("mb_rule", "or"))


def _subsample_adjacencies(x: np.ndarray, path: RegPath, cfg: SubsampleConfig,
                           b: int, jobs: int):
    """Per-subsample lists of adjacencies along the path, in subsample order.

    Each subsample owns the stream (seed, SUBSAMPLE, rep, s), so the yielded
    sequence is identical however many threads run the refits.
    """

    def one(s: int):
        rows = rng_for(cfg.seed, SUBSAMPLE, cfg.rep, s).choice(
            x.shape[0], size=b, replace=False)
        sub = _refit_path(x[rows], path)
        return [sub.adjacency(k) for k in range(path.grid.size)]

    if jobs <= 1:
        for s in range(cfg.t):
            yield one(s)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(one, s) for s in range(cfg.t)]
        for future in futures:
            yield future.result()


def amse_risk_from_tables(dissims: np.ndarray, d_ref: np.ndarray,
                          q: float = 2.0) -> np.ndarray:
    """Subsampled dissimilarity risk from precomputed tables.

    Args:
        dissims: (T, M, p, p) per-subsample, per-grid-point dissimilarity
            matrices; a cell full of NaN marks a failed fit and is excluded.
        d_ref: (p, p) reference dissimilarity matrix.
        q: Exponent of the entrywise deviation.

    Returns:
        Length-M risk values, NaN where every subsample failed.
    """
    t, m, p, _ = dissims.shape
    if d_ref.shape != (p, p):
        raise PathMismatch("reference matrix does not match the tables")
    iu = np.triu_indices(p, k=1)
    risk = np.full(m, np.nan)
    for k in range(m):
        total = 0.0
        count = 0
        for s in range(t):
            cell = dissims[s, k]
            if np.isnan(cell).any():
                continue
            total += float(np.sum(np.abs(cell[iu] - d_ref[iu]) ** q))
            count += 1
        if count:
            risk[k] = total / count
    return risk


def amse_select(data: np.ndarray, path: RegPath, init_lambda: float,
                cfg: SubsampleConfig | None = None, q: float = 2.0,
                jobs: int = 1) -> RiskCurve:
    """Subsampled dissimilarity risk around a full-data reference.

    The reference is the dissimilarity matrix of the full-data estimate at
    ``init_lambda`` (a grid point — in the full procedure the one the
    agglomerative coefficient picked).  T row subsamples of size B are drawn
    without replacement, the whole path is refit on each, and the risk at
    grid point k is the average over subsamples of the summed upper-triangle
    deviation |d_hat - d_ref|^q.  Failed subsample fits drop out of that
    cell's average (SubsampleFitFailure).
    """
    cfg = cfg or SubsampleConfig()
    x = np.asarray(data, dtype=np.float64)
    n = x.shape[0]
    grid = path.grid
    m = grid.size
    hits = np.flatnonzero(np.abs(grid - init_lambda) <= 1e-12)
    if hits.size == 0:
        raise ValueError("init_lambda must be a grid point")
    k0 = int(hits[0])
    ref_adj = path.adjacency(k0)
    if ref_adj is None:
        raise ValueError("no estimate at init_lambda on the full data")
    d_ref = dissimilarities(ref_adj).d
    iu = np.triu_indices(x.shape[1], k=1)
    ref_vec = d_ref[iu]

    b, flags = cfg.resolve(n, HALF_N)
    totals = np.zeros(m)
    counts = np.zeros(m, dtype=np.int64)
    failed = False
    for adjs in _subsample_adjacencies(x, path, cfg, b, jobs):
        for k, adj in enumerate(adjs):
            if adj is None:
                failed = True
                continue
            dev = dissimilarities(adj).d[iu] - ref_vec
            totals[k] += np.sum(np.abs(dev) ** q)
            counts[k] += 1
    if failed:
        flags.append("SubsampleFitFailure")
    values = np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)
    idx, sel_flags = _select_extremum(values, "min")
    flags.extend(sel_flags)
    lam = float(grid[idx]) if idx is not None else None
    return RiskCurve(AMSE, grid, values, lam, idx, "min", flags,
                     {"q": q, "t": int(cfg.t), "b": int(b),
                      "init_lambda": float(grid[k0]), "seed": int(cfg.seed),
                      "rep": int(cfg.rep)})


def stars_instability(theta: np.ndarray) -> np.ndarray:
    """Mean edge instability 2 theta (1 - theta) over all node pairs.

    theta is (M, p, p) edge selection frequencies; returns length-M values.
    """
    m, p, _ = theta.shape
    iu = np.triu_indices(p, k=1)
    xi = 2.0 * theta * (1.0 - theta)
    return np.array([xi[k][iu].mean() for k in range(m)])


def monotonize_instability(d_hat: np.ndarray) -> np.ndarray:
    """Supremum of the instability over this and all sparser grid points.

    NaN cells stay NaN and do not feed the running maximum.
    """
    m = d_hat.size
    out = np.full(m, np.nan)
    best = -np.inf
    for k in range(m - 1, -1, -1):
        if not np.isnan(d_hat[k]):
            best = max(best, d_hat[k])
            out[k] = best
    return out


def stars_select(data: np.ndarray, path: RegPath, cfg: SubsampleConfig | None = None,
                 beta: float = 0.05, jobs: int = 1) -> RiskCurve:
    """Stability selection: smallest lambda whose monotonized instability is <= beta.

    Edge selection frequencies over T subsamples of size B give the mean
    instability 2 theta (1 - theta) per grid point, monotonized from the
    sparse end down; selection takes the first (smallest) lambda at or below
    beta.  If none qualifies the largest defined lambda is returned with a
    NoStableLambda flag.
    """
    if not 0.0 < beta < 0.5:
        raise ValueError("beta must be in (0, 0.5)")
    cfg = cfg or SubsampleConfig()
    x = np.asarray(data, dtype=np.float64)
    n, p = x.shape
    grid = path.grid
    m = grid.size
    b, flags = cfg.resolve(n, TEN_SQRT_N)

    edge_counts = np.zeros((m, p, p))
    fit_counts = np.zeros(m, dtype=np.int64)
    failed = False
    for adjs in _subsample_adjacencies(x, path, cfg, b, jobs):
        for k, adj in enumerate(adjs):
            if adj is None:
                failed = True
                continue
            edge_counts[k] += adj
            fit_counts[k] += 1
    if failed:
        flags.append("SubsampleFitFailure")

    d_hat = np.full(m, np.nan)
    for k in range(m):
        if fit_counts[k] > 0:
            theta = edge_counts[k] / fit_counts[k]
            d_hat[k] = stars_instability(theta[None])[0]
    curve = stars_from_instability(grid, d_hat, beta)
    curve.flags = flags + curve.flags
    curve.config.update({"t": int(cfg.t), "b": int(b), "seed": int(cfg.seed),
                         "rep": int(cfg.rep)})
    return curve


def stars_from_instability(grid: np.ndarray, d_hat: np.ndarray,
                           beta: float = 0.05) -> RiskCurve:
    """Stability selection from precomputed per-grid-point instabilities.

    Monotonizes d_hat from the sparse end down and takes the smallest lambda
    at or below beta; with none qualifying, the largest defined lambda is
    returned flagged NoStableLambda.
    """
    grid = np.asarray(grid, dtype=float)
    values = monotonize_instability(np.asarray(d_hat, dtype=float))
    flags: list = []
    idx = None
    for k in range(grid.size):
        if not np.isnan(values[k]) and values[k] <= beta:
            idx = k
            break
    if idx is None:
        defined = np.flatnonzero(~np.isnan(values))
        if defined.size == 0:
            return RiskCurve(STARS, grid, values, None, None, "threshold",
                             ["NoDefinedValue"], {"beta": beta})
        idx = int(defined[-1])
        flags.append("NoStableLambda")
    return RiskCurve(STARS, grid, values, float(grid[idx]), idx, "threshold",
                     flags, {"beta": beta})


def ic_scores(S: SampleCov, path: RegPath, flavor: str) -> np.ndarray:
    """AIC/BIC scores -n (logdet Omega - tr(S Omega)) + penalty * df along the path.

    df counts the nonzero upper off-diagonal entries of the precision
    estimate; the penalty factor is 2 (aic) or log n (bic).
    """
    if flavor not in (AIC, BIC):
        raise ValueError(f"unknown flavor {flavor!r}")
    if path.method != GLASSO:
        raise MissingPrecision("information criteria need precision estimates; "
                               "the path has adjacency-only estimates")
    pen = 2.0 if flavor == AIC else float(np.log(S.n))
    m = path.grid.size
    scores = np.full(m, np.nan)
    for k in range(m):
        est = path.estimates[k]
        if est is None:
            continue
        sign, logdet = np.linalg.slogdet(est.omega)
        if sign <= 0:
            continue
        df = int(est.adjacency()[np.triu_indices(S.p, k=1)].sum())
        ll = logdet - float(np.sum(S.s * est.omega))
        scores[k] = -S.n * ll + pen * df
    return scores


def ic_select(S: SampleCov, path: RegPath, flavor: str) -> RiskCurve:
    """Smallest information-criterion score along the path (ties toward sparser)."""
    values = ic_scores(S, path, flavor)
    idx, flags = _select_extremum(values, "min")
    lam = float(path.grid[idx]) if idx is not None else None
    return RiskCurve(flavor, path.grid, values, lam, idx, "min", flags,
                     {"n": int(S.n)})


@dataclass
class SelectionReport:
    """Fitted path plus one RiskCurve per requested method.

    Methods that errored out (rather than merely flagging) appear in
    ``errors`` as method -> message and are missing from ``curves``.
    """

    path: RegPath
    curves: dict
    errors: dict = field(default_factory=dict)


def select_all(data, grid, methods, estimator: str = GLASSO,
               cfg: SubsampleConfig | None = None, q: float = 2.0,
               beta: float = 0.05, linkage: str = WPGMA,
               pc_variant: str = "forward", tol: float = 1e-4,
               max_iter: int = 200, penalize_diagonal: bool = False,
               mb_rule: str = "or", jobs: int = 1) -> SelectionReport:
    """Fit one path and run every requested selection method on it.

    Args:
        data: n x p data matrix.
        grid: Strictly increasing, equally spaced lambda values.
        methods: Nonempty subset of pc/amse/agnes/stars/aic/bic.
        estimator: "glasso" or "mb".
        cfg: Subsampling configuration shared by amse and stars.
        q: A-MSE deviation exponent.
        beta: StARS instability threshold.

    Returns:
        SelectionReport; per-method failures land in ``errors`` without
        aborting the other methods.

    Raises:
        NoMethods: methods is empty.
        ValueError: unknown method name.
    """
    methods = list(methods)
    if not methods:
        raise NoMethods("no selection methods requested")
    unknown = [name for name in methods if name not in METHODS]
    if unknown:
        raise ValueError(f"unknown methods: {unknown}")
    x = np.asarray(data, dtype=np.float64)
    path = fit_path(x, grid, method=estimator, tol=tol, max_iter=max_iter,
                    penalize_diagonal=penalize_diagonal, mb_rule=mb_rule)
    cfg = cfg or SubsampleConfig()

    curves: dict = {}
    errors: dict = {}

    # The dissimilarity risk seeds from the AC pick, so compute that curve
    # whenever either method was requested.
    agnes_curve = None
    if AGNES_AC in methods or AMSE in methods:
        agnes_curve = agnes_select(path, linkage=linkage)
    for name in methods:
        try:
            if name == PC:
                curves[name] = pc_select(path, variant=pc_variant)
            elif name == AGNES_AC:
                curves[name] = agnes_curve
            elif name == AMSE:
                if agnes_curve.selected_lambda is None:
                    raise ValueError("no AC pick to seed the dissimilarity risk")
                curves[name] = amse_select(x, path, agnes_curve.selected_lambda,
                                           cfg=cfg, q=q, jobs=jobs)
            elif name == STARS:
                curves[name] = stars_select(x, path, cfg=cfg, beta=beta,
                                            jobs=jobs)
            else:
                S = SampleCov.from_data(x)
                curves[name] = ic_select(S, path, name)
        except Exception as exc:  # noqa: BLE001 — per-method isolation
            errors[name] = f"{type(exc).__name__}: {exc}"
    return SelectionReport(path=path, curves=curves, errors=errors)
