"""Sparse precision-matrix estimation along an l1 path.

Two estimators over the same lambda grid:

* GLasso — block coordinate descent on the covariance side of the penalized
  likelihood  max_{Omega > 0} logdet(Omega) - tr(S Omega) - lambda * ||Omega||_1.
  By default only off-diagonal entries are penalized (so any lambda above the
  largest off-diagonal of S yields the exact diagonal solution 1/S_ii);
  ``penalize_diagonal=True`` gives the literal all-entries norm.
* MB — per-node lasso regressions on standardized variables whose supports are
  combined into an adjacency estimate (OR rule by default).

Both support warm starts, which ``fit_path`` exploits by sweeping the grid
from the largest lambda down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from numba import njit

from .errors import InvalidGrid, SingularInput

# Off-diagonal magnitudes above this count as edges.
SUPPORT_EPS = 1e-8

GLASSO = "glasso"
MB = "mb"


@dataclass
class SampleCov:
    """Empirical second-moment matrix S = n^-1 sum_i x_i x_i^T with its counts."""

    s: np.ndarray
    n: int
    p: int

    def __post_init__(self):
        self.s = np.asarray(self.s, dtype=np.float64)
        if self.s.ndim != 2 or self.s.shape[0] != self.s.shape[1]:
            raise ValueError("S must be square")
        if self.p != self.s.shape[0]:
            raise ValueError("p does not match S")
        if self.p < 2 or self.n < 2:
            raise ValueError("need p >= 2 and n >= 2")
        if np.max(np.abs(self.s - self.s.T)) > 1e-12:
            raise ValueError("S must be symmetric within 1e-12")
        if np.any(np.diag(self.s) < 0):
            raise ValueError("S diagonal must be nonnegative")

    @classmethod
    def from_data(cls, x: np.ndarray, standardize: bool = True) -> "SampleCov":
        """Build S from an n x p data matrix.

        By default the columns are centered and scaled to unit variance, so S
        is the sample correlation matrix and one penalty grid is comparable
        across datasets regardless of the variables' measurement scales.  Pass
        ``standardize=False`` for the raw second-moment matrix of x as given.
        """
        x = np.asarray(x, dtype=np.float64)
        n, p = x.shape
        if standardize:
            x = x - x.mean(axis=0)
            scale = x.std(axis=0)
            scale[scale == 0.0] = 1.0
            x = x / scale
        s = x.T @ x / n
        s = (s + s.T) / 2.0
        return cls(s=s, n=n, p=p)


@dataclass
class PrecisionEstimate:
    """One GLasso solution: the precision matrix plus solver diagnostics."""

    omega: np.ndarray
    lam: float
    converged: bool
    iterations: int
    dual_gap: float

    def adjacency(self) -> np.ndarray:
        adj = np.abs(self.omega) > SUPPORT_EPS
        np.fill_diagonal(adj, False)
        return adj


@dataclass
class RegPath:
    """Estimates over an increasing, equally spaced lambda grid.

    ``estimates[k]`` is a PrecisionEstimate (GLasso), a boolean adjacency
    matrix (MB), or None when that grid point failed; failures are recorded
    in ``errors`` without aborting the rest of the path.
    """

    grid: np.ndarray
    estimates: list
    method: str
    tol: float
    errors: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    def adjacency(self, k: int) -> np.ndarray | None:
        est = self.estimates[k]
        if est is None:
            return None
        if isinstance(est, PrecisionEstimate):
            return est.adjacency()
        return est


@njit(cache=True, nogil=True)
def _glasso_sweep(S, W, B, lam, inner_tol, inner_max):
    """One block-coordinate sweep over all columns of W.

    B[j] holds the lasso coefficients of column j's subproblem (B[j, j] == 0).
    Returns the summed absolute change of updated off-diagonal W entries.
    """
    p = S.shape[0]
    u = np.empty(p)
    total_change = 0.0
    for j in range(p):
        beta = B[j]
        # u[k] = sum_l W[k, l] * beta[l]  (beta[j] is always 0)
        for k in range(p):
            u[k] = 0.0
        for l in range(p):
            bl = beta[l]
            if bl != 0.0:
                for k in range(p):
                    u[k] += W[k, l] * bl
        # Cyclic coordinate descent on
        #   min 0.5 b' W11 b - s12' b + lam ||b||_1
        for _ in range(inner_max):
            maxd = 0.0
            for k in range(p):
                if k == j:
                    continue
                wkk = W[k, k]
                if wkk <= 0.0:
                    continue
                r = S[k, j] - (u[k] - wkk * beta[k])
                if r > lam:
                    nb = (r - lam) / wkk
                elif r < -lam:
                    nb = (r + lam) / wkk
                else:
                    nb = 0.0
                d = nb - beta[k]
                if d != 0.0:
                    beta[k] = nb
                    for m in range(p):
                        u[m] += W[m, k] * d
                    ad = abs(d)
                    if ad > maxd:
                        maxd = ad
            if maxd <= inner_tol:
                break
        for k in range(p):
            if k == j:
                continue
            total_change += abs(u[k] - W[k, j])
            W[k, j] = u[k]
            W[j, k] = u[k]
    return total_change


@njit(cache=True, nogil=True)
def _recover_omega(W, B):
    """Invert the block decomposition: Omega from the final W and coefficients."""
    p = W.shape[0]
    omega = np.zeros((p, p))
    for j in range(p):
        dot = 0.0
        for k in range(p):
            if k != j:
                dot += W[k, j] * B[j, k]
        denom = W[j, j] - dot
        if denom < 1e-12:
            denom = 1e-12
        o22 = 1.0 / denom
        omega[j, j] = o22
        for k in range(p):
            if k != j:
                omega[k, j] = -B[j, k] * o22
    # symmetrize (columns are consistent up to convergence error)
    for i in range(p):
        for k in range(i + 1, p):
            v = 0.5 * (omega[i, k] + omega[k, i])
            omega[i, k] = v
            omega[k, i] = v
    return omega


def _dual_gap(S, omega, lam, penalize_diagonal):
    """tr(S Omega) - p + lam * ||Omega||_1 over the penalized entries (0 at the optimum)."""
    p = S.shape[0]
    gap = float(np.sum(S * omega)) - p
    pen = np.abs(omega).sum() if penalize_diagonal else (
        np.abs(omega).sum() - np.abs(np.diag(omega)).sum())
    gap += lam * pen
    return max(gap, 0.0)


def _certified_gap(S, W, omega, lam, penalize_diagonal):
    # The clipped gap above assumes omega == inv(W); mid-optimization the
    # recovered omega drifts from inv(W) and that formula can read zero
    # spuriously.  This is the plain primal-dual difference, valid for any
    # (omega, W) pair with W in the dual ball -- which the block updates
    # guarantee -- so it is a trustworthy convergence certificate.
    sign_o, logdet_o = np.linalg.slogdet(omega)
    sign_w, logdet_w = np.linalg.slogdet(W)
    if sign_o <= 0 or sign_w <= 0:
        return np.inf
    pen = np.abs(omega).sum() if penalize_diagonal else (
        np.abs(omega).sum() - np.abs(np.diag(omega)).sum())
    primal = -logdet_o + float(np.sum(S * omega)) + lam * pen
    dual = logdet_w + S.shape[0]
    return primal - dual


def glasso_fit(S: SampleCov, lam: float, warm_start: tuple | None = None,
               tol: float = 1e-4, max_iter: int = 200,
               penalize_diagonal: bool = False) -> PrecisionEstimate:
    """Fit the l1-penalized precision estimate for one lambda.

    Args:
        S: Sample second-moment matrix.
        lam: Penalty level, >= 0.
        warm_start: Optional (W, B) pair from a previous fit on the same S
            (as stored in ``PrecisionEstimate._state``); copied, not mutated.
        tol: Convergence tolerance — relative mean change of W between sweeps,
            and dual-gap bound.
        max_iter: Maximum number of full sweeps.
        penalize_diagonal: Include diagonal entries in the l1 penalty.

    Returns:
        PrecisionEstimate with ``converged`` False only when max_iter was hit
        with a dual gap still above tol.

    Raises:
        SingularInput: lam == 0 and S is not positive definite.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    s = S.s
    p = S.p
    if lam == 0.0:
        # exact MLE: Omega = S^-1
        try:
            c, low = scipy.linalg.cho_factor(s)
        except scipy.linalg.LinAlgError as exc:
            raise SingularInput("lambda = 0 requires a positive-definite S") from exc
        omega = scipy.linalg.cho_solve((c, low), np.eye(p))
        omega = (omega + omega.T) / 2.0
        est = PrecisionEstimate(omega=omega, lam=0.0, converged=True, iterations=0,
                                dual_gap=_dual_gap(s, omega, 0.0, penalize_diagonal))
        est._state = (s.copy(), np.zeros((p, p)))
        return est

    if warm_start is not None:
        W = warm_start[0].copy()
        B = warm_start[1].copy()
        # the diagonal is fixed by the current problem, not the previous one
        np.fill_diagonal(W, np.diag(s) + (lam if penalize_diagonal else 0.0))
    else:
        W = s.copy()
        np.fill_diagonal(W, np.diag(s) + (lam if penalize_diagonal else 0.0))
        B = np.zeros((p, p))

    off_mean = (np.abs(s).sum() - np.abs(np.diag(s)).sum()) / (p * (p - 1))
    thr = tol * off_mean if off_mean > 0 else tol
    inner_tol = min(1e-6, 0.01 * thr)

    converged = False
    omega = None
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        change = _glasso_sweep(s, W, B, lam, inner_tol, 1000)
        if change / (p * (p - 1)) <= thr:
            omega = _recover_omega(W, B)
            gap = _dual_gap(s, omega, lam, penalize_diagonal)
            if gap <= tol and _certified_gap(s, W, omega, lam,
                                             penalize_diagonal) <= tol:
                converged = True
                break
    if omega is None or (not converged and it >= max_iter):
        omega = _recover_omega(W, B)
        gap = _dual_gap(s, omega, lam, penalize_diagonal)
        converged = (gap <= tol and
                     _certified_gap(s, W, omega, lam, penalize_diagonal) <= tol)
    est = PrecisionEstimate(omega=omega, lam=float(lam), converged=bool(converged),
                            iterations=it, dual_gap=float(gap))
    est._state = (W, B)
    return est


@njit(cache=True, nogil=True)
def _mb_node(R, j, lam, beta, tol, max_iter):
    """Lasso of standardized column j on the others, on the correlation matrix R.

    beta is the warm-start coefficient vector for node j (modified in place).
    """
    p = R.shape[0]
    u = np.zeros(p)
    for l in range(p):
        bl = beta[l]
        if bl != 0.0:
            for k in range(p):
                u[k] += R[k, l] * bl
    for _ in range(max_iter):
        maxd = 0.0
        for k in range(p):
            if k == j or R[k, k] == 0.0:
                continue
            r = R[k, j] - (u[k] - R[k, k] * beta[k])
            if r > lam:
                nb = (r - lam) / R[k, k]
            elif r < -lam:
                nb = (r + lam) / R[k, k]
            else:
                nb = 0.0
            d = nb - beta[k]
            if d != 0.0:
                beta[k] = nb
                for m in range(p):
                    u[m] += R[m, k] * d
                ad = abs(d)
                if ad > maxd:
                    maxd = ad
        if maxd <= tol:
            break


def _correlation_matrix(x: np.ndarray):
    """Pearson correlations with zero-variance columns zeroed out.

    Returns (R, degenerate) where degenerate marks zero-variance columns;
    their rows/columns of R are zero (diagonal included) so the lasso
    kernels skip them and their nodes come back isolated.
    """
    x = np.asarray(x, dtype=np.float64)
    xc = x - x.mean(axis=0)
    sd = np.sqrt((xc ** 2).mean(axis=0))
    degenerate = sd == 0.0
    sd_safe = np.where(degenerate, 1.0, sd)
    xs = xc / sd_safe
    n = x.shape[0]
    R = xs.T @ xs / n
    R = (R + R.T) / 2.0
    R[degenerate, :] = 0.0
    R[:, degenerate] = 0.0
    return R, degenerate


def _mb_coefs(R: np.ndarray, degenerate: np.ndarray, lam: float,
              warm_start: np.ndarray | None, tol: float,
              max_iter: int) -> np.ndarray:
    """All per-node lasso coefficient vectors, rows indexed by response node."""
    p = R.shape[0]
    B = warm_start.copy() if warm_start is not None else np.zeros((p, p))
    for j in range(p):
        if degenerate[j]:
            B[j, :] = 0.0
            continue
        _mb_node(R, j, lam, B[j], tol, max_iter)
    return B


def _mb_adjacency(B: np.ndarray, rule: str) -> np.ndarray:
    sel = np.abs(B) > SUPPORT_EPS
    np.fill_diagonal(sel, False)
    return (sel | sel.T) if rule == "or" else (sel & sel.T)


def mb_fit(x: np.ndarray, lam: float, rule: str = "or", tol: float = 1e-6,
           max_iter: int = 1000) -> np.ndarray:
    """Neighborhood-selection adjacency estimate for one lambda.

    Args:
        x: n x p data matrix (columns centered; standardized internally).
        lam: Penalty on the standardized regression scale.
        rule: "or" (edge if either regression selects it) or "and".

    Returns:
        Symmetric boolean adjacency matrix (no precision values).
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if rule not in ("or", "and"):
        raise ValueError("rule must be 'or' or 'and'")
    R, degenerate = _correlation_matrix(x)
    B = _mb_coefs(R, degenerate, lam, None, tol, max_iter)
    return _mb_adjacency(B, rule)


def validate_grid(grid) -> np.ndarray:
    """Check the grid contract: strictly increasing, constant spacing."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2:
        raise InvalidGrid("grid needs at least two points")
    diffs = np.diff(grid)
    if np.any(diffs <= 0):
        raise InvalidGrid("grid must be strictly increasing")
    h = (grid[-1] - grid[0]) / (grid.size - 1)
    if np.max(np.abs(diffs - h)) > 1e-12:
        raise InvalidGrid("grid spacing must be constant within 1e-12")
    return grid


def fit_path(data, grid, method: str = GLASSO, tol: float = 1e-4,
             max_iter: int = 200, penalize_diagonal: bool = False,
             mb_rule: str = "or") -> RegPath:
    """Fit the whole regularization path, largest lambda first with warm starts.

    Args:
        data: SampleCov (GLasso) or n x p data matrix (either method).
        grid: Strictly increasing, equally spaced lambda values.
        method: "glasso" or "mb".

    Returns:
        RegPath with one estimate per grid point (ascending grid order).
    """
    grid = validate_grid(grid)
    m = grid.size
    estimates: list = [None] * m
    errors: dict = {}
    if method == GLASSO:
        S = data if isinstance(data, SampleCov) else SampleCov.from_data(data)
        warm = None
        for k in range(m - 1, -1, -1):
            try:
                est = glasso_fit(S, float(grid[k]), warm_start=warm, tol=tol,
                                 max_iter=max_iter,
                                 penalize_diagonal=penalize_diagonal)
            except SingularInput as exc:
                errors[k] = str(exc)
                continue
            estimates[k] = est
            warm = est._state
    elif method == MB:
        x = np.asarray(data, dtype=np.float64)
        if mb_rule not in ("or", "and"):
            raise ValueError("mb_rule must be 'or' or 'and'")
        R, degenerate = _correlation_matrix(x)
        warm = None
        for k in range(m - 1, -1, -1):
            warm = _mb_coefs(R, degenerate, float(grid[k]), warm, 1e-6, 1000)
            estimates[k] = _mb_adjacency(warm, mb_rule)
    else:
        raise ValueError(f"unknown method {method!r}")
    options = {"max_iter": max_iter, "penalize_diagonal": penalize_diagonal,
               "mb_rule": mb_rule}
    return RegPath(grid=grid, estimates=estimates, method=method, tol=tol,
                   errors=errors, options=options)
