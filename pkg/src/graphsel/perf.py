"""Performance matrix storage, factorization, and corruption ops.

The matrix P holds per-(graph, model) performance in [0, 1] with an
observation mask; unobserved cells carry NaN so accidental use propagates
loudly. Factorization is non-negative with multiplicative updates on the
observed cells only. The factor estimator is a closed-form ridge regression
from meta-features to latent graph factors.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

NMF_MAX_ITER = 500
NMF_REL_TOL = 1e-6
NMF_EPS = 1e-10
RIDGE_LAMBDA = 1e-3


@dataclass
class PerformanceMatrix:
    """values: (n, m) float64, NaN where unobserved; observed: bool mask."""

    values: np.ndarray
    observed: np.ndarray
    graph_ids: list[str]
    model_ids: list[str]

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        o = np.asarray(self.observed, dtype=bool)
        if v.shape != o.shape or v.ndim != 2:
            raise ValueError("values and observed must be equal-shape 2-D arrays")
        if len(self.graph_ids) != v.shape[0] or len(self.model_ids) != v.shape[1]:
            raise ValueError("id lists must match matrix shape")
        obs_vals = v[o]
        if obs_vals.size and (np.any(~np.isfinite(obs_vals))
                              or obs_vals.min() < 0.0 or obs_vals.max() > 1.0):
            raise ValueError("observed performance values must lie in [0, 1]")
        v = v.copy()
        v[~o] = np.nan
        self.values = v
        self.observed = o

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def filled(self, fill: float = 0.0) -> np.ndarray:
        return np.where(self.observed, self.values, fill)

    def rows(self, idx) -> "PerformanceMatrix":
        idx = np.asarray(idx)
        return PerformanceMatrix(self.values[idx], self.observed[idx],
                                 [self.graph_ids[i] for i in idx], list(self.model_ids))


def to_csv(p: PerformanceMatrix) -> str:
    """Header row of model ids; one row per graph; empty cell = unobserved.

    Floats use repr precision so a round-trip is lossless.
    """
    buf = io.StringIO()
    buf.write("graph_id," + ",".join(p.model_ids) + "\n")
    for i, gid in enumerate(p.graph_ids):
        cells = [gid]
        for j in range(len(p.model_ids)):
            cells.append(repr(float(p.values[i, j])) if p.observed[i, j] else "")
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def from_csv(text: str) -> PerformanceMatrix:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("empty performance csv")
    header = lines[0].split(",")
    if header[0] != "graph_id" or len(header) < 2:
        raise ValueError("performance csv must start with 'graph_id,<model ids>'")
    model_ids = header[1:]
    graph_ids, rows, mask = [], [], []
    for ln_no, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(f"line {ln_no}: expected {len(header)} cells, got {len(cells)}")
        graph_ids.append(cells[0])
        vals, obs = [], []
        for c in cells[1:]:
            c = c.strip()
            if c == "":
                vals.append(np.nan)
                obs.append(False)
            else:
                vals.append(float(c))
                obs.append(True)
        rows.append(vals)
        mask.append(obs)
    return PerformanceMatrix(np.asarray(rows, dtype=np.float64),
                             np.asarray(mask, dtype=bool), graph_ids, model_ids)


@dataclass
class LatentFactors:
    u: np.ndarray
    v: np.ndarray
    k: int
    objective_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))


def factorize(p: PerformanceMatrix, k: int, seed: int,
              max_iter: int = NMF_MAX_ITER, rel_tol: float = NMF_REL_TOL,
              mean_prior_weight: float = 0.0) -> LatentFactors:
    """Masked non-negative factorization P ~= U V^T by multiplicative updates.

    Only observed cells enter the weighted Frobenius objective, which is
    non-increasing under these updates. Rows/columns with no observations
    cannot be fit; they are dropped for the updates and reinserted as the
    mean of the fitted factors, with a warning.

    mean_prior_weight > 0 additionally pulls every unobserved cell toward
    its column's observed mean with that weight (observed cells keep weight
    1). Under heavy masking the plain objective has far more free factor
    entries than data and interpolates noise; the prior degrades the fit
    toward column-level structure instead. A fully observed matrix is
    unaffected.
    """
    n, m = p.shape
    if k < 1 or k > min(n, m):
        raise ValueError(f"rank k={k} must lie in [1, min(n, m)={min(n, m)}]")
    if not 0.0 <= mean_prior_weight <= 1.0:
        raise ValueError("mean_prior_weight must lie in [0, 1]")
    w_full = p.observed.astype(np.float64)
    if not w_full.any():
        raise ValueError("cannot factorize a fully unobserved matrix")
    if mean_prior_weight > 0.0 and not p.observed.all():
        col_sum = np.where(p.observed, p.values, 0.0).sum(axis=0)
        col_cnt = p.observed.sum(axis=0)
        grand = col_sum.sum() / col_cnt.sum()
        col_mean = np.where(col_cnt > 0, col_sum / np.maximum(col_cnt, 1), grand)
        x = np.where(p.observed, p.filled(), col_mean[None, :])
        w = np.where(p.observed, 1.0, mean_prior_weight)
        row_keep = np.arange(n)
        col_keep = np.arange(m)
    else:
        row_keep = np.flatnonzero(p.observed.any(axis=1))
        col_keep = np.flatnonzero(p.observed.any(axis=0))
        if row_keep.size < n or col_keep.size < m:
            log.warning("factorize: dropping %d empty rows, %d empty columns",
                        n - row_keep.size, m - col_keep.size)
        x = p.filled()[np.ix_(row_keep, col_keep)]
        w = w_full[np.ix_(row_keep, col_keep)]

    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(k)
    u = rng.uniform(0.0, scale, size=(row_keep.size, k))
    v = rng.uniform(0.0, scale, size=(col_keep.size, k))

    def objective(uu, vv):
        r = w * (x - uu @ vv.T)
        return float(np.sum(r * r))

    trace = [objective(u, v)]
    for _ in range(max_iter):
        u *= ((w * x) @ v) / ((w * (u @ v.T)) @ v + NMF_EPS)
        v *= ((w * x).T @ u) / ((w * (u @ v.T)).T @ u + NMF_EPS)
        obj = objective(u, v)
        trace.append(obj)
        prev = trace[-2]
        if prev - obj < rel_tol * max(prev, NMF_EPS):
            break

    u_full = np.tile(u.mean(axis=0), (n, 1))
    v_full = np.tile(v.mean(axis=0), (m, 1))
    u_full[row_keep] = u
    v_full[col_keep] = v
    return LatentFactors(u_full, v_full, k, np.asarray(trace))


@dataclass
class FactorEstimator:
    """Ridge map phi: standardized meta-features -> latent graph factors."""

    weights: np.ndarray       # (d, k)
    intercept: np.ndarray     # (k,)
    feature_mean: np.ndarray
    feature_scale: np.ndarray
    ridge_lambda: float
    r2: float

    def predict(self, features: np.ndarray) -> np.ndarray:
        f = np.asarray(features, dtype=np.float64)
        single = f.ndim == 1
        z = (np.atleast_2d(f) - self.feature_mean) / self.feature_scale
        out = z @ self.weights + self.intercept
        return out[0] if single else out


def _loocv_ridge_lambda(z: np.ndarray, uc: np.ndarray) -> float:
    """Leave-one-out optimal ridge penalty, closed form.

    Decomposes the smaller Gram matrix once and evaluates the classical
    LOO identity r_i / (1 - H_ii) on a log grid. The penalty steers how
    hard predictions shrink toward the target mean: clean targets keep it
    small, noisy or underdetermined fits push it up.
    """
    n, d = z.shape
    grid = np.geomspace(1e-6, 1e9, 31)
    if n <= d:
        evals, q = np.linalg.eigh(z @ z.T)
        qt_y = q.T @ uc
        q2 = q ** 2
        best_lam, best_sse = grid[0], np.inf
        for lam in grid:
            a = evals / (evals + lam)
            resid = uc - q @ (a[:, None] * qt_y)
            h_diag = q2 @ a
            denom = np.maximum(1.0 - h_diag, 1e-12)
            sse = float(np.sum((resid / denom[:, None]) ** 2))
            if sse < best_sse - 1e-12:
                best_sse, best_lam = sse, lam
    else:
        evals, q = np.linalg.eigh(z.T @ z)
        a_mat = z @ q
        at_y = a_mat.T @ uc
        a2 = a_mat ** 2
        best_lam, best_sse = grid[0], np.inf
        for lam in grid:
            inv = 1.0 / (evals + lam)
            resid = uc - a_mat @ (inv[:, None] * at_y)
            h_diag = a2 @ inv
            denom = np.maximum(1.0 - h_diag, 1e-12)
            sse = float(np.sum((resid / denom[:, None]) ** 2))
            if sse < best_sse - 1e-12:
                best_sse, best_lam = sse, lam
    return float(best_lam)


def fit_factor_estimator(features: np.ndarray, u: np.ndarray,
                         ridge_lambda: float | None = RIDGE_LAMBDA) -> FactorEstimator:
    """Closed-form ridge regression, one shared solve for all factor dims.

    Features are z-scored (zero-variance columns get scale 1); the intercept
    absorbs the target mean so the penalty never shrinks it. With
    ridge_lambda=None the penalty is picked by leave-one-out CV.
    """
    f = np.asarray(features, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if f.ndim != 2 or u.ndim != 2 or f.shape[0] != u.shape[0]:
        raise ValueError("features and factors must share the row dimension")
    if ridge_lambda is not None and ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be positive")
    mean = f.mean(axis=0)
    scale = f.std(axis=0)
    scale[scale == 0.0] = 1.0
    z = (f - mean) / scale
    uc = u - u.mean(axis=0)
    if ridge_lambda is None:
        ridge_lambda = _loocv_ridge_lambda(z, uc)
    d = z.shape[1]
    gram = z.T @ z + ridge_lambda * np.eye(d)
    weights = np.linalg.solve(gram, z.T @ uc)
    intercept = u.mean(axis=0)
    pred = z @ weights + intercept
    ss_res = float(np.sum((u - pred) ** 2))
    ss_tot = float(np.sum((u - u.mean(axis=0)) ** 2))
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res < 1e-12 else 0.0
    return FactorEstimator(weights, intercept, mean, scale, ridge_lambda, r2)


def mask_random(p: PerformanceMatrix, sparsity: float, seed: int) -> PerformanceMatrix:
    """Hide exactly floor(sparsity * #observed) observed cells, seeded."""
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    obs_idx = np.flatnonzero(p.observed.ravel())
    n_hide = int(np.floor(sparsity * obs_idx.size))
    rng = np.random.default_rng(seed)
    hide = rng.choice(obs_idx, size=n_hide, replace=False)
    observed = p.observed.copy().ravel()
    observed[hide] = False
    observed = observed.reshape(p.observed.shape)
    return PerformanceMatrix(p.values, observed, list(p.graph_ids), list(p.model_ids))


def perturb(p: PerformanceMatrix, rate: float, seed: int) -> PerformanceMatrix:
    """Replace each observed entry x by uniform[x(1 - r/2), x(1 + r/2)],
    clipped to [0, 1]. rate=0 reproduces the input bit-for-bit."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    values = p.values.copy()
    if rate > 0:
        rng = np.random.default_rng(seed)
        obs = p.observed
        x = values[obs]
        lo = x * (1.0 - rate / 2.0)
        hi = x * (1.0 + rate / 2.0)
        values[obs] = np.clip(rng.uniform(lo, hi), 0.0, 1.0)
    return PerformanceMatrix(values, p.observed.copy(), list(p.graph_ids), list(p.model_ids))
