"""Evaluation harness: cross-validation, robustness sweeps, gap reports.

Corruption (masking, perturbation) is always applied to the selectors'
training view of the performance matrix; selections are scored against the
uncorrupted truth, so a sweep measures robustness of selection, not of the
ground truth itself.
"""

from __future__ import annotations

import io
import json
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .metrics import METRIC_NAMES, score_row
from .perf import PerformanceMatrix, mask_random, perturb

log = logging.getLogger(__name__)

DEFAULT_SPARSITIES = (0.0, 0.2, 0.4, 0.6, 0.8, 0.9)
DEFAULT_PERTURBATION_RATES = (0.0, 0.1, 0.2, 0.4)


@dataclass
class EvalResult:
    selector: str
    folds: int
    per_fold: list[dict[str, float]]
    per_graph: dict[str, np.ndarray]      # metric -> value per graph (nan = skipped)
    gaps: np.ndarray                      # best minus selected true performance
    rankings: list[np.ndarray | None]     # per graph, None when the fold failed
    errors: list[str] = field(default_factory=list)

    def aggregate(self) -> dict[str, float]:
        """Mean of fold means per metric (NaN-skipping within folds)."""
        out = {}
        for name in METRIC_NAMES:
            vals = [f[name] for f in self.per_fold if not np.isnan(f[name])]
            out[name] = float(np.mean(vals)) if vals else float("nan")
        return out


def fold_assignments(n: int, folds: int, seed: int) -> list[np.ndarray]:
    """Shuffled contiguous chunks: disjoint, covering, sizes differ by <= 1."""
    if folds < 2 or folds > n:
        raise ValueError("folds must lie in [2, n]")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(chunk) for chunk in np.array_split(perm, folds)]


def cross_validate(features: np.ndarray, truth: PerformanceMatrix,
                   selector_factory: Callable[[], object], folds: int = 5,
                   seed: int = 0, train_view: PerformanceMatrix | None = None,
                   selector_name: str = "selector") -> EvalResult:
    """Graph-level k-fold CV.

    The selector is rebuilt per fold and fit on the training rows of
    ``train_view`` (the possibly corrupted matrix; defaults to the truth).
    Each held-out graph is ranked and scored against its true row restricted
    to the truth's observed columns. A selector failure marks the whole fold
    as failed and is recorded, not raised.
    """
    f = np.asarray(features, dtype=np.float64)
    n = truth.shape[0]
    if f.shape[0] != n:
        raise ValueError("features and matrix row counts differ")
    view = train_view if train_view is not None else truth
    if view.shape != truth.shape:
        raise ValueError("train_view shape must match the truth")

    test_folds = fold_assignments(n, folds, seed)
    per_fold = []
    per_graph = {name: np.full(n, np.nan) for name in METRIC_NAMES}
    gaps = np.full(n, np.nan)
    rankings: list[np.ndarray | None] = [None] * n
    errors: list[str] = []

    for fold_no, test_rows in enumerate(test_folds):
        train_rows = np.setdiff1d(np.arange(n), test_rows)
        try:
            selector = selector_factory()
            selector.fit(f[train_rows], view.rows(train_rows))
            fold_scores = {name: [] for name in METRIC_NAMES}
            for i in test_rows:
                sheet = selector.rank(f[i])
                cols = truth.observed[i]
                if not cols.any():
                    continue
                row_true = truth.values[i, cols]
                m = score_row(sheet.scores[cols], row_true)
                for name in METRIC_NAMES:
                    per_graph[name][i] = m[name]
                    if not np.isnan(m[name]):
                        fold_scores[name].append(m[name])
                rankings[i] = sheet.ranking()
                picked = sheet.best()
                best_perf = truth.values[i, cols].max()
                picked_perf = truth.values[i, picked] if cols[picked] else 0.0
                gaps[i] = float(best_perf - picked_perf)
            per_fold.append({
                name: (float(np.mean(v)) if v else float("nan"))
                for name, v in fold_scores.items()})
        except Exception as exc:      # noqa: BLE001 - fold failures are data
            log.warning("fold %d failed for %s: %s", fold_no, selector_name, exc)
            errors.append(f"fold {fold_no}: {exc}")
            per_fold.append({name: float("nan") for name in METRIC_NAMES})

    return EvalResult(selector_name, folds, per_fold, per_graph, gaps, rankings, errors)


@dataclass
class SweepResult:
    kind: str                              # "sparsity" or "perturbation"
    settings: tuple[float, ...]
    results: dict[tuple[str, float], EvalResult]

    def table_rows(self) -> list[tuple[str, float, int, str, float]]:
        rows = []
        for (name, setting), res in sorted(self.results.items()):
            for fold_no, fold in enumerate(res.per_fold):
                for metric in METRIC_NAMES:
                    rows.append((name, setting, fold_no, metric, fold[metric]))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("selector,setting,fold,metric,value\n")
        for name, setting, fold_no, metric, value in self.table_rows():
            rendered = "" if np.isnan(value) else repr(float(value))
            buf.write(f"{name},{setting:g},{fold_no},{metric},{rendered}\n")
        return buf.getvalue()


def _run_sweep(kind: str, features, truth, factories, settings, corrupt, folds, seed):
    results = {}
    for setting in settings:
        view = corrupt(setting)
        for name, factory in factories.items():
            res = cross_validate(features, truth, factory, folds=folds, seed=seed,
                                 train_view=view, selector_name=name)
            results[name, setting] = res
            log.info("%s sweep: %s @ %g -> mrr %.4f", kind, name, setting,
                     res.aggregate()["mrr"])
    return SweepResult(kind, tuple(settings), results)


def sparsity_sweep(features: np.ndarray, truth: PerformanceMatrix,
                   factories: dict[str, Callable[[], object]],
                   sparsities=DEFAULT_SPARSITIES, folds: int = 5,
                   seed: int = 0) -> SweepResult:
    """Hide a growing fraction of training cells; evaluate against the truth."""
    def corrupt(s):
        return truth if s == 0 else mask_random(truth, s, seed + int(round(s * 1000)))
    return _run_sweep("sparsity", features, truth, factories, sparsities, corrupt, folds, seed)


def perturbation_sweep(features: np.ndarray, truth: PerformanceMatrix,
                       factories: dict[str, Callable[[], object]],
                       rates=DEFAULT_PERTURBATION_RATES, folds: int = 5,
                       seed: int = 0) -> SweepResult:
    """Jitter training cells multiplicatively; evaluate against the truth."""
    def corrupt(r):
        return perturb(truth, r, seed + int(round(r * 1000)))
    return _run_sweep("perturbation", features, truth, factories, rates, corrupt, folds, seed)


def best_gap_report(result: EvalResult) -> dict[str, float]:
    """Distribution of (best true performance - selected true performance)."""
    gaps = result.gaps[~np.isnan(result.gaps)]
    if gaps.size == 0:
        return {"count": 0, "mean": float("nan"), "median": float("nan"),
                "q1": float("nan"), "q3": float("nan"), "max": float("nan")}
    q1, med, q3 = np.quantile(gaps, [0.25, 0.5, 0.75])
    return {"count": int(gaps.size), "mean": float(gaps.mean()),
            "median": float(med), "q1": float(q1), "q3": float(q3),
            "max": float(gaps.max())}


def _json_clean(obj):
    """NaN -> null so the output stays strict JSON."""
    if isinstance(obj, float):
        return None if np.isnan(obj) else obj
    if isinstance(obj, dict):
        return {k: _json_clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_clean(v) for v in obj]
    return obj


def summary_json(results: dict[str, EvalResult],
                 gap_reports: dict[str, dict] | None = None,
                 extra: dict | None = None) -> str:
    payload = {
        "selectors": {
            name: {"aggregate": res.aggregate(),
                   "per_fold": res.per_fold,
                   "errors": res.errors}
            for name, res in results.items()
        },
    }
    if gap_reports:
        payload["best_gap"] = gap_reports
    if extra:
        payload.update(extra)
    return json.dumps(_json_clean(payload), indent=2, sort_keys=True, allow_nan=False)
