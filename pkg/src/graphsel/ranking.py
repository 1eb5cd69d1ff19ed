"""Model score sheets shared by every selector."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def rank_descending(scores: np.ndarray) -> np.ndarray:
    """Model indices sorted by descending score, ties toward lower index."""
    scores = np.asarray(scores, dtype=np.float64)
    return np.lexsort((np.arange(scores.size), -scores))


@dataclass
class ScoreSheet:
    """Scores aligned with model_ids, highest meaning best."""

    model_ids: list[str]
    scores: np.ndarray

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=np.float64)
        if self.scores.ndim != 1 or self.scores.size != len(self.model_ids):
            raise ValueError("scores must be a 1-D array aligned with model_ids")
        if not np.all(np.isfinite(self.scores)):
            raise ValueError("scores must be finite")

    def ranking(self) -> np.ndarray:
        return rank_descending(self.scores)

    def best(self) -> int:
        return int(self.ranking()[0])

    def best_id(self) -> str:
        return self.model_ids[self.best()]
