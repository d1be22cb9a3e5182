"""Score extraction, score-based residuals and the final item ranking."""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from .aggregation import SampleSet
from .config import Config
from .errors import DomainError
from .solver import LowRankFactors, skew_deviation

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScoreVector:
    """Per-item quality scores."""

    scores: np.ndarray
    centered: bool = False

    def __post_init__(self) -> None:
        scores = np.array(self.scores, dtype=float).reshape(-1)
        scores.setflags(write=False)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return int(self.scores.size)

    def is_centered(self) -> bool:
        """Check |sum(s)| <= tol * n * max|s| directly on the values."""
        if self.scores.size == 0:
            return True
        bound = Config.CENTER_TOLERANCE * self.scores.size * np.max(np.abs(self.scores))
        return bool(abs(self.scores.sum()) <= bound)

    def center(self) -> "ScoreVector":
        return ScoreVector(self.scores - self.scores.mean(), centered=True)

    def normalized(self) -> np.ndarray:
        """Scores mapped affinely onto [0, 1]; for display only."""
        low, high = self.scores.min(), self.scores.max()
        if high == low:
            return np.full(self.scores.shape, 0.5)
        return (self.scores - low) / (high - low)


@dataclass(frozen=True)
class ScoreResidual:
    """||Omega(s e^T - e s^T) - b||, relative to ||b|| unless b is zero."""

    value: float
    relative: bool


@dataclass(frozen=True)
class RankedItem:
    rank: int
    index: int
    item_id: str
    score: float


@dataclass
class RankedList:
    """Items ordered best first."""

    items: List[RankedItem]

    def __len__(self) -> int:
        return len(self.items)

    @property
    def order(self) -> List[int]:
        return [item.index for item in self.items]

    @property
    def item_ids(self) -> List[str]:
        return [item.item_id for item in self.items]

    @property
    def scores(self) -> np.ndarray:
        return np.array([item.score for item in self.items])

    def to_frame(self) -> pd.DataFrame:
        """Ranking as a table with columns rank, item_id, score."""
        return pd.DataFrame(
            {
                "rank": [item.rank for item in self.items],
                "item_id": self.item_ids,
                "score": self.scores,
            }
        )


def extract_scores(factors: LowRankFactors, n: Optional[int] = None) -> ScoreVector:
    """
    Compute s = (1/n) U S V^T e without forming the n x n matrix.

    For a skew-symmetric completion this is the centered least-squares fit of
    s e^T - e s^T to the completed matrix, and e^T s = 0 holds automatically.

    Args:
        factors: Factors of the completed matrix
        n: Number of items (checked against the factors when given)

    Returns:
        ScoreVector, marked centered when the completed matrix is skew-symmetric
    """
    if n is not None and n != factors.n:
        raise DomainError(f"factors describe {factors.n} items, expected {n}")
    n = factors.n
    scores = factors.U @ (factors.S * factors.V.sum(axis=0)) / n
    deviation = skew_deviation(factors)
    centered = deviation <= Config.SKEW_TOLERANCE * max(1.0, factors.frobenius_norm)
    if not centered:
        logger.warning(
            f"Completed matrix is not skew-symmetric (||X + X^T||_F = {deviation:.3e}); "
            "scores are not centered"
        )
    return ScoreVector(scores, centered=centered)


def score_residual(samples: SampleSet, s: Union[ScoreVector, np.ndarray]) -> ScoreResidual:
    """Misfit of the pure score-difference model s_r - s_c on the samples."""
    scores = s.scores if isinstance(s, ScoreVector) else np.asarray(s, dtype=float)
    if scores.size != samples.num_items:
        raise DomainError(
            f"score vector has {scores.size} entries, samples cover {samples.num_items} items"
        )
    predicted = scores[samples.rows] - scores[samples.cols]
    misfit = float(np.linalg.norm(predicted - samples.values))
    if samples.norm == 0:
        return ScoreResidual(value=misfit, relative=False)
    return ScoreResidual(value=misfit / samples.norm, relative=True)


def rank_items(
    s: Union[ScoreVector, np.ndarray], item_ids: Optional[Sequence[str]] = None
) -> RankedList:
    """
    Order items by descending score.

    Ties keep ascending item index, so the ranking is deterministic.
    """
    scores = s.scores if isinstance(s, ScoreVector) else np.asarray(s, dtype=float)
    if item_ids is None:
        item_ids = [str(i) for i in range(scores.size)]
    if len(item_ids) != scores.size:
        raise DomainError(f"{len(item_ids)} item IDs for {scores.size} scores")
    order = np.argsort(-scores, kind="stable")
    return RankedList(
        items=[
            RankedItem(rank=position + 1, index=int(i), item_id=str(item_ids[i]), score=float(scores[i]))
            for position, i in enumerate(order)
        ]
    )
