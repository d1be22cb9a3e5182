"""Main rank aggregation pipeline for skewrank."""

import logging
import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from . import __version__
from .aggregation import (
    AggregationMethod,
    PairwiseMatrix,
    RatingsMatrix,
    SampleSet,
    aggregate,
    filter_support,
    support_histogram,
)
from .analysis import CoherenceReport, coherence, sample_graph_components
from .config import Config
from .demo_data import get_demo_ratings, is_demo_input
from .errors import DomainError, EmptySampleSetError
from .scoring import RankedList, ScoreResidual, ScoreVector, extract_scores, rank_items, score_residual
from .solver import LowRankFactors, SolverConfig, SVPResult, solver_residual, svp_complete
from .utils import formats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ModelCode:
    """Names a real-data model as ``<method> <min-user-ratings> <min-support>``, e.g. ``am 6 30``."""

    method: AggregationMethod = AggregationMethod.ARITHMETIC_MEAN
    min_user_ratings: int = 0
    min_support: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", AggregationMethod.coerce(self.method))
        if self.min_user_ratings < 0 or self.min_support < 0:
            raise DomainError("min_user_ratings and min_support must be >= 0")

    @property
    def label(self) -> str:
        return f"{self.method.code} {self.min_user_ratings} {self.min_support}"

    @classmethod
    def parse(cls, text: str) -> "ModelCode":
        parts = text.split()
        if len(parts) != 3:
            raise DomainError(f"model code must look like 'am 6 30', got '{text}'")
        try:
            return cls(parts[0], int(parts[1]), int(parts[2]))
        except ValueError as e:
            raise DomainError(f"invalid model code '{text}': {e}") from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            "model_code": self.label,
            "method": self.method.value,
            "min_user_ratings": self.min_user_ratings,
            "min_support": self.min_support,
        }


def _coherence_or_none(scores: ScoreVector) -> Optional[CoherenceReport]:
    try:
        return coherence(scores.center())
    except DomainError as e:
        logger.warning(f"Coherence not available: {e}")
        return None


@dataclass
class RankingResult:
    """Result of the rank pipeline."""

    model: ModelCode
    item_ids: List[str]
    pairwise: PairwiseMatrix
    samples: SampleSet
    solver: SVPResult
    scores: ScoreVector
    ranking: RankedList
    solver_residual: float
    score_residual: ScoreResidual
    coherence: Optional[CoherenceReport]
    components: int
    rank_comparison: Dict[int, float] = field(default_factory=dict)
    num_voters: Optional[int] = None

    @property
    def factors(self) -> LowRankFactors:
        return self.solver.factors

    def to_metadata(self, seed: Optional[int] = None) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            **self.model.to_dict(),
            **self.solver.to_metadata(),
            "num_items": self.pairwise.num_items,
            "num_voters": self.num_voters,
            "num_pairs": self.pairwise.num_pairs,
            "num_samples": len(self.samples),
            "solver_residual": self.solver_residual,
            "score_residual": self.score_residual.value,
            "score_residual_relative": self.score_residual.relative,
            "scores_centered": self.scores.centered,
            "coherence": self.coherence.to_dict() if self.coherence else None,
            "comparison_graph_components": self.components,
            "rank_comparison": {str(k): v for k, v in sorted(self.rank_comparison.items())},
            "seed": seed,
        }
        return record


@dataclass
class AnalysisReport:
    """Diagnostics recomputed from a rank output directory."""

    model: ModelCode
    solver_residual: float
    score_residual: ScoreResidual
    coherence: Optional[CoherenceReport]
    components: int
    stored: Dict[str, Any] = field(default_factory=dict)

    @property
    def matches_stored(self) -> bool:
        return (
            self.stored.get("solver_residual") == self.solver_residual
            and self.stored.get("score_residual") == self.score_residual.value
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            **self.model.to_dict(),
            "solver_residual": self.solver_residual,
            "score_residual": self.score_residual.value,
            "score_residual_relative": self.score_residual.relative,
            "coherence": self.coherence.to_dict() if self.coherence else None,
            "comparison_graph_components": self.components,
            "matches_stored": self.matches_stored,
        }


class RankAggregationPipeline:
    """Ratings -> pairwise aggregation -> support filter -> SVP -> scores -> ranking."""

    def __init__(
        self,
        model: Optional[ModelCode] = None,
        solver_config: Optional[SolverConfig] = None,
        delimiter: Optional[str] = None,
        seed: int = Config.DEFAULT_SEED,
    ):
        self.model = model or ModelCode()
        self.solver_config = solver_config or SolverConfig()
        self.delimiter = delimiter or Config.DELIMITER
        self.seed = seed

        logger.info(f"Pipeline initialized for model '{self.model.label}'")

    def load_ratings(self, path: str) -> RatingsMatrix:
        """Read a ratings file, or the demo ratings for the input name 'demo'."""
        if is_demo_input(path):
            logger.info("Using built-in demo ratings")
            return get_demo_ratings()
        return formats.read_ratings(path, delimiter=self.delimiter)

    def prepare(self, ratings: RatingsMatrix) -> RatingsMatrix:
        """Drop voters below the model's min_user_ratings before aggregation."""
        return ratings.drop_sparse_voters(self.model.min_user_ratings)

    def aggregate(self, ratings: RatingsMatrix) -> PairwiseMatrix:
        """Aggregate already prepared ratings with the model's method."""
        return aggregate(ratings, self.model.method)

    def filter(self, pairwise: PairwiseMatrix) -> SampleSet:
        """Apply the support threshold; an empty result is fatal here."""
        samples = filter_support(pairwise, self.model.min_support)
        if len(samples) == 0:
            raise EmptySampleSetError(self.model.min_support)
        return samples

    def compare_ranks(self, samples: SampleSet, ranks: Sequence[int]) -> Dict[int, float]:
        """Relative solver residual on the same samples at each target rank."""
        comparison = {}
        for k in ranks:
            result = svp_complete(samples, replace(self.solver_config, rank=k))
            comparison[k] = solver_residual(samples, result.factors)
            logger.info(f"Rank {k}: relative residual {comparison[k]:.4f}")
        return comparison

    def rank_pairwise(
        self,
        pairwise: PairwiseMatrix,
        item_ids: Sequence[str],
        compare_rank: Optional[int] = None,
        num_voters: Optional[int] = None,
    ) -> RankingResult:
        """
        Complete, score and rank an aggregated pairwise matrix.

        Args:
            pairwise: Aggregated comparisons
            item_ids: Original item IDs by dense index
            compare_rank: Second target rank whose residual is reported alongside
            num_voters: Recorded in the run metadata when known

        Returns:
            RankingResult with residuals and diagnostics

        Raises:
            EmptySampleSetError: If no entry meets the support threshold
        """
        logger.info("Filtering by comparison support...")
        samples = self.filter(pairwise)
        components = sample_graph_components(samples)

        logger.info("Completing pairwise matrix...")
        result = svp_complete(samples, self.solver_config)
        residual = solver_residual(samples, result.factors)

        logger.info("Extracting scores...")
        scores = extract_scores(result.factors)
        ranking = rank_items(scores, item_ids)

        comparison = {self.solver_config.rank: residual}
        if compare_rank is not None and compare_rank != self.solver_config.rank:
            comparison.update(self.compare_ranks(samples, [compare_rank]))

        ranked = RankingResult(
            model=self.model,
            item_ids=list(item_ids),
            pairwise=pairwise,
            samples=samples,
            solver=result,
            scores=scores,
            ranking=ranking,
            solver_residual=residual,
            score_residual=score_residual(samples, scores),
            coherence=_coherence_or_none(scores),
            components=components,
            rank_comparison=comparison,
            num_voters=num_voters,
        )
        logger.info(
            f"Ranking completed. Items: {len(ranking)}, "
            f"solver residual: {residual:.4f}, "
            f"score residual: {ranked.score_residual.value:.4f}"
        )
        return ranked

    def rank(self, ratings: RatingsMatrix, compare_rank: Optional[int] = None) -> RankingResult:
        ratings = self.prepare(ratings)
        pairwise = self.aggregate(ratings)
        return self.rank_pairwise(
            pairwise, ratings.item_ids, compare_rank=compare_rank, num_voters=ratings.num_voters
        )

    def load_pairwise(self, directory: str) -> Tuple[PairwiseMatrix, List[str]]:
        """Read an aggregate output directory back into memory."""
        paths = formats.output_paths(directory)
        item_ids = formats.read_item_index(paths["items"])
        pairwise = formats.read_pairwise(paths["pairwise"], paths["support"], self.model.method)
        if pairwise.num_items != len(item_ids):
            raise DomainError(
                f"{paths['items']} lists {len(item_ids)} items, pairwise files have {pairwise.num_items}"
            )
        return pairwise, item_ids

    def _run_record(self) -> Dict[str, Any]:
        return {
            "created_at": datetime.now(timezone.utc).isoformat(),
            "skewrank_version": __version__,
        }

    def _write_pairwise(
        self, pairwise: PairwiseMatrix, item_ids: Sequence[str], output_dir: str
    ) -> Tuple[Dict[str, str], Dict[str, Any]]:
        os.makedirs(output_dir, exist_ok=True)
        paths = formats.output_paths(output_dir)
        formats.write_item_index(item_ids, paths["items"])
        formats.write_pairwise(
            pairwise,
            paths["pairwise"],
            paths["support"],
            comment=f"skewrank {self.model.label}: entries i < j, Y[j, i] = -Y[i, j]",
        )
        histogram = support_histogram(pairwise)
        record = {
            **self.model.to_dict(),
            "num_items": pairwise.num_items,
            "num_pairs": pairwise.num_pairs,
            "pair_coverage": histogram.coverage,
            "support_bins": histogram.bin_edges.tolist(),
            "support_counts": histogram.counts.tolist(),
            "seed": self.seed,
        }
        return paths, record

    def export_aggregate(
        self,
        pairwise: PairwiseMatrix,
        item_ids: Sequence[str],
        output_dir: str,
        num_voters: Optional[int] = None,
    ) -> Dict[str, str]:
        """Write items.csv, pairwise.mtx, support.mtx and metadata.json."""
        paths, record = self._write_pairwise(pairwise, item_ids, output_dir)
        formats.write_metadata(
            {**record, "num_voters": num_voters, **self._run_record()}, paths["metadata"]
        )
        logger.info(f"Pairwise matrix written to {output_dir}")
        return paths

    def export_ranking(self, result: RankingResult, output_dir: str) -> Dict[str, str]:
        """Write every rank artifact, each traceable to the model code and solver config."""
        paths, record = self._write_pairwise(result.pairwise, result.item_ids, output_dir)
        formats.write_factors(result.factors, paths["factors"])
        formats.write_ranking(result.ranking, paths["ranking"], self.delimiter)
        formats.write_metadata(
            {**record, **result.to_metadata(seed=self.seed), **self._run_record()},
            paths["metadata"],
        )
        logger.info(f"Ranking written to {output_dir}")
        return paths

    @staticmethod
    def analyze(directory: str, beta: float = Config.DEFAULT_BETA) -> AnalysisReport:
        """Recompute residuals and coherence from a rank output directory."""
        paths = formats.output_paths(directory)
        stored = formats.read_metadata(paths["metadata"])
        model = ModelCode(stored["method"], stored["min_user_ratings"], stored["min_support"])
        pipeline = RankAggregationPipeline(model)
        pairwise, _ = pipeline.load_pairwise(directory)
        samples = pipeline.filter(pairwise)
        factors = formats.read_factors(paths["factors"])
        scores = extract_scores(factors, n=pairwise.num_items)

        try:
            report_coherence: Optional[CoherenceReport] = coherence(scores.center(), beta)
        except DomainError as e:
            logger.warning(f"Coherence not available: {e}")
            report_coherence = None

        report = AnalysisReport(
            model=model,
            solver_residual=solver_residual(samples, factors),
            score_residual=score_residual(samples, scores),
            coherence=report_coherence,
            components=sample_graph_components(samples),
            stored=stored,
        )
        if not report.matches_stored:
            logger.warning(f"Recomputed residuals differ from those stored in {paths['metadata']}")
        return report


def run_pipeline(
    source: Union[str, RatingsMatrix],
    model: Optional[ModelCode] = None,
    solver_config: Optional[SolverConfig] = None,
) -> RankingResult:
    """Convenience wrapper: rank a ratings file or matrix with one call."""
    pipeline = RankAggregationPipeline(model, solver_config)
    ratings = pipeline.load_ratings(source) if isinstance(source, str) else source
    return pipeline.rank(ratings)
