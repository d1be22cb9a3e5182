#!/usr/bin/env python3
"""
Quick smoke test: run the rank pipeline end to end on the demo ratings.
"""

import sys
import tempfile

from skewrank.pipeline import ModelCode, RankAggregationPipeline
from skewrank.demo_data import get_demo_ratings


def test_pipeline():
    """Rank the demo ratings, export the artifacts and re-analyze them."""
    print("🧪 Testing skewrank pipeline")
    print("=" * 50)

    try:
        print("1. Initializing pipeline...")
        pipeline = RankAggregationPipeline(ModelCode("am", 2, 1))
        print("   ✅ Pipeline initialized")

        print("\n2. Ranking demo ratings...")
        result = pipeline.rank(get_demo_ratings(), compare_rank=4)
        print("   ✅ Ratings ranked")

        print(f"\n3. Results ({result.model.label}):")
        for item in result.ranking.items:
            print(f"   {item.rank}. {item.item_id:<12} {item.score:+.3f}")
        print(f"   Solver residual: {result.solver_residual:.4f}")
        print(f"   Score residual:  {result.score_residual.value:.4f}")
        for k, residual in sorted(result.rank_comparison.items()):
            print(f"   Rank {k} residual: {residual:.4f}")

        print("\n4. Exporting and re-analyzing...")
        with tempfile.TemporaryDirectory() as output_dir:
            pipeline.export_ranking(result, output_dir)
            report = RankAggregationPipeline.analyze(output_dir)
        print(f"   Stored residuals reproduced: {report.matches_stored}")

        print("\n✅ All checks passed! skewrank is working correctly.")
        return report.matches_stored

    except Exception as e:
        print(f"\n❌ Test failed: {e}")
        import traceback
        traceback.print_exc()
        return False


if __name__ == "__main__":
    success = test_pipeline()
    sys.exit(0 if success else 1)
