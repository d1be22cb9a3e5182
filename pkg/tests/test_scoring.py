"""Tests for score extraction and ranking."""

import numpy as np
import pytest

from skewrank.aggregation import SampleSet
from skewrank.errors import DomainError
from skewrank.scoring import ScoreVector, extract_scores, rank_items, score_residual
from skewrank.solver import LowRankFactors, sparse_truncated_svd


def factors_of(A: np.ndarray, k: int) -> LowRankFactors:
    rows, cols = np.nonzero(A)
    return sparse_truncated_svd(A.shape[0], np.column_stack([rows, cols]), A[rows, cols], k)


class TestExtractScores:
    """Test cases for extract_scores."""

    def test_score_difference_matrix(self):
        """Y = s e^T - e s^T with centered s gives back s."""
        s = np.array([-1.5, 0.5, 2.0, -1.0])
        factors = factors_of(np.subtract.outer(s, s), k=2)
        result = extract_scores(factors)
        np.testing.assert_allclose(result.scores, s, atol=1e-12)
        assert result.centered
        assert result.is_centered()

    def test_least_squares_oracle(self):
        """Matches the minimum-norm least-squares fit of s e^T - e s^T."""
        rng = np.random.default_rng(1)
        n = 7
        B = rng.standard_normal((n, n))
        X = B - B.T
        factors = factors_of(X, k=n - 1)
        completed = factors.to_dense()

        design = np.zeros((n * n, n))
        for i in range(n):
            for j in range(n):
                design[i * n + j, i] += 1.0
                design[i * n + j, j] -= 1.0
        oracle, *_ = np.linalg.lstsq(design, completed.reshape(-1), rcond=None)

        np.testing.assert_allclose(extract_scores(factors).scores, oracle, atol=1e-10)

    def test_least_squares_oracle_rank_two(self):
        """Random rank-2 skew matrices u v^T - v u^T, n up to 10."""
        rng = np.random.default_rng(4)
        for trial in range(100):
            n = int(rng.integers(3, 11))
            u, v = rng.standard_normal(n), rng.standard_normal(n)
            X = np.outer(u, v) - np.outer(v, u)
            factors = factors_of(X, k=2)

            design = np.zeros((n * n, n))
            for i in range(n):
                for j in range(n):
                    design[i * n + j, i] += 1.0
                    design[i * n + j, j] -= 1.0
            oracle, *_ = np.linalg.lstsq(design, X.reshape(-1), rcond=None)

            np.testing.assert_allclose(
                extract_scores(factors).scores, oracle, atol=1e-8, err_msg=f"trial {trial}"
            )

    def test_non_skew_completion_not_centered(self):
        factors = LowRankFactors(U=np.eye(3, 2), S=np.array([2.0, 1.0]), V=np.eye(3, 2))
        result = extract_scores(factors)
        assert not result.centered
        np.testing.assert_allclose(result.scores, [2.0 / 3, 1.0 / 3, 0.0])

    def test_size_mismatch(self):
        with pytest.raises(DomainError, match="expected 5"):
            extract_scores(LowRankFactors.zeros(4, 2), n=5)


class TestScoreVector:
    """Test cases for ScoreVector."""

    def test_center(self):
        centered = ScoreVector(np.array([1.0, 2.0, 6.0])).center()
        np.testing.assert_allclose(centered.scores, [-2.0, -1.0, 3.0])
        assert centered.centered
        assert centered.is_centered()

    def test_not_centered(self):
        assert not ScoreVector(np.array([1.0, 2.0])).is_centered()

    def test_normalized(self):
        s = ScoreVector(np.array([-2.0, 0.0, 2.0]))
        np.testing.assert_allclose(s.normalized(), [0.0, 0.5, 1.0])
        np.testing.assert_allclose(ScoreVector(np.ones(3)).normalized(), [0.5] * 3)

    def test_read_only(self):
        s = ScoreVector(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            s.scores[0] = 5.0


class TestScoreResidual:
    """Test cases for score_residual."""

    def test_exact_fit(self):
        s = np.array([1.0, 2.0, 3.0])
        Y = np.subtract.outer(s, s)
        samples = SampleSet.from_dense(Y, [(0, 1), (2, 0)])
        result = score_residual(samples, s)
        assert result.value == pytest.approx(0.0, abs=1e-15)
        assert result.relative

    def test_relative_misfit(self):
        """One unordered pair observed as Y_01 = 2 against s_0 - s_1 = 1."""
        samples = SampleSet.from_upper(2, [0], [1], [2.0])
        result = score_residual(samples, np.array([0.5, -0.5]))
        assert result.value == pytest.approx(0.5)
        assert result.relative

    def test_zero_targets_absolute(self):
        samples = SampleSet.from_upper(2, [0], [1], [0.0])
        result = score_residual(samples, ScoreVector(np.array([1.0, 0.0])))
        assert not result.relative
        assert result.value == pytest.approx(np.sqrt(2.0))

    def test_length_mismatch(self):
        samples = SampleSet.from_upper(3, [0], [1], [1.0])
        with pytest.raises(DomainError, match="2 entries"):
            score_residual(samples, np.zeros(2))


class TestRankItems:
    """Test cases for rank_items."""

    def test_descending_order(self):
        ranking = rank_items(np.array([0.1, 3.0, -2.0]), ["a", "b", "c"])
        assert ranking.order == [1, 0, 2]
        assert ranking.item_ids == ["b", "a", "c"]
        np.testing.assert_allclose(ranking.scores, [3.0, 0.1, -2.0])

    def test_ties_keep_index_order(self):
        ranking = rank_items(ScoreVector(np.array([1.0, 2.0, 1.0, 2.0])))
        assert ranking.order == [1, 3, 0, 2]
        assert ranking.item_ids == ["1", "3", "0", "2"]

    def test_to_frame(self):
        frame = rank_items(np.array([0.5, -0.5]), ["x", "y"]).to_frame()
        assert list(frame.columns) == ["rank", "item_id", "score"]
        assert frame["rank"].tolist() == [1, 2]
        assert frame["item_id"].tolist() == ["x", "y"]

    def test_id_count_mismatch(self):
        with pytest.raises(DomainError, match="2 item IDs"):
            rank_items(np.zeros(3), ["a", "b"])
