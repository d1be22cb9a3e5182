"""Pairwise aggregation of voter-by-item ratings.

A ratings matrix R (voters x items) is turned into a skew-symmetric matrix of
aggregate comparisons Y, where Y[i, j] > 0 means item i is preferred to item j.
Five aggregation rules are supported:

- arithmetic mean of score differences (translation invariant)
- geometric mean of score ratios, i.e. mean of log-rating differences
  (scale invariant, ratings must be positive)
- binary comparison, Pr{R_i > R_j} - Pr{R_i < R_j} among co-raters
- strict binary comparison, as binary but over strict preferences only
- log odds, log(Pr{R_i >= R_j} / Pr{R_i <= R_j})

The last three are invariant under any strictly increasing map of the
rating scale.
"""

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .config import Config
from .errors import DomainError, EmptySampleSetWarning

logger = logging.getLogger(__name__)

RatingTransform = Callable[[np.ndarray], np.ndarray]


class AggregationMethod(str, Enum):
    """Pairwise aggregation rules with their two-letter model codes."""

    ARITHMETIC_MEAN = "arithmetic_mean"
    GEOMETRIC_MEAN = "geometric_mean"
    BINARY = "binary"
    STRICT_BINARY = "strict_binary"
    LOG_ODDS = "log_odds"

    @property
    def code(self) -> str:
        return _METHOD_CODES[self]

    @classmethod
    def coerce(cls, method: Union["AggregationMethod", str]) -> "AggregationMethod":
        """Accept a method, its value ("binary") or its code ("bc")."""
        if isinstance(method, AggregationMethod):
            return method
        key = str(method).strip().lower()
        for candidate, code in _METHOD_CODES.items():
            if key in (code, candidate.value):
                return candidate
        raise DomainError(
            f"Unknown aggregation method '{method}'; "
            f"expected one of {', '.join(_METHOD_CODES.values())}"
        )

    @classmethod
    def from_code(cls, code: str) -> "AggregationMethod":
        return cls.coerce(code)


_METHOD_CODES = {
    AggregationMethod.ARITHMETIC_MEAN: "am",
    AggregationMethod.GEOMETRIC_MEAN: "gm",
    AggregationMethod.BINARY: "bc",
    AggregationMethod.STRICT_BINARY: "sb",
    AggregationMethod.LOG_ODDS: "lo",
}


def _freeze(*arrays: np.ndarray) -> None:
    for array in arrays:
        array.setflags(write=False)


def _default_ids(count: int) -> Tuple[str, ...]:
    return tuple(str(i) for i in range(count))


@dataclass(frozen=True)
class RatingsMatrix:
    """Sparse voter-by-item ratings stored as (voter, item, rating) triplets."""

    num_voters: int
    num_items: int
    voters: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    voter_ids: Tuple[str, ...] = ()
    item_ids: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        voters = np.asarray(self.voters, dtype=np.int64)
        items = np.asarray(self.items, dtype=np.int64)
        ratings = np.asarray(self.ratings, dtype=float)
        if not (voters.shape == items.shape == ratings.shape) or voters.ndim != 1:
            raise DomainError("voters, items and ratings must be 1-D arrays of equal length")
        if voters.size:
            if voters.min() < 0 or voters.max() >= self.num_voters:
                raise DomainError("voter index out of range")
            if items.min() < 0 or items.max() >= self.num_items:
                raise DomainError("item index out of range")
        if not np.all(np.isfinite(ratings)):
            raise DomainError("ratings must be finite")
        keys = voters * self.num_items + items
        if np.unique(keys).size != keys.size:
            raise DomainError("at most one rating per (voter, item) pair is allowed")

        voter_ids = tuple(self.voter_ids) or _default_ids(self.num_voters)
        item_ids = tuple(self.item_ids) or _default_ids(self.num_items)
        if len(voter_ids) != self.num_voters or len(item_ids) != self.num_items:
            raise DomainError("ID lists must match the matrix dimensions")

        _freeze(voters, items, ratings)
        object.__setattr__(self, "voters", voters)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "ratings", ratings)
        object.__setattr__(self, "voter_ids", voter_ids)
        object.__setattr__(self, "item_ids", item_ids)

    @classmethod
    def from_triplets(
        cls,
        voters: Sequence[int],
        items: Sequence[int],
        ratings: Sequence[float],
        num_voters: Optional[int] = None,
        num_items: Optional[int] = None,
        voter_ids: Sequence[str] = (),
        item_ids: Sequence[str] = (),
    ) -> "RatingsMatrix":
        """Build a ratings matrix from parallel index/rating sequences."""
        voters = np.asarray(voters, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        if num_voters is None:
            num_voters = len(voter_ids) or (int(voters.max()) + 1 if voters.size else 0)
        if num_items is None:
            num_items = len(item_ids) or (int(items.max()) + 1 if items.size else 0)
        return cls(
            num_voters=num_voters,
            num_items=num_items,
            voters=voters,
            items=items,
            ratings=np.asarray(ratings, dtype=float),
            voter_ids=tuple(voter_ids),
            item_ids=tuple(item_ids),
        )

    @classmethod
    def from_dense(cls, matrix: np.ndarray) -> "RatingsMatrix":
        """Build from a dense voter-by-item array; NaN marks a missing rating."""
        matrix = np.asarray(matrix, dtype=float)
        voters, items = np.nonzero(~np.isnan(matrix))
        return cls.from_triplets(
            voters, items, matrix[voters, items], num_voters=matrix.shape[0], num_items=matrix.shape[1]
        )

    @property
    def num_ratings(self) -> int:
        return int(self.ratings.size)

    @property
    def ratings_per_voter(self) -> np.ndarray:
        return np.bincount(self.voters, minlength=self.num_voters)

    @property
    def ratings_per_item(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.num_items)

    def indicator(self) -> sp.csr_matrix:
        """0/1 matrix of observed ratings (voters x items)."""
        return sp.csr_matrix(
            (np.ones(self.num_ratings), (self.voters, self.items)),
            shape=(self.num_voters, self.num_items),
        )

    def values(self, transform: Optional[RatingTransform] = None) -> sp.csr_matrix:
        """Rating values (optionally transformed) as a sparse matrix.

        Zero ratings contribute nothing to the sums this is used for, so it is
        harmless if the sparse format drops them.
        """
        data = self.ratings if transform is None else transform(self.ratings)
        return sp.csr_matrix(
            (data, (self.voters, self.items)), shape=(self.num_voters, self.num_items)
        )

    def to_dense(self) -> np.ndarray:
        dense = np.full((self.num_voters, self.num_items), np.nan)
        dense[self.voters, self.items] = self.ratings
        return dense

    def map_ratings(self, func: RatingTransform) -> "RatingsMatrix":
        """Apply ``func`` entrywise to the ratings, keeping the pattern."""
        return RatingsMatrix(
            num_voters=self.num_voters,
            num_items=self.num_items,
            voters=self.voters,
            items=self.items,
            ratings=np.asarray(func(self.ratings), dtype=float),
            voter_ids=self.voter_ids,
            item_ids=self.item_ids,
        )

    def drop_sparse_voters(self, min_ratings: int) -> "RatingsMatrix":
        """
        Keep only voters with at least ``min_ratings`` ratings.

        Items (and their IDs) are untouched so rankings stay comparable
        across filter levels. Voter indices are renumbered densely.
        """
        if min_ratings <= 1:
            return self
        keep = self.ratings_per_voter >= min_ratings
        new_index = np.cumsum(keep) - 1
        rows = keep[self.voters]
        logger.info(
            f"Dropping {int((~keep).sum())} of {self.num_voters} voters "
            f"with fewer than {min_ratings} ratings"
        )
        return RatingsMatrix(
            num_voters=int(keep.sum()),
            num_items=self.num_items,
            voters=new_index[self.voters[rows]],
            items=self.items[rows],
            ratings=self.ratings[rows],
            voter_ids=tuple(v for v, k in zip(self.voter_ids, keep) if k),
            item_ids=self.item_ids,
        )


@dataclass(frozen=True)
class PairwiseMatrix:
    """
    Sparse skew-symmetric matrix of aggregate comparisons.

    Both orientations of every entry are stored, sorted row-major. ``support``
    holds the number of voters behind each entry.
    """

    num_items: int
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    support: np.ndarray
    method: Optional[AggregationMethod] = None

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=np.int64)
        cols = np.asarray(self.cols, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        support = np.asarray(self.support, dtype=np.int64)
        if np.any(rows == cols):
            raise DomainError("pairwise matrix must not contain diagonal entries")
        if support.size and support.min() < 1:
            raise DomainError("every pairwise entry needs support >= 1")

        n = self.num_items
        keys = rows * n + cols
        order = np.argsort(keys, kind="stable")
        rows, cols, values, support, keys = (
            rows[order], cols[order], values[order], support[order], keys[order]
        )
        mirrored = np.argsort(cols * n + rows, kind="stable")
        if not (
            np.array_equal(keys, (cols * n + rows)[mirrored])
            and np.array_equal(values, -values[mirrored])
            and np.array_equal(support, support[mirrored])
        ):
            raise DomainError("pairwise matrix must be skew-symmetric with symmetric support")

        _freeze(rows, cols, values, support)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)

    @classmethod
    def from_upper(
        cls,
        num_items: int,
        rows: np.ndarray,
        cols: np.ndarray,
        values: np.ndarray,
        support: np.ndarray,
        method: Optional[AggregationMethod] = None,
    ) -> "PairwiseMatrix":
        """Build from i < j entries; the (j, i) entries are mirrored with negated values."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        if np.any(rows >= cols):
            raise DomainError("from_upper expects entries with row < col")
        values = np.asarray(values, dtype=float)
        support = np.asarray(support, dtype=np.int64)
        return cls(
            num_items=num_items,
            rows=np.concatenate([rows, cols]),
            cols=np.concatenate([cols, rows]),
            values=np.concatenate([values, -values]),
            support=np.concatenate([support, support]),
            method=method,
        )

    @property
    def num_pairs(self) -> int:
        """Number of unordered item pairs present."""
        return int(self.rows.size // 2)

    def upper(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """Return (rows, cols, values, support) restricted to row < col."""
        mask = self.rows < self.cols
        return self.rows[mask], self.cols[mask], self.values[mask], self.support[mask]

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.num_items, self.num_items))
        dense[self.rows, self.cols] = self.values
        return dense


@dataclass(frozen=True)
class SampleSet:
    """Index set Omega with target values b; always skew-closed."""

    num_items: int
    pairs: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        values = np.asarray(self.values, dtype=float).reshape(-1)
        if pairs.shape[0] != values.size:
            raise DomainError("pairs and values must have equal length")
        if pairs.size and (pairs.min() < 0 or pairs.max() >= self.num_items):
            raise DomainError("sample index out of range")
        if np.any(pairs[:, 0] == pairs[:, 1]):
            raise DomainError("sample set must not contain diagonal pairs")
        keys = pairs[:, 0] * self.num_items + pairs[:, 1]
        if np.unique(keys).size != keys.size:
            raise DomainError("sample pairs must be unique")
        _freeze(pairs, values)
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "values", values)
        if not self.is_skew_closed():
            raise DomainError("sample set must be skew-closed")

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def rows(self) -> np.ndarray:
        return self.pairs[:, 0]

    @property
    def cols(self) -> np.ndarray:
        return self.pairs[:, 1]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def is_skew_closed(self) -> bool:
        n = self.num_items
        keys = self.rows * n + self.cols
        order = np.argsort(keys)
        mirrored = np.argsort(self.cols * n + self.rows)
        return bool(
            np.array_equal(keys[order], (self.cols * n + self.rows)[mirrored])
            and np.array_equal(self.values[order], -self.values[mirrored])
        )

    def to_sparse(self, values: Optional[np.ndarray] = None) -> sp.csr_matrix:
        """The n x n matrix with non-zeros on Omega (the adjoint map applied to ``values``)."""
        data = self.values if values is None else values
        return sp.csr_matrix(
            (data, (self.rows, self.cols)), shape=(self.num_items, self.num_items)
        )

    @classmethod
    def from_pairwise(cls, pairwise: PairwiseMatrix) -> "SampleSet":
        return cls(
            num_items=pairwise.num_items,
            pairs=np.column_stack([pairwise.rows, pairwise.cols]),
            values=pairwise.values,
        )

    @classmethod
    def from_dense(cls, Y: np.ndarray, pairs: Sequence[Tuple[int, int]]) -> "SampleSet":
        """Observe a dense skew matrix on unordered ``pairs`` (either orientation)."""
        Y = np.asarray(Y, dtype=float)
        pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        rows = np.minimum(pairs[:, 0], pairs[:, 1])
        cols = np.maximum(pairs[:, 0], pairs[:, 1])
        return cls.from_upper(Y.shape[0], rows, cols, Y[rows, cols])

    @classmethod
    def from_upper(
        cls, num_items: int, rows: np.ndarray, cols: np.ndarray, values: np.ndarray
    ) -> "SampleSet":
        """Skew-close a list of unordered (i, j, Y_ij) observations."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        values = np.asarray(values, dtype=float)
        return cls(
            num_items=num_items,
            pairs=np.column_stack(
                [np.concatenate([rows, cols]), np.concatenate([cols, rows])]
            ),
            values=np.concatenate([values, -values]),
        )


@dataclass
class SupportHistogram:
    """Counts of unordered pairs per comparison-support bin."""

    bin_edges: np.ndarray
    counts: np.ndarray
    num_pairs: int
    possible_pairs: int
    supports: np.ndarray = field(repr=False)

    @property
    def coverage(self) -> float:
        """Fraction of all n(n-1)/2 pairs that have at least one comparison."""
        return self.num_pairs / self.possible_pairs if self.possible_pairs else 0.0

    def count_above(self, threshold: int) -> int:
        return int(np.count_nonzero(self.supports > threshold))

    def fraction_above(self, threshold: int) -> float:
        """Fraction of all possible pairs with more than ``threshold`` comparisons."""
        if not self.possible_pairs:
            return 0.0
        return self.count_above(threshold) / self.possible_pairs


def _co_rater_pairs(mask: sp.csr_matrix) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    co = (mask.T @ mask).tocoo()
    keep = co.row < co.col
    rows, cols = co.row[keep].astype(np.int64), co.col[keep].astype(np.int64)
    counts = np.rint(co.data[keep]).astype(np.int64)
    order = np.lexsort((cols, rows))
    return rows[order], cols[order], counts[order]


def _entries(matrix: sp.csr_matrix, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    if rows.size == 0:
        return np.zeros(0)
    return np.asarray(matrix[rows, cols]).reshape(-1)


def _preference_counts(R: RatingsMatrix) -> sp.csr_matrix:
    """G[i, j] = number of voters rating item i strictly above item j."""
    order = np.lexsort((R.items, R.voters))
    voters, items, ratings = R.voters[order], R.items[order], R.ratings[order]
    bounds = np.flatnonzero(np.diff(voters)) + 1
    row_parts, col_parts = [], []
    for idx, r in zip(np.split(items, bounds), np.split(ratings, bounds)):
        if idx.size < 2:
            continue
        above = r[:, None] > r[None, :]
        row_parts.append(np.broadcast_to(idx[:, None], above.shape)[above])
        col_parts.append(np.broadcast_to(idx[None, :], above.shape)[above])
    n = R.num_items
    if not row_parts:
        return sp.csr_matrix((n, n))
    rows = np.concatenate(row_parts)
    cols = np.concatenate(col_parts)
    # duplicates are summed on conversion
    return sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n)).tocsr()


def aggregate(
    R: RatingsMatrix, method: Union[AggregationMethod, str] = AggregationMethod.ARITHMETIC_MEAN
) -> PairwiseMatrix:
    """
    Build the aggregate pairwise comparison matrix from ratings.

    Args:
        R: Ratings matrix
        method: Aggregation rule, as an AggregationMethod, its value or its code

    Returns:
        Skew-symmetric PairwiseMatrix with per-entry support counts

    Raises:
        DomainError: If a rating is nonpositive under the geometric mean
    """
    method = AggregationMethod.coerce(method)
    n = R.num_items

    if method is AggregationMethod.GEOMETRIC_MEAN and np.any(R.ratings <= 0):
        bad = int(np.flatnonzero(R.ratings <= 0)[0])
        raise DomainError(
            f"geometric_mean requires positive ratings; voter "
            f"'{R.voter_ids[R.voters[bad]]}' rated item '{R.item_ids[R.items[bad]]}' "
            f"as {R.ratings[bad]}"
        )

    mask = R.indicator()
    rows, cols, co = _co_rater_pairs(mask)

    if method in (AggregationMethod.ARITHMETIC_MEAN, AggregationMethod.GEOMETRIC_MEAN):
        transform = np.log if method is AggregationMethod.GEOMETRIC_MEAN else None
        # cross[i, j] = sum over co-raters of R_i (transformed)
        cross = (R.values(transform).T @ mask).tocsr()
        totals = _entries(cross, rows, cols) - _entries(cross, cols, rows)
        values, support = totals / co, co
        keep = np.ones(rows.size, dtype=bool)
    else:
        prefer = _preference_counts(R)
        above = np.rint(_entries(prefer, rows, cols)).astype(np.int64)
        below = np.rint(_entries(prefer, cols, rows)).astype(np.int64)
        if method is AggregationMethod.BINARY:
            values, support = (above - below) / co, co
            keep = np.ones(rows.size, dtype=bool)
        elif method is AggregationMethod.STRICT_BINARY:
            support = above + below
            keep = support > 0
            values = np.zeros(rows.size)
            values[keep] = (above[keep] - below[keep]) / support[keep]
        else:
            at_least = co - below
            at_most = co - above
            keep = (at_least > 0) & (at_most > 0)
            values = np.zeros(rows.size)
            values[keep] = np.log(at_least[keep] / at_most[keep])
            support = co
            omitted = int((~keep).sum())
            if omitted:
                logger.debug(f"log_odds omitted {omitted} pairs with a zero probability")

    pairwise = PairwiseMatrix.from_upper(
        n, rows[keep], cols[keep], values[keep], support[keep], method=method
    )
    logger.info(
        f"Aggregated {R.num_ratings} ratings with {method.value}: "
        f"{pairwise.num_pairs} of {n * (n - 1) // 2} item pairs compared"
    )
    return pairwise


def filter_support(Y: PairwiseMatrix, c: int) -> SampleSet:
    """
    Keep the entries of Y supported by at least ``c`` comparisons.

    An empty result is returned (not raised) together with an
    EmptySampleSetWarning; the caller decides whether that is fatal.
    """
    if c < 0:
        raise DomainError(f"minimum support must be >= 0, got {c}")
    keep = Y.support >= c
    samples = SampleSet(
        num_items=Y.num_items,
        pairs=np.column_stack([Y.rows[keep], Y.cols[keep]]),
        values=Y.values[keep],
    )
    logger.info(f"Kept {len(samples)} of {Y.rows.size} oriented entries with support >= {c}")
    if len(samples) == 0:
        message = f"No pairwise entries have support >= {c}; the solver has no constraints"
        logger.warning(message)
        warnings.warn(message, EmptySampleSetWarning, stacklevel=2)
    return samples


def support_histogram(
    Y: PairwiseMatrix, bin_edges: Optional[Sequence[int]] = None
) -> SupportHistogram:
    """
    Histogram unordered pairs by their comparison support.

    Bin ``k`` counts supports in [edges[k], edges[k+1]); the last bin is
    open-ended. Supports below the first edge are not counted.
    """
    edges = np.asarray(
        Config.SUPPORT_BIN_EDGES if bin_edges is None else bin_edges, dtype=np.int64
    )
    if edges.size == 0 or np.any(np.diff(edges) <= 0):
        raise DomainError("bin edges must be a non-empty increasing sequence")
    _, _, _, support = Y.upper()
    bins = np.searchsorted(edges, support, side="right") - 1
    counts = np.bincount(bins[bins >= 0], minlength=edges.size)
    n = Y.num_items
    return SupportHistogram(
        bin_edges=edges,
        counts=counts,
        num_pairs=int(support.size),
        possible_pairs=n * (n - 1) // 2,
        supports=support,
    )
