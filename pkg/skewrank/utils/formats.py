"""Reading and writing ratings, pairwise matrices, factors, rankings and run metadata."""

import json
import logging
import os
import re
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import scipy.sparse as sp
from scipy.io import mmread, mmwrite

from ..aggregation import AggregationMethod, PairwiseMatrix, RatingsMatrix
from ..config import Config
from ..errors import RatingsParseError
from ..scoring import RankedList
from ..solver import LowRankFactors

logger = logging.getLogger(__name__)

RATING_COLUMNS = ["voter_id", "item_id", "rating"]

# Output directory layout
ITEMS_FILE = "items.csv"
PAIRWISE_FILE = "pairwise.mtx"
SUPPORT_FILE = "support.mtx"
FACTORS_DIR = "factors"
RANKING_FILE = "ranking.csv"
METADATA_FILE = "metadata.json"


# Words that mark the third field of a first line as a column name
HEADER_RATING_WORDS = ("rating", "score", "value", "vote", "stars")


def _looks_like_header(first_row: pd.Series) -> bool:
    field = str(first_row.iloc[2]).strip().lower()
    return any(word in field for word in HEADER_RATING_WORDS)


def read_ratings(
    path: str, delimiter: Optional[str] = None, has_header: Optional[bool] = None
) -> RatingsMatrix:
    """
    Read ``voter_id, item_id, rating`` records from a delimited text file.

    IDs are arbitrary strings, mapped to dense indices in order of first
    appearance. Blank lines are ignored.

    Args:
        path: Ratings file
        delimiter: Field separator (defaults to Config.DELIMITER)
        has_header: Whether the first line is a header; when None, line 1 is a
            header if its rating field names a rating column (e.g. "rating")

    Returns:
        RatingsMatrix carrying the original voter and item IDs

    Raises:
        RatingsParseError: With the 1-based line number of the first bad record
    """
    delimiter = delimiter or Config.DELIMITER
    try:
        frame = pd.read_csv(
            path,
            sep=delimiter,
            header=None,
            dtype=str,
            keep_default_na=False,
            na_values=[""],
            skip_blank_lines=False,
            skipinitialspace=True,
        )
    except pd.errors.EmptyDataError:
        raise RatingsParseError(f"{path} contains no ratings")
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        raise RatingsParseError(
            "expected 3 fields (voter_id, item_id, rating)",
            line=int(match.group(1)) if match else None,
        ) from e
    except OSError as e:
        raise RatingsParseError(f"cannot read {path}: {e}") from e

    # pandas index i corresponds to file line i + 1
    frame.index = frame.index + 1
    frame = frame.dropna(how="all")
    if frame.empty:
        raise RatingsParseError(f"{path} contains no ratings")
    if frame.shape[1] != 3:
        line = int(frame.index[0])
        if frame.shape[1] > 3:
            line = int(frame.index[frame.iloc[:, 3:].notna().any(axis=1).to_numpy()][0])
        raise RatingsParseError(
            f"expected 3 fields (voter_id, item_id, rating), found {frame.shape[1]}", line=line
        )
    frame.columns = RATING_COLUMNS

    if has_header is None:
        has_header = _looks_like_header(frame.iloc[0])
    if has_header:
        frame = frame.iloc[1:]
        if frame.empty:
            raise RatingsParseError(f"{path} contains a header but no ratings")

    incomplete = frame.isna().any(axis=1)
    if incomplete.any():
        raise RatingsParseError("missing field", line=int(frame.index[incomplete.to_numpy()][0]))

    ratings = pd.to_numeric(frame["rating"], errors="coerce")
    values = ratings.to_numpy(dtype=float)
    bad = ~np.isfinite(values)
    if bad.any():
        line = int(frame.index[bad][0])
        raise RatingsParseError(f"rating '{frame.loc[line, 'rating']}' is not a finite number", line=line)

    frame = frame.assign(
        voter_id=frame["voter_id"].str.strip(), item_id=frame["item_id"].str.strip()
    )
    duplicated = frame.duplicated(subset=["voter_id", "item_id"]).to_numpy()
    if duplicated.any():
        line = int(frame.index[duplicated][0])
        raise RatingsParseError(
            f"voter '{frame.loc[line, 'voter_id']}' rated item "
            f"'{frame.loc[line, 'item_id']}' more than once",
            line=line,
        )

    voters, voter_ids = pd.factorize(frame["voter_id"])
    items, item_ids = pd.factorize(frame["item_id"])
    R = RatingsMatrix.from_triplets(
        voters,
        items,
        values,
        voter_ids=[str(v) for v in voter_ids],
        item_ids=[str(i) for i in item_ids],
    )
    logger.info(
        f"Read {R.num_ratings} ratings from {R.num_voters} voters on {R.num_items} items"
    )
    return R


def write_ratings(R: RatingsMatrix, path: str, delimiter: Optional[str] = None) -> None:
    """Write ratings with a header line, one record per rating."""
    frame = pd.DataFrame(
        {
            "voter_id": np.asarray(R.voter_ids, dtype=object)[R.voters],
            "item_id": np.asarray(R.item_ids, dtype=object)[R.items],
            "rating": R.ratings,
        }
    )
    frame.to_csv(path, sep=delimiter or Config.DELIMITER, index=False)


def write_item_index(item_ids: Sequence[str], path: str) -> None:
    pd.DataFrame({"index": np.arange(len(item_ids)), "item_id": list(item_ids)}).to_csv(
        path, index=False
    )


def read_item_index(path: str) -> List[str]:
    frame = pd.read_csv(path, dtype={"item_id": str}, keep_default_na=False)
    if not np.array_equal(frame["index"].to_numpy(), np.arange(len(frame))):
        raise RatingsParseError(f"{path}: item indices must be 0..n-1 in order")
    return frame["item_id"].tolist()


def write_pairwise(
    Y: PairwiseMatrix, values_path: str, support_path: str, comment: str = ""
) -> None:
    """
    Store the i < j entries of Y as two Matrix Market coordinate files.

    The support file defines which pairs are present; the values file may omit
    entries whose value is exactly zero.
    """
    rows, cols, values, support = Y.upper()
    shape = (Y.num_items, Y.num_items)
    mmwrite(
        values_path,
        sp.coo_matrix((values, (rows, cols)), shape=shape),
        comment=comment,
        field="real",
        precision=17,
        symmetry="general",
    )
    mmwrite(
        support_path,
        sp.coo_matrix((support, (rows, cols)), shape=shape),
        comment=comment,
        field="integer",
        symmetry="general",
    )


def read_pairwise(
    values_path: str, support_path: str, method: Optional[AggregationMethod] = None
) -> PairwiseMatrix:
    """Rebuild a skew-symmetric PairwiseMatrix from its upper-triangle files."""
    support = sp.coo_matrix(mmread(support_path))
    values = sp.csr_matrix(mmread(values_path))
    if support.shape != values.shape or support.shape[0] != support.shape[1]:
        raise RatingsParseError(
            f"pairwise files disagree on shape: {values.shape} vs {support.shape}"
        )
    rows, cols = support.row.astype(np.int64), support.col.astype(np.int64)
    present = np.asarray(values[rows, cols], dtype=float).reshape(-1) if rows.size else np.zeros(0)
    return PairwiseMatrix.from_upper(
        support.shape[0],
        rows,
        cols,
        present,
        np.rint(support.data).astype(np.int64),
        method=method,
    )


def write_factors(factors: LowRankFactors, directory: str) -> None:
    """Save U (n x k), S (k,) and V (n x k) as U.npy, S.npy and V.npy under ``directory``."""
    os.makedirs(directory, exist_ok=True)
    for name in ("U", "S", "V"):
        np.save(os.path.join(directory, f"{name}.npy"), getattr(factors, name))


def read_factors(directory: str) -> LowRankFactors:
    arrays = {name: np.load(os.path.join(directory, f"{name}.npy")) for name in ("U", "S", "V")}
    return LowRankFactors(**arrays)


def write_ranking(ranking: RankedList, path: str, delimiter: Optional[str] = None) -> None:
    ranking.to_frame().to_csv(path, sep=delimiter or Config.DELIMITER, index=False)


def read_ranking(path: str, delimiter: Optional[str] = None) -> pd.DataFrame:
    return pd.read_csv(
        path, sep=delimiter or Config.DELIMITER, dtype={"item_id": str}, keep_default_na=False
    )


def write_metadata(record: Dict[str, Any], path: str) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(record, f, indent=2, sort_keys=True)
        f.write("\n")


def read_metadata(path: str) -> Dict[str, Any]:
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def output_paths(directory: str) -> Dict[str, str]:
    """Paths of every artifact in an output directory."""
    names = {
        "items": ITEMS_FILE,
        "pairwise": PAIRWISE_FILE,
        "support": SUPPORT_FILE,
        "factors": FACTORS_DIR,
        "ranking": RANKING_FILE,
        "metadata": METADATA_FILE,
    }
    return {key: os.path.join(directory, name) for key, name in names.items()}


def write_table(frame: pd.DataFrame, path: str, delimiter: Optional[str] = None) -> None:
    """Write a plot-ready result table."""
    frame.to_csv(path, sep=delimiter or Config.DELIMITER, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
