"""Recoverability diagnostics for score-difference matrices.

For a centered score vector s and Y = s e^T - e s^T, the Hermitian matrix iY
has coherence nu with respect to the operator basis made of the symmetric
elements (e_i e_j^T + e_j e_i^T)/sqrt(2), the skew elements
i(e_i e_j^T - e_j e_i^T)/sqrt(2) and the diagonal elements e_i e_i^T, where

    theta = max_i s_i^2 / (s^T s)
    rho   = (max_i s_i - min_i s_i) / ||s||
    nu    = max((n theta + 1) / 4, n rho^2)

The projector onto range(iY) is s s^T/(s^T s) - e e^T/n and sign(iY) is
iY / (||s|| sqrt(n)); evaluating the coherence traces against the three basis
families reduces them to the bounds 1/n + theta and 2 rho^2 / n, which is all
that is computed here. Uniform random sampling of roughly
2 n nu (1 + beta) (log n)^2 basis elements then recovers iY with probability
at least 1 - n^(-beta), up to an unspecified constant factor.

Separately, noiseless samples determine s (up to a constant) exactly when the
comparison graph on the items is connected.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, Union

import numpy as np
from scipy.sparse.csgraph import connected_components

from .aggregation import SampleSet
from .config import Config
from .errors import DomainError
from .scoring import ScoreVector

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CoherenceReport:
    """Coherence parameters of a score vector and the implied sample bound."""

    n: int
    theta: float
    rho: float
    nu: float
    beta: float
    sample_bound: float

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record["log_base"] = "e"
        return record


def coherence(s: Union[ScoreVector, np.ndarray], beta: float = Config.DEFAULT_BETA) -> CoherenceReport:
    """
    Evaluate theta, rho, nu and the sample-complexity product for ``s``.

    Args:
        s: Centered, nonzero score vector
        beta: Confidence parameter (> 0)

    Returns:
        CoherenceReport with sample_bound = 2 n nu (1 + beta) (ln n)^2

    Raises:
        DomainError: If s is zero, not centered, or beta <= 0
    """
    scores = s.scores if isinstance(s, ScoreVector) else np.asarray(s, dtype=float).reshape(-1)
    if beta <= 0:
        raise DomainError(f"beta must be positive, got {beta}")
    n = scores.size
    energy = float(scores @ scores)
    if n == 0 or energy == 0:
        raise DomainError("coherence is undefined for the zero score vector")
    if not ScoreVector(scores).is_centered():
        raise DomainError(f"score vector must be centered (sum = {scores.sum():.3e})")

    theta = float(np.max(scores**2) / energy)
    rho = float((scores.max() - scores.min()) / math.sqrt(energy))
    nu = max((n * theta + 1) / 4, n * rho**2)
    bound = 2 * n * nu * (1 + beta) * math.log(n) ** 2
    return CoherenceReport(n=n, theta=theta, rho=rho, nu=nu, beta=beta, sample_bound=bound)


def sample_graph_components(samples: SampleSet) -> int:
    """Number of connected components of the item comparison graph."""
    if samples.num_items == 0:
        return 0
    adjacency = samples.to_sparse(np.ones(len(samples)))
    count, _ = connected_components(adjacency, directed=False)
    if count > 1:
        logger.info(f"Comparison graph has {count} components; scores are only relative within each")
    return int(count)
