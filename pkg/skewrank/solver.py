"""Fixed-rank matrix completion by singular value projection (SVP).

Solves  min ||A(X) - b||_2  subject to  rank(X) <= k  where A samples the
entries of X on an index set Omega. Each iteration takes a gradient step on
the sampled residual and projects back onto rank-k matrices with a truncated
SVD:

    Z      = X_t - eta * A*(A(X_t) - b)
    X_t+1  = best rank-k approximation of Z

For skew-closed samples and even k the iterates stay skew-symmetric as long
as the k-th and (k+1)-th singular values are separated: the singular values
of a skew-symmetric matrix come in equal pairs, so truncating between pairs
keeps whole 2x2 blocks of its canonical form.
"""

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, svds

from .aggregation import SampleSet
from .config import Config
from .errors import ConfigurationError, DomainError, SkewSymmetryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters of the SVP iteration."""

    rank: int = Config.DEFAULT_RANK
    step_length: float = Config.DEFAULT_STEP_LENGTH
    tolerance: float = Config.DEFAULT_TOLERANCE
    max_iterations: int = Config.DEFAULT_MAX_ITERATIONS
    check_skew: bool = Config.DEBUG
    dense_max_n: int = Config.DENSE_SVD_MAX_N

    def __post_init__(self) -> None:
        if self.rank < 2 or self.rank % 2:
            raise ConfigurationError(f"target rank must be even and >= 2, got {self.rank}")
        if self.step_length <= 0:
            raise ConfigurationError(f"step length must be positive, got {self.step_length}")
        if self.tolerance <= 0:
            raise ConfigurationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 0:
            raise ConfigurationError("max_iterations must be >= 0")
        if self.dense_max_n < 0:
            raise ConfigurationError("dense_max_n must be >= 0")

    @classmethod
    def from_config(cls, **overrides: Any) -> "SolverConfig":
        """Defaults from Config; ``None`` overrides are ignored."""
        return cls(**{key: value for key, value in overrides.items() if value is not None})

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class LowRankFactors:
    """Factors of X = U diag(S) V^T with orthonormal U, V and sorted S."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    def __post_init__(self) -> None:
        U = np.asarray(self.U, dtype=float)
        S = np.asarray(self.S, dtype=float).reshape(-1)
        V = np.asarray(self.V, dtype=float)
        if U.ndim != 2 or U.shape != V.shape or U.shape[1] != S.size:
            raise DomainError(
                f"inconsistent factor shapes U{U.shape}, S{S.shape}, V{V.shape}"
            )
        if np.any(S < 0) or np.any(np.diff(S) > 0):
            raise DomainError("singular values must be nonnegative and nonincreasing")
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "S", S)
        object.__setattr__(self, "V", V)

    @classmethod
    def zeros(cls, n: int, k: int) -> "LowRankFactors":
        """The zero matrix, with coordinate vectors as orthonormal padding."""
        if k > n:
            raise DomainError(f"rank {k} exceeds matrix size {n}")
        basis = np.eye(n, k)
        return cls(U=basis, S=np.zeros(k), V=basis.copy())

    @property
    def n(self) -> int:
        return int(self.U.shape[0])

    @property
    def k(self) -> int:
        return int(self.S.size)

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.S))

    @property
    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.S))

    def to_dense(self) -> np.ndarray:
        return (self.U * self.S) @ self.V.T

    def _weights(self, x: np.ndarray) -> np.ndarray:
        # svds hands over (n,) vectors and (n, b) blocks
        return self.S if x.ndim == 1 else self.S[:, None]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return self.U @ (self._weights(x) * (self.V.T @ x))

    def rmatvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        return self.V @ (self._weights(x) * (self.U.T @ x))

    def orthonormality_error(self) -> float:
        """Largest spectral-norm deviation of U^T U and V^T V from the identity."""
        eye = np.eye(self.k)
        return float(
            max(
                np.linalg.norm(self.U.T @ self.U - eye, 2),
                np.linalg.norm(self.V.T @ self.V - eye, 2),
            )
        )


@dataclass
class SVPResult:
    """Outcome of an SVP solve."""

    factors: LowRankFactors
    residual_history: List[float]
    converged: bool
    gap_violation: bool
    iterations: int
    config: SolverConfig = field(default_factory=SolverConfig)

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]

    def to_metadata(self) -> Dict[str, Any]:
        return {
            "solver": self.config.to_dict(),
            "iterations": self.iterations,
            "final_residual": self.final_residual,
            "converged": self.converged,
            "gap_violation": self.gap_violation,
        }


def closest_skew(B: np.ndarray) -> np.ndarray:
    """Return (B - B^T) / 2, the nearest skew-symmetric matrix to B in any norm."""
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise DomainError(f"closest_skew needs a square matrix, got shape {B.shape}")
    return (B - B.T) / 2


def skew_deviation(factors: LowRankFactors) -> float:
    """||X + X^T||_F for X = U S V^T, evaluated from the factors.

    X + X^T = [U V] diag(S, S) [V U]^T, so the norm is that of the small
    middle block after orthogonalising both outer blocks.
    """
    left = np.hstack([factors.U, factors.V])
    right = np.hstack([factors.V, factors.U])
    _, r_left = np.linalg.qr(left)
    _, r_right = np.linalg.qr(right)
    middle = np.concatenate([factors.S, factors.S])
    return float(np.linalg.norm((r_left * middle) @ r_right.T))


def sampled_values(factors: LowRankFactors, pairs: np.ndarray) -> np.ndarray:
    """Entries of U S V^T at the given (row, col) pairs."""
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return np.einsum(
        "ij,j,ij->i", factors.U[pairs[:, 0]], factors.S, factors.V[pairs[:, 1]]
    )


def solver_residual(samples: SampleSet, factors: LowRankFactors) -> float:
    """||Omega(U S V^T) - b||_2 / ||b||_2 (absolute when b is zero)."""
    misfit = np.linalg.norm(sampled_values(factors, samples.pairs) - samples.values)
    scale = samples.norm
    return float(misfit / scale) if scale > 0 else float(misfit)


def _truncate(
    operator: Union[np.ndarray, LinearOperator], k: int, dense: bool
) -> Tuple[LowRankFactors, Optional[float]]:
    """Top-k singular triplets plus the (k+1)-th singular value when available."""
    n = operator.shape[0]
    if dense:
        U, S, Vt = np.linalg.svd(np.asarray(operator), full_matrices=False)
        next_sigma = float(S[k]) if S.size > k else None
        U, S, V = U[:, :k], S[:k], Vt[:k].T
    else:
        want = min(k + 1, n - 1)
        v0 = np.random.default_rng(0).standard_normal(n)
        U, S, Vt = svds(operator, k=want, tol=0, v0=v0)
        order = np.argsort(S)[::-1]
        U, S, V = U[:, order], S[order], Vt[order].T
        next_sigma = float(S[k]) if want > k else None
        U, S, V = U[:, :k], S[:k], V[:, :k]

    S = np.maximum(S, 0.0)
    # numerically zero directions beyond the rank of the operator
    cutoff = n * np.finfo(float).eps * (S[0] if S.size else 0.0)
    S = np.where(S > cutoff, S, 0.0)
    return LowRankFactors(U=np.ascontiguousarray(U), S=S, V=np.ascontiguousarray(V)), next_sigma


def sparse_truncated_svd(
    n: int,
    pairs: Sequence[Tuple[int, int]],
    values: Sequence[float],
    k: int,
    dense_max_n: Optional[int] = None,
) -> LowRankFactors:
    """
    Rank-k truncated SVD of the n x n sparse matrix with the given non-zeros.

    Args:
        n: Matrix dimension
        pairs: (row, col) positions of the non-zeros
        values: Values at those positions
        k: Number of singular triplets
        dense_max_n: Largest n handled by a dense SVD (defaults to config)

    Returns:
        LowRankFactors with singular values in nonincreasing order. If k
        exceeds the rank, trailing singular values are 0.
    """
    if k > n:
        raise DomainError(f"rank {k} exceeds matrix size {n}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    matrix = sp.csr_matrix(
        (np.asarray(values, dtype=float), (pairs[:, 0], pairs[:, 1])), shape=(n, n)
    )
    dense_max_n = Config.DENSE_SVD_MAX_N if dense_max_n is None else dense_max_n
    dense = n <= dense_max_n or k >= n - 1
    factors, _ = _truncate(matrix.toarray() if dense else matrix, k, dense)
    return factors


def _step_operator(
    factors: LowRankFactors, step: sp.csr_matrix, dense: bool
) -> Union[np.ndarray, LinearOperator]:
    """Z = X - step, as an array or as a sparse-plus-low-rank operator."""
    if dense:
        return factors.to_dense() - step.toarray()
    step_t = step.T.tocsr()
    n = factors.n
    return LinearOperator(
        shape=(n, n),
        matvec=lambda x: factors.matvec(x) - step @ x,
        rmatvec=lambda x: factors.rmatvec(x) - step_t @ x,
        dtype=float,
    )


def svp_complete(
    samples: SampleSet,
    config: Optional[SolverConfig] = None,
    callback: Optional[Callable[[int, LowRankFactors], None]] = None,
) -> SVPResult:
    """
    Complete a skew-closed sample set with a rank-k matrix by SVP.

    Args:
        samples: Skew-closed index set with target values
        config: Solver parameters (defaults from Config)
        callback: Called as callback(iteration, factors) after every projection

    Returns:
        SVPResult; non-convergence is reported through ``converged``

    Raises:
        DomainError: If the sample set is empty
        ConfigurationError: If the rank exceeds the number of items
        SkewSymmetryError: In debug mode, if an iterate loses skew-symmetry
    """
    config = config or SolverConfig()
    if len(samples) == 0:
        raise DomainError("svp_complete needs at least one sampled entry")
    n, k = samples.num_items, config.rank
    if k > n:
        raise ConfigurationError(f"target rank {k} exceeds number of items {n}")

    dense = n <= config.dense_max_n or k >= n - 1
    scale = samples.norm if samples.norm > 0 else 1.0
    factors = LowRankFactors.zeros(n, k)
    history: List[float] = []
    gap_violation = False
    converged = False
    iterations = 0

    logger.info(
        f"SVP on {n} items, {len(samples)} samples, rank {k}, "
        f"{'dense' if dense else 'iterative'} SVD"
    )

    while True:
        misfit = sampled_values(factors, samples.pairs) - samples.values
        residual = float(np.linalg.norm(misfit) / scale)
        history.append(residual)
        logger.debug(f"iteration {iterations}: relative residual {residual:.3e}")

        if residual <= config.tolerance:
            converged = True
            break
        if iterations >= config.max_iterations:
            break

        step = samples.to_sparse(config.step_length * misfit)
        factors, next_sigma = _truncate(_step_operator(factors, step, dense), k, dense)
        iterations += 1

        sigma_k = factors.S[-1]
        if (
            next_sigma is not None
            and sigma_k > 1e-12 * factors.S[0]
            and sigma_k <= next_sigma * (1 + Config.GAP_RTOL)
        ):
            if not gap_violation:
                logger.warning(
                    f"Singular values {k} and {k + 1} are not separated at iteration "
                    f"{iterations} ({sigma_k:.6g} vs {next_sigma:.6g}); "
                    "skew-symmetry of the iterates is not guaranteed"
                )
            gap_violation = True

        if config.check_skew:
            deviation = skew_deviation(factors)
            bound = Config.SKEW_TOLERANCE * max(1.0, factors.frobenius_norm)
            if deviation > bound:
                raise SkewSymmetryError(
                    f"iterate {iterations} has ||X + X^T||_F = {deviation:.3e} > {bound:.3e}"
                )

        if callback is not None:
            callback(iterations, factors)

    if converged:
        logger.info(f"SVP converged in {iterations} iterations, residual {history[-1]:.3e}")
    else:
        logger.warning(
            f"SVP stopped after {iterations} iterations without reaching tolerance "
            f"{config.tolerance:g} (residual {history[-1]:.3e})"
        )

    return SVPResult(
        factors=factors,
        residual_history=history,
        converged=converged,
        gap_violation=gap_violation,
        iterations=iterations,
        config=config,
    )
