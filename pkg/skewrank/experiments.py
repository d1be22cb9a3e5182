"""Synthetic studies: score recovery from sampled comparisons and an
item-response ratings model compared against the mean-rating baseline."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

import numpy as np
import pandas as pd
from tqdm import tqdm

from .aggregation import AggregationMethod, RatingsMatrix, SampleSet, aggregate, filter_support
from .analysis import coherence
from .config import Config
from .errors import DomainError
from .scoring import ScoreVector, extract_scores
from .solver import SolverConfig, svp_complete

logger = logging.getLogger(__name__)

T = TypeVar("T")
SeedLike = Union[int, np.random.Generator, None]

SCORE_MODELS = ("uniform_random", "uniform_spaced")

# Thresholds of the five-level rating function L
LEVEL_EDGES = np.array([1.5, 2.5, 3.5, 4.5])


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Generator owned by one trial; independent of scheduling order."""
    return np.random.default_rng([seed, trial])


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _run_trials(
    run: Callable[[int], T], trials: int, workers: int, progress: bool, desc: str
) -> List[T]:
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(tqdm(pool.map(run, range(trials)), total=trials, desc=desc, disable=not progress))
    return [run(i) for i in tqdm(range(trials), desc=desc, disable=not progress)]


def kendall_tau(x: Sequence[float], y: Sequence[float]) -> float:
    """
    Kendall rank correlation (tau-a).

    Pairs tied in either vector count as neither concordant nor discordant;
    the denominator is always n(n-1)/2.

    Raises:
        DomainError: On length mismatch, fewer than two entries, or a constant vector
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.size != y.size:
        raise DomainError(f"kendall_tau needs equal lengths, got {x.size} and {y.size}")
    n = x.size
    if n < 2:
        raise DomainError("kendall_tau needs at least two entries")
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DomainError("kendall_tau is undefined for a constant vector")
    i, j = np.triu_indices(n, 1)
    agreement = np.sign(x[i] - x[j]) * np.sign(y[i] - y[j])
    return float(agreement.sum() / (n * (n - 1) / 2))


def gen_pairwise_from_scores(
    s: Union[ScoreVector, Sequence[float]], noise_eps: float = 0.0, seed: SeedLike = None
) -> np.ndarray:
    """
    Dense comparison matrix Y = s e^T - e s^T + eps (E - E^T) / 2.

    E is standard normal; skew-symmetrising it keeps Y exactly skew, with
    per-entry noise standard deviation eps / sqrt(2).
    """
    if noise_eps < 0:
        raise DomainError(f"noise_eps must be >= 0, got {noise_eps}")
    scores = s.scores if isinstance(s, ScoreVector) else np.asarray(s, dtype=float)
    Y = scores[:, None] - scores[None, :]
    if noise_eps > 0:
        E = _rng(seed).standard_normal(Y.shape)
        Y = Y + noise_eps * ((E - E.T) / 2)
    np.fill_diagonal(Y, 0.0)
    return Y


def sample_entries(Y: np.ndarray, m: int, seed: SeedLike = None) -> SampleSet:
    """Sample m unordered off-diagonal pairs uniformly without replacement, skew-closed."""
    Y = np.asarray(Y, dtype=float)
    n = Y.shape[0]
    available = n * (n - 1) // 2
    if m < 1:
        raise DomainError("at least one pair must be sampled")
    if m > available:
        raise DomainError(f"cannot sample {m} pairs from {available} off-diagonal pairs")
    rows, cols = np.triu_indices(n, 1)
    chosen = np.sort(_rng(seed).choice(available, size=m, replace=False))
    rows, cols = rows[chosen], cols[chosen]
    return SampleSet.from_upper(n, rows, cols, Y[rows, cols])


@dataclass(frozen=True)
class RecoveryTrialSpec:
    """One point of the recovery study; ``num_samples`` counts oriented entries."""

    n: int
    num_samples: int
    noise_eps: float = 0.0
    score_model: str = "uniform_random"
    seed: int = Config.DEFAULT_SEED
    trials: int = Config.DEFAULT_TRIALS

    def __post_init__(self) -> None:
        if self.n < 2:
            raise DomainError("recovery trials need n >= 2")
        if not 2 <= self.num_samples <= self.n * (self.n - 1):
            raise DomainError(
                f"num_samples must lie in [2, n(n-1)] = [2, {self.n * (self.n - 1)}]"
            )
        if self.noise_eps < 0:
            raise DomainError("noise_eps must be >= 0")
        if self.score_model not in SCORE_MODELS:
            raise DomainError(f"score_model must be one of {SCORE_MODELS}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")

    @property
    def noiseless(self) -> bool:
        return self.noise_eps == 0


@dataclass
class RecoveryOutcome:
    trial: int
    error: float
    tau: float
    nu: float
    converged: bool
    iterations: int
    success: bool


@dataclass
class RecoverySummary:
    spec: RecoveryTrialSpec
    outcomes: List[RecoveryOutcome]

    @property
    def success_fraction(self) -> float:
        return float(np.mean([o.success for o in self.outcomes]))

    @property
    def nonconverged(self) -> int:
        return sum(not o.converged for o in self.outcomes)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(o) for o in self.outcomes])


def _true_scores(spec: RecoveryTrialSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.score_model == "uniform_spaced":
        return np.linspace(0.0, 1.0, spec.n)
    return rng.uniform(0.0, 1.0, spec.n)


def run_recovery_trial(
    spec: RecoveryTrialSpec, trial: int, solver_config: Optional[SolverConfig] = None
) -> RecoveryOutcome:
    """
    Generate, sample, complete and score one recovery trial.

    Noiseless trials succeed when the solver converged and the relative error
    of the extracted scores is below the recovery threshold. Noisy trials
    succeed when the recovered order matches the true order exactly, whether
    or not the solver reached its tolerance.
    """
    rng = trial_rng(spec.seed, trial)
    s = _true_scores(spec, rng)
    Y = gen_pairwise_from_scores(s, spec.noise_eps, rng)
    samples = sample_entries(Y, spec.num_samples // 2, rng)
    result = svp_complete(samples, solver_config)
    extracted = extract_scores(result.factors).scores

    truth = s - s.mean()
    error = float(np.linalg.norm(extracted - truth) / np.linalg.norm(truth))
    try:
        tau = kendall_tau(truth, extracted)
    except DomainError:
        tau = float("nan")

    if spec.noiseless:
        success = result.converged and error < Config.RECOVERY_THRESHOLD
    else:
        success = tau == 1.0
    return RecoveryOutcome(
        trial=trial,
        error=error,
        tau=tau,
        nu=coherence(truth).nu,
        converged=result.converged,
        iterations=result.iterations,
        success=bool(success),
    )


def recovery_trial(
    spec: RecoveryTrialSpec,
    solver_config: Optional[SolverConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> RecoverySummary:
    """Run all trials of ``spec`` and report per-trial outcomes."""
    outcomes = _run_trials(
        lambda trial: run_recovery_trial(spec, trial, solver_config),
        spec.trials,
        workers,
        progress,
        desc=f"recovery n={spec.n} |Omega|={spec.num_samples}",
    )
    summary = RecoverySummary(spec=spec, outcomes=outcomes)
    logger.info(
        f"Recovery n={spec.n}, |Omega|={spec.num_samples}, eps={spec.noise_eps}: "
        f"success {summary.success_fraction:.2f}, {summary.nonconverged} not converged"
    )
    return summary


def recovery_sweep(
    n: int,
    multipliers: Sequence[float],
    noise_eps: float = 0.0,
    score_model: Optional[str] = None,
    seed: int = Config.DEFAULT_SEED,
    trials: int = Config.DEFAULT_TRIALS,
    solver_config: Optional[SolverConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Success fraction against sample count, with |Omega| = multiplier * n ln n.

    Noiseless runs default to uniform random scores, noisy runs to uniformly
    spaced scores.

    Returns:
        Tuple of (one summary row per multiplier, one row per trial)
    """
    if score_model is None:
        score_model = "uniform_random" if noise_eps == 0 else "uniform_spaced"
    rows, trial_frames = [], []
    for multiplier in multipliers:
        num_samples = min(int(round(multiplier * n * math.log(n))), n * (n - 1))
        spec = RecoveryTrialSpec(
            n=n,
            num_samples=max(num_samples, 2),
            noise_eps=noise_eps,
            score_model=score_model,
            seed=seed,
            trials=trials,
        )
        summary = recovery_trial(spec, solver_config, workers, progress)
        trial_frames.append(
            summary.to_frame().assign(multiplier=multiplier, num_samples=spec.num_samples)
        )
        rows.append(
            {
                "n": n,
                "multiplier": multiplier,
                "num_samples": spec.num_samples,
                "noise_eps": noise_eps,
                "trials": trials,
                "success_fraction": summary.success_fraction,
                "nonconverged": summary.nonconverged,
                "median_nu": float(np.median([o.nu for o in summary.outcomes])),
            }
        )
    return pd.DataFrame(rows), pd.concat(trial_frames, ignore_index=True)


def coherence_trend(summary: RecoverySummary, groups: int = 2) -> pd.DataFrame:
    """Success fraction per batch of trials grouped by increasing nu."""
    frame = summary.to_frame().sort_values("nu", kind="stable")
    batches = np.array_split(np.arange(len(frame)), groups)
    return pd.DataFrame(
        [
            {
                "nu_low": float(frame["nu"].iloc[b].min()),
                "nu_high": float(frame["nu"].iloc[b].max()),
                "success_fraction": float(frame["success"].iloc[b].mean()),
            }
            for b in batches
            if b.size
        ]
    )


@dataclass(frozen=True)
class IRTSpec:
    """Item-response ratings model R_ij = L[a_i + b_i t_j + E_ij].

    The second parameter of each normal distribution is a standard deviation.
    """

    num_users: int = 1000
    num_items: int = 100
    avg_ratings_per_user: float = 5.0
    noise_eps: float = 0.0
    seed: int = Config.DEFAULT_SEED
    trials: int = Config.DEFAULT_TRIALS
    center_mean: float = 3.0
    center_sd: float = 1.0
    sensitivity_mean: float = 0.5
    sensitivity_sd: float = 0.5
    quality_mean: float = 0.1
    quality_sd: float = 1.0
    method: str = "am"
    min_support: int = 0
    rank: int = Config.DEFAULT_RANK

    def __post_init__(self) -> None:
        if self.num_users < 1 or self.num_items < 2:
            raise DomainError("IRT model needs at least one user and two items")
        if not 0 < self.avg_ratings_per_user <= self.num_items:
            raise DomainError(
                f"avg_ratings_per_user must lie in (0, {self.num_items}], "
                f"got {self.avg_ratings_per_user}"
            )
        if self.noise_eps < 0:
            raise DomainError("noise_eps must be >= 0")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        AggregationMethod.coerce(self.method)


def levels(alpha: Union[float, np.ndarray]) -> np.ndarray:
    """Five-level rating function: 1 below 1.5, then one level per unit, 5 from 4.5 up."""
    return np.digitize(alpha, LEVEL_EDGES) + 1


def gen_irt_ratings(
    spec: IRTSpec, seed: SeedLike = None
) -> Tuple[RatingsMatrix, np.ndarray]:
    """
    Draw a ratings matrix from the item-response model.

    Each (user, item) cell is rated independently with probability
    avg_ratings_per_user / num_items.

    Returns:
        Tuple of (ratings, true item qualities t)
    """
    rng = _rng(spec.seed if seed is None else seed)
    a = rng.normal(spec.center_mean, spec.center_sd, spec.num_users)
    b = rng.normal(spec.sensitivity_mean, spec.sensitivity_sd, spec.num_users)
    t = rng.normal(spec.quality_mean, spec.quality_sd, spec.num_items)
    shape = (spec.num_users, spec.num_items)
    present = rng.random(shape) < spec.avg_ratings_per_user / spec.num_items
    noise = spec.noise_eps * rng.standard_normal(shape)

    latent = a[:, None] + b[:, None] * t[None, :] + noise
    users, items = np.nonzero(present)
    ratings = RatingsMatrix.from_triplets(
        users,
        items,
        levels(latent[users, items]).astype(float),
        num_voters=spec.num_users,
        num_items=spec.num_items,
    )
    return ratings, t


def mean_rating_scores(R: RatingsMatrix) -> np.ndarray:
    """Per-item mean rating; NaN for items nobody rated."""
    counts = R.ratings_per_item
    totals = np.bincount(R.items, weights=R.ratings, minlength=R.num_items)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, totals / np.maximum(counts, 1), np.nan)


@dataclass
class IRTTrial:
    trial: int
    tau_nn: float
    tau_mean: float
    converged: bool
    excluded_items: int


@dataclass
class IRTSummary:
    spec: IRTSpec
    trials: List[IRTTrial]
    quantiles: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in ("tau_nn", "tau_mean"):
            values = np.array([getattr(t, name) for t in self.trials], dtype=float)
            q25, q50, q75 = np.nanpercentile(values, [25, 50, 75])
            self.quantiles[name] = {"q25": float(q25), "median": float(q50), "q75": float(q75)}

    @property
    def median_tau_nn(self) -> float:
        return self.quantiles["tau_nn"]["median"]

    @property
    def median_tau_mean(self) -> float:
        return self.quantiles["tau_mean"]["median"]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(t) for t in self.trials])


def _safe_tau(x: np.ndarray, y: np.ndarray, label: str) -> float:
    try:
        return kendall_tau(x, y)
    except DomainError as e:
        logger.warning(f"{label}: {e}")
        return float("nan")


def run_irt_trial(
    spec: IRTSpec, trial: int, solver_config: Optional[SolverConfig] = None
) -> IRTTrial:
    """Rank one synthetic ratings matrix both ways and correlate with the truth."""
    R, t = gen_irt_ratings(spec, trial_rng(spec.seed, trial))

    pairwise = aggregate(R, spec.method)
    samples = filter_support(pairwise, spec.min_support)
    config = solver_config or SolverConfig(rank=spec.rank)
    result = svp_complete(samples, config)
    scores = extract_scores(result.factors).scores
    tau_nn = _safe_tau(t, scores, "completion scores")

    means = mean_rating_scores(R)
    rated = ~np.isnan(means)
    excluded = int((~rated).sum())
    if excluded:
        logger.warning(f"Trial {trial}: {excluded} unrated items excluded from the mean-rating baseline")
    tau_mean = _safe_tau(t[rated], means[rated], "mean rating")

    return IRTTrial(
        trial=trial,
        tau_nn=tau_nn,
        tau_mean=tau_mean,
        converged=result.converged,
        excluded_items=excluded,
    )


def irt_comparison(
    spec: IRTSpec,
    solver_config: Optional[SolverConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> IRTSummary:
    """Kendall tau of completion scores and of mean ratings across trials."""
    trials = _run_trials(
        lambda trial: run_irt_trial(spec, trial, solver_config),
        spec.trials,
        workers,
        progress,
        desc=f"irt eps={spec.noise_eps} r/u={spec.avg_ratings_per_user}",
    )
    summary = IRTSummary(spec=spec, trials=trials)
    logger.info(
        f"IRT eps={spec.noise_eps}, {spec.avg_ratings_per_user} ratings/user: "
        f"median tau {summary.median_tau_nn:.3f} (completion) vs "
        f"{summary.median_tau_mean:.3f} (mean rating)"
    )
    return summary


def irt_sweep(
    base: IRTSpec,
    noise_levels: Sequence[float],
    ratings_per_user: Sequence[float],
    solver_config: Optional[SolverConfig] = None,
    workers: int = 1,
    progress: bool = False,
) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """Median and quartile tau per (ratings per user, noise) combination, plus per-trial rows."""
    rows, trial_frames = [], []
    for per_user in ratings_per_user:
        for eps in noise_levels:
            spec = IRTSpec(**{**asdict(base), "noise_eps": eps, "avg_ratings_per_user": per_user})
            summary = irt_comparison(spec, solver_config, workers, progress)
            trial_frames.append(summary.to_frame().assign(ratings_per_user=per_user, noise_eps=eps))
            row = {"ratings_per_user": per_user, "noise_eps": eps, "trials": spec.trials}
            for name, stats in summary.quantiles.items():
                for stat, value in stats.items():
                    row[f"{name}_{stat}"] = value
            rows.append(row)
    return pd.DataFrame(rows), pd.concat(trial_frames, ignore_index=True)
