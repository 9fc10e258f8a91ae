"""Consensus-regularized trend regression of ratings over prompts.

Each participant ``i`` gets a per-prompt trend ``phi(p) @ beta[:, i]`` with
``phi(p) = (1, p)`` (linear) or ``(1, p, sqrt(p))`` (nonlinear). Coefficients
minimise::

    1/(2m) sum_p ||r_p - B phi(p)||^2
        + lam * sum_p (B phi(p))^T L_p (B phi(p))
        + mu * (||beta_1||^2 + ||beta_2||^2)

The objective is an unconstrained convex quadratic, so the minimiser is the
solution of its stationarity system, assembled blockwise with Kronecker
products and solved directly. ``lam = mu = 0`` is per-participant OLS.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_nonnegative, check_prompts

__all__ = [
    "FeatureSet",
    "HyperParams",
    "ModelCoefficients",
    "PredictionTask",
    "IllPosedFitError",
    "DEFAULT_LAMBDA_GRID",
    "DEFAULT_MU_GRID",
    "fit",
    "predict",
    "objective",
    "objective_gradient",
    "relative_error",
    "cv_scores",
    "cross_validate",
    "compare_models",
    "ComparisonReport",
    "ConsensusRegressor",
    "ConsensusRegressorCV",
]

DEFAULT_LAMBDA_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
DEFAULT_MU_GRID = (0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0)
MAX_CONDITION = 1e12


class IllPosedFitError(ValueError):
    """The stationarity system is singular or too badly conditioned to trust."""


class FeatureSet(str, enum.Enum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"

    @property
    def k(self) -> int:
        return 2 if self is FeatureSet.LINEAR else 3

    def basis(self, prompts) -> np.ndarray:
        """Design rows ``phi(p)``; shape ``(len(prompts), k)``."""
        p = np.asarray(prompts, dtype=float)
        cols = [np.ones_like(p), p]
        if self is FeatureSet.NONLINEAR:
            cols.append(np.sqrt(p))
        return np.stack(cols, axis=-1)


@dataclass(frozen=True)
class HyperParams:
    lam: float = 0.0
    mu: float = 0.0

    def __post_init__(self):
        check_nonnegative(self.lam, "lambda")
        check_nonnegative(self.mu, "mu")

    def for_features(self, features: FeatureSet) -> "HyperParams":
        # shrinkage only exists in the nonlinear criterion
        if FeatureSet(features) is FeatureSet.LINEAR and self.mu != 0.0:
            return HyperParams(self.lam, 0.0)
        return self


@dataclass(frozen=True)
class ModelCoefficients:
    beta: np.ndarray  # (k, n)
    features: FeatureSet

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        features = FeatureSet(self.features)
        if beta.ndim != 2 or beta.shape[0] != features.k:
            raise ValueError(f"beta must have shape ({features.k}, n), got {beta.shape}")
        if not np.all(np.isfinite(beta)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "features", features)


@dataclass
class PredictionTask:
    """Training prompts ``1..m`` plus an optional scoring target.

    ``ratings[t]`` and ``laplacians[t]`` belong to ``prompts[t]``. Whether
    ``m`` identifies the coefficients is left to :func:`fit`, which rejects
    singular systems.
    """

    prompts: np.ndarray
    ratings: np.ndarray
    laplacians: np.ndarray
    target_prompt: int | None = None
    target_ratings: np.ndarray | None = None
    community_id: str | None = None

    def __post_init__(self):
        self.prompts = check_prompts(self.prompts)
        self.ratings = np.asarray(self.ratings, dtype=float)
        self.laplacians = np.asarray(self.laplacians, dtype=float)
        m = self.prompts.size
        if self.ratings.ndim != 2 or self.ratings.shape[0] != m:
            raise ValueError(f"ratings must have shape ({m}, n), got {self.ratings.shape}")
        n = self.ratings.shape[1]
        if self.laplacians.shape != (m, n, n):
            raise ValueError(f"laplacians must have shape ({m}, {n}, {n}), got {self.laplacians.shape}")
        if m < 1:
            raise ValueError("need at least one training prompt")
        if self.target_ratings is not None:
            self.target_ratings = np.asarray(self.target_ratings, dtype=float)
            if self.target_ratings.shape != (n,):
                raise ValueError("target ratings do not match the roster size")

    @property
    def m(self) -> int:
        return self.prompts.size

    @property
    def n(self) -> int:
        return self.ratings.shape[1]

    def subset(self, keep) -> "PredictionTask":
        keep = np.asarray(keep)
        return PredictionTask(
            self.prompts[keep], self.ratings[keep], self.laplacians[keep],
            community_id=self.community_id,
        )

    @classmethod
    def from_series(cls, series, target_prompt: int | None = None) -> "PredictionTask":
        """Train on prompts ``1..target-1`` of a ``CommunitySeries``; default target is the last."""
        from .graph import build_laplacian

        n_prompts = len(series.prompts)
        target = n_prompts if target_prompt is None else int(target_prompt)
        if target < 1 or target > n_prompts:
            raise ValueError(f"target prompt absent: prompt {target} not in 1..{n_prompts}")
        train = range(target - 1)
        return cls(
            prompts=np.arange(1, target),
            ratings=np.array([series.prompts[t][1] for t in train]).reshape(target - 1, -1),
            laplacians=np.array(
                [build_laplacian(series.prompts[t][0]).entries for t in train]
            ).reshape(target - 1, len(series.roster), len(series.roster)),
            target_prompt=target,
            target_ratings=np.asarray(series.prompts[target - 1][1], dtype=float),
            community_id=getattr(series, "community_id", None),
        )


def _system(prompts, ratings, laplacians, features: FeatureSet, lam: float, mu: float):
    """Stationarity system ``H vec(beta) = g`` with ``vec`` stacking rows of beta."""
    features = FeatureSet(features)
    phi = features.basis(prompts)
    m, n = ratings.shape
    k = features.k
    eye = np.eye(n)
    gram = phi.T @ phi / m
    H = np.kron(gram, eye)
    if lam:
        for t in range(m):
            H += 2.0 * lam * np.kron(np.outer(phi[t], phi[t]), laplacians[t])
    if mu:
        shrink = np.eye(k)
        shrink[0, 0] = 0.0
        H += 2.0 * mu * np.kron(shrink, eye)
    g = (phi.T @ ratings / m).reshape(-1)
    return H, g


def fit(task: PredictionTask, features, hp: HyperParams = HyperParams()) -> ModelCoefficients:
    """Minimise the regularized least-squares criterion over the task's prompts.

    Raises
    ------
    IllPosedFitError
        When the system's condition number exceeds 1e12.
    """
    features = FeatureSet(features)
    hp = hp.for_features(features)
    H, g = _system(task.prompts, task.ratings, task.laplacians, features, hp.lam, hp.mu)
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise IllPosedFitError(
            f"ill-posed fit: features={features.value}, lambda={hp.lam:g}, mu={hp.mu:g}, "
            f"prompts={task.prompts.tolist()}, condition={cond:.3g}"
        )
    beta = np.linalg.solve(H, g)
    return ModelCoefficients(beta.reshape(features.k, task.n), features)


def predict(coeffs: ModelCoefficients, prompt) -> np.ndarray:
    """Evaluate every participant's trend at ``prompt``; unclipped."""
    if np.any(np.asarray(prompt) < 1):
        raise ValueError("prompt must be >= 1")
    return coeffs.features.basis(prompt) @ coeffs.beta


def objective(beta, task: PredictionTask, features, hp: HyperParams) -> float:
    features = FeatureSet(features)
    hp = hp.for_features(features)
    beta = np.asarray(beta, dtype=float).reshape(features.k, task.n)
    fitted = features.basis(task.prompts) @ beta
    resid = task.ratings - fitted
    value = 0.5 * np.sum(resid**2) / task.m
    value += hp.lam * np.einsum("ti,tij,tj->", fitted, task.laplacians, fitted)
    value += hp.mu * np.sum(beta[1:] ** 2)
    return float(value)


def objective_gradient(beta, task: PredictionTask, features, hp: HyperParams) -> np.ndarray:
    """Gradient of :func:`objective` with respect to ``beta``; shape ``(k, n)``."""
    features = FeatureSet(features)
    hp = hp.for_features(features)
    H, g = _system(task.prompts, task.ratings, task.laplacians, features, hp.lam, hp.mu)
    return (H @ np.asarray(beta, dtype=float).reshape(-1) - g).reshape(features.k, task.n)


def relative_error(predicted, actual) -> float:
    predicted = np.asarray(predicted, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if predicted.shape != actual.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {actual.shape}")
    denom = np.linalg.norm(actual)
    if denom == 0.0:
        raise ValueError("relative error is undefined for an all-zero target")
    return float(np.linalg.norm(predicted - actual) / denom)


def _grid(features: FeatureSet, lambda_grid, mu_grid):
    lams = sorted({check_nonnegative(float(v), "lambda") for v in lambda_grid})
    mus = sorted({check_nonnegative(float(v), "mu") for v in mu_grid})
    if not lams or not mus:
        raise ValueError("hyperparameter grids must be nonempty")
    if features is FeatureSet.LINEAR:
        mus = [0.0]
    return [HyperParams(lam, mu) for lam in lams for mu in mus]


def cv_scores(task: PredictionTask, features, lambda_grid, mu_grid) -> dict:
    """Leave-one-prompt-out fold errors for every grid point.

    Returns a dict mapping ``HyperParams`` to an array of per-fold relative
    errors, or ``None`` when some fold's fit is ill-posed. Folds keep the
    held-out prompts' original indices as basis inputs.
    """
    features = FeatureSet(features)
    if task.m < 2:
        raise ValueError("cross-validation needs at least 2 training prompts")
    scores = {}
    folds = [np.delete(np.arange(task.m), t) for t in range(task.m)]
    for hp in _grid(features, lambda_grid, mu_grid):
        errors = []
        for t, keep in enumerate(folds):
            try:
                coeffs = fit(task.subset(keep), features, hp)
            except IllPosedFitError:
                errors = None
                break
            errors.append(relative_error(predict(coeffs, task.prompts[t]), task.ratings[t]))
        scores[hp] = None if errors is None else np.array(errors)
    return scores


def _select(scores: dict) -> HyperParams:
    best, best_err = None, np.inf
    # grid is ordered by (lambda, mu): strict improvement keeps the smaller pair on ties
    for hp, errs in scores.items():
        if errs is None:
            continue
        err = float(errs.mean())
        if best is None or err < best_err - 1e-12 * max(1.0, best_err):
            best, best_err = hp, err
    if best is None:
        raise IllPosedFitError("every grid point produced an ill-posed fit")
    return best


def cross_validate(task: PredictionTask, features, lambda_grid=DEFAULT_LAMBDA_GRID,
                   mu_grid=DEFAULT_MU_GRID) -> HyperParams:
    """Pick ``(lambda, mu)`` minimising mean leave-one-prompt-out error.

    Ties go to the smallest lambda, then the smallest mu.
    """
    return _select(cv_scores(task, features, lambda_grid, mu_grid))


@dataclass
class ComparisonReport:
    community_id: str | None
    features: str
    lam: float
    mu: float
    consensus_error: float
    baseline_error: float
    fold_errors: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "community_id": self.community_id,
            "features": self.features,
            "lambda": self.lam,
            "mu": self.mu,
            "consensus_error": self.consensus_error,
            "baseline_error": self.baseline_error,
            "fold_errors": list(self.fold_errors),
        }


def compare_models(task: PredictionTask, features, lambda_grid=DEFAULT_LAMBDA_GRID,
                   mu_grid=DEFAULT_MU_GRID) -> ComparisonReport:
    """Score the cross-validated consensus model against plain OLS at the target prompt."""
    features = FeatureSet(features)
    if task.target_prompt is None or task.target_ratings is None:
        raise ValueError("target prompt absent: task has nothing to score against")
    scores = cv_scores(task, features, lambda_grid, mu_grid)
    hp = _select(scores)
    consensus = predict(fit(task, features, hp), task.target_prompt)
    baseline = predict(fit(task, features, HyperParams(0.0, 0.0)), task.target_prompt)
    return ComparisonReport(
        community_id=task.community_id,
        features=features.value,
        lam=hp.lam,
        mu=hp.mu,
        consensus_error=relative_error(consensus, task.target_ratings),
        baseline_error=relative_error(baseline, task.target_ratings),
        fold_errors=scores[hp].tolist(),
    )


def _as_task(X, y, laplacians) -> PredictionTask:
    prompts = check_prompts(X)
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    if laplacians is None:
        laplacians = np.zeros((prompts.size, y.shape[1], y.shape[1]))
    return PredictionTask(prompts, y, laplacians)


class ConsensusRegressor(RegressorMixin, BaseEstimator):
    """Per-participant rating trends with a graph-smoothness penalty.

    Parameters
    ----------
    features : {"linear", "nonlinear"}
        Trend basis: ``(1, p)`` or ``(1, p, sqrt(p))``.
    lam : float
        Weight on the summed Laplacian quadratic form of the fitted ratings.
    mu : float
        Ridge penalty on the non-intercept coefficients. Ignored for linear
        features.

    Attributes
    ----------
    coef_ : ndarray of shape (k, n_participants)
    n_outputs_ : int

    Examples
    --------
    ``X`` holds prompt indices and ``y`` one row of ratings per prompt::

        >>> import numpy as np
        >>> reg = ConsensusRegressor().fit([1, 2, 3], np.array([[1.0], [2.0], [3.0]]))
        >>> reg.predict([4]).round(6)
        array([[4.]])
    """

    def __init__(self, features="linear", lam=0.0, mu=0.0):
        self.features = features
        self.lam = lam
        self.mu = mu

    def fit(self, X, y, laplacians=None):
        """Fit on prompts ``X`` (m,), ratings ``y`` (m, n) and per-prompt Laplacians (m, n, n)."""
        task = _as_task(X, y, laplacians)
        self.coefficients_ = fit(task, self.features, HyperParams(self.lam, self.mu))
        self.coef_ = self.coefficients_.beta
        self.n_outputs_ = task.n
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        return predict(self.coefficients_, check_prompts(X))


class ConsensusRegressorCV(ConsensusRegressor):
    """:class:`ConsensusRegressor` with ``(lam, mu)`` chosen by leave-one-prompt-out CV.

    After fitting, ``lam_`` and ``mu_`` hold the selection and
    ``cv_results_`` maps each grid pair to its fold errors (``None`` when a
    fold was ill-posed).
    """

    def __init__(self, features="linear", lambdas=DEFAULT_LAMBDA_GRID, mus=DEFAULT_MU_GRID):
        self.features = features
        self.lambdas = lambdas
        self.mus = mus

    def fit(self, X, y, laplacians=None):
        task = _as_task(X, y, laplacians)
        scores = cv_scores(task, self.features, self.lambdas, self.mus)
        best = _select(scores)
        self.lam_, self.mu_ = best.lam, best.mu
        self.cv_results_ = {(hp.lam, hp.mu): v for hp, v in scores.items()}
        self.coefficients_ = fit(task, self.features, best)
        self.coef_ = self.coefficients_.beta
        self.n_outputs_ = task.n
        return self
