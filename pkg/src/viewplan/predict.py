"""Predictors for the required number of views of an unseen object.

Four families share one output contract (a clamped, rounded view count):

- constant statistics (mode / median / mean of a label distribution),
- a closed-form ridge regressor over image features,
- an oracle that passes the ground-truth label through (upper bound),
- with all real-valued outputs clamped to [out_min, out_max] and rounded
  half-up to an integer.
"""

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import jsonio
from .errors import FitFailureError, FormatError, InvalidArgumentError

OUT_MIN = 13
OUT_MAX = 58

SOURCE_ORACLE = "oracle"
SOURCE_MODE = "mode"
SOURCE_MEDIAN = "median"
SOURCE_MEAN = "mean"
SOURCE_REGRESSOR = "regressor"
STATISTIC_KINDS = (SOURCE_MODE, SOURCE_MEDIAN, SOURCE_MEAN)

#: Label statistics of the reference object set this tool ships with, used
#: when no label collection is supplied to the statistic predictors.
REFERENCE_LABEL_STATS = {SOURCE_MODE: 32.0, SOURCE_MEDIAN: 34.0, SOURCE_MEAN: 35.0}


def round_half_up(x: float) -> int:
    return int(math.floor(float(x) + 0.5))


@dataclass(frozen=True)
class Prediction:
    v_hat_real: float  # clamped, before rounding
    v_hat: int
    source: str

    @classmethod
    def from_raw(cls, raw: float, source: str,
                 out_min: int = OUT_MIN, out_max: int = OUT_MAX) -> "Prediction":
        if not np.isfinite(raw):
            raise InvalidArgumentError(f"non-finite prediction: {raw}")
        clamped = float(min(max(raw, out_min), out_max))
        return cls(v_hat_real=clamped, v_hat=round_half_up(clamped), source=source)


def _label_values(labels) -> np.ndarray:
    values = np.array([float(lab.v_star if hasattr(lab, "v_star") else lab)
                       for lab in labels])
    if values.size == 0:
        raise InvalidArgumentError("statistic predictor needs a nonempty label set")
    return values


def label_statistic(kind: str, labels) -> float:
    """Mode / median / mean of a label collection; mode ties go to the smallest."""
    values = _label_values(labels)
    if kind == SOURCE_MODE:
        uniq, counts = np.unique(values, return_counts=True)
        return float(uniq[np.argmax(counts)])
    if kind == SOURCE_MEDIAN:
        return float(np.median(values))
    if kind == SOURCE_MEAN:
        return float(values.mean())
    raise InvalidArgumentError(f"unknown statistic kind: {kind!r}")


def predict_statistic(kind: str, labels=None,
                      out_min: int = OUT_MIN, out_max: int = OUT_MAX) -> Prediction:
    """Constant prediction from a label distribution (or the bundled stats)."""
    if kind not in STATISTIC_KINDS:
        raise InvalidArgumentError(f"unknown statistic kind: {kind!r}")
    raw = REFERENCE_LABEL_STATS[kind] if labels is None else label_statistic(kind, labels)
    return Prediction.from_raw(raw, source=kind, out_min=out_min, out_max=out_max)


def predict_oracle(label) -> Prediction:
    """Ground-truth pass-through; the zero-error reference for evaluations."""
    v = int(label.v_star if hasattr(label, "v_star") else label)
    return Prediction(v_hat_real=float(v), v_hat=v, source=SOURCE_ORACLE)


@dataclass(frozen=True)
class RegressorModel:
    """Affine map from feature vector to view count: weights then intercept."""

    weights: tuple  # len = feature dim + 1, intercept last
    ridge_lambda: float
    out_min: int = OUT_MIN
    out_max: int = OUT_MAX

    def __post_init__(self):
        if not all(np.isfinite(w) for w in self.weights):
            raise InvalidArgumentError("regressor weights must be finite")
        if self.out_min >= self.out_max:
            raise InvalidArgumentError(
                f"output range [{self.out_min}, {self.out_max}] is empty")
        if self.ridge_lambda < 0:
            raise InvalidArgumentError("ridge lambda must be >= 0")

    @property
    def feature_dim(self) -> int:
        return len(self.weights) - 1


def train_regressor(features, labels, ridge_lambda: float = 1e-2,
                    out_min: int = OUT_MIN, out_max: int = OUT_MAX) -> RegressorModel:
    """Closed-form ridge regression of label view counts on features.

    Features are centered and the intercept is left unpenalized, so as
    ridge_lambda grows the model degrades gracefully to predicting the mean
    label (the constant-mean baseline).
    """
    X = np.asarray(features, dtype=float)
    y = _label_values(labels)
    if X.ndim != 2:
        raise InvalidArgumentError(f"feature matrix must be 2-d, got shape {X.shape}")
    if len(X) != len(y):
        raise InvalidArgumentError(f"{len(X)} feature rows vs {len(y)} labels")
    n, d = X.shape
    if n < d + 1:
        raise InvalidArgumentError(f"need at least {d + 1} examples for {d} features, got {n}")
    if ridge_lambda < 0:
        raise InvalidArgumentError("ridge lambda must be >= 0")
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    Xc = X - x_mean
    gram = Xc.T @ Xc + ridge_lambda * np.eye(d)
    if ridge_lambda == 0.0 and np.linalg.matrix_rank(gram) < d:
        raise FitFailureError(
            "feature matrix is rank-deficient; retrain with ridge_lambda > 0")
    w = np.linalg.solve(gram, Xc.T @ (y - y_mean))
    intercept = float(y_mean - x_mean @ w)
    return RegressorModel(weights=tuple([float(c) for c in w] + [intercept]),
                          ridge_lambda=float(ridge_lambda),
                          out_min=out_min, out_max=out_max)


def predict_regressor(model: RegressorModel, features) -> Prediction:
    x = np.asarray(features, dtype=float).reshape(-1)
    if len(x) != model.feature_dim:
        raise InvalidArgumentError(
            f"feature length {len(x)} does not match model dim {model.feature_dim}")
    raw = float(x @ np.asarray(model.weights[:-1]) + model.weights[-1])
    return Prediction.from_raw(raw, source=SOURCE_REGRESSOR,
                               out_min=model.out_min, out_max=model.out_max)


def save_model(model: RegressorModel, path) -> None:
    jsonio.dump_file({
        "weights": [float(w) for w in model.weights],
        "ridge_lambda": float(model.ridge_lambda),
        "out_min": int(model.out_min),
        "out_max": int(model.out_max),
    }, path)


def load_model(path) -> RegressorModel:
    data = jsonio.load_file(path)
    for key in ("weights", "ridge_lambda", "out_min", "out_max"):
        if key not in data:
            raise FormatError(f"{path}: model object missing {key!r}")
    if not isinstance(data["weights"], list) or len(data["weights"]) < 2:
        raise FormatError(f"{path}: model weights must list >= 2 values")
    return RegressorModel(weights=tuple(float(w) for w in data["weights"]),
                          ridge_lambda=float(data["ridge_lambda"]),
                          out_min=int(data["out_min"]), out_max=int(data["out_max"]))


class ViewCountRegressor(RegressorMixin, BaseEstimator):
    """Estimator wrapper around the closed-form ridge view-count model."""

    def __init__(self, ridge_lambda: float = 1e-2,
                 out_min: int = OUT_MIN, out_max: int = OUT_MAX):
        self.ridge_lambda = ridge_lambda
        self.out_min = out_min
        self.out_max = out_max

    def fit(self, X, y):
        X, y = check_X_y(X, y, ensure_min_samples=2)
        self.model_ = train_regressor(X, y, ridge_lambda=self.ridge_lambda,
                                      out_min=self.out_min, out_max=self.out_max)
        self.n_features_in_ = self.model_.feature_dim
        return self

    def predict(self, X) -> np.ndarray:
        """Integer view counts, clamped to [out_min, out_max]."""
        check_is_fitted(self, "model_")
        X = check_array(X)
        return np.array([predict_regressor(self.model_, row).v_hat for row in X])
