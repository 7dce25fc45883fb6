"""Referenceless quality estimator: a streaming-standardized linear
regressor trained with per-coordinate adaptive gradient descent on
squared loss, operated prequentially (blind-predict, then train).

The regressor family is fixed and dependency-free: zero-initialized
weights, AdaGrad-style steps lr / sqrt(accum + eps), a Welford running
standardizer in front, and an output clamp.  Features whose running
variance is below VARIANCE_GUARD pass through unstandardized.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureLayout
from .metrics import EvalStats, eval_stats

SNAPSHOT_FORMAT = "pedal-model v1"

#: Features with running variance below this are passed through
#: unscaled (constant features would otherwise blow up the division).
VARIANCE_GUARD = 1e-12


@dataclass(frozen=True)
class LearnerConfig:
    learning_rate: float = 0.1
    epsilon: float = 1e-8
    clamp_min: float = 0.0
    clamp_max: float = 2.0

    def to_dict(self) -> dict:
        return {
            "learning_rate": self.learning_rate,
            "epsilon": self.epsilon,
            "clamp_min": self.clamp_min,
            "clamp_max": self.clamp_max,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerConfig":
        return cls(**data)


class OnlineEstimator:
    """Online TER regressor with prequential logging.

    predict is read-only; train_step mutates and must be serialized by
    the caller (the engine holds the single-writer contract).
    """

    def __init__(self, layout: FeatureLayout, config: LearnerConfig | None = None):
        self.layout = layout
        self.config = config or LearnerConfig()
        d = len(layout)
        self.weights = np.zeros(d + 1, dtype=np.float64)  # [0] is the bias
        self.grad_accum = np.zeros(d + 1, dtype=np.float64)
        self._count = 0
        self._mean = np.zeros(d, dtype=np.float64)
        self._m2 = np.zeros(d, dtype=np.float64)
        self.step = 0
        self.prequential: list[tuple[float, float]] = []

    # -- standardizer ----------------------------------------------------

    def _variance(self) -> np.ndarray:
        if self._count == 0:
            return np.zeros_like(self._m2)
        return self._m2 / self._count

    def _standardize(self, x: np.ndarray) -> np.ndarray:
        var = self._variance()
        scaled = var >= VARIANCE_GUARD
        std = np.sqrt(np.where(scaled, var, 1.0))
        return np.where(scaled, (x - self._mean) / std, x)

    def _update_standardizer(self, x: np.ndarray) -> None:
        self._count += 1
        delta = x - self._mean
        self._mean = self._mean + delta / self._count
        self._m2 = self._m2 + delta * (x - self._mean)

    def standardizer_state(self) -> tuple[int, np.ndarray, np.ndarray]:
        """(count, running mean, population variance) per feature."""
        return self._count, self._mean.copy(), self._variance()

    # -- prediction and training -----------------------------------------

    def _check_features(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=np.float64)
        if x.shape != (len(self.layout),):
            raise ValueError(
                f"feature length {x.shape} does not match layout ({len(self.layout)},)"
            )
        return x

    def predict_batch(self, matrix: np.ndarray) -> np.ndarray:
        """Clamped predictions for a (rows, features) matrix.

        The reduction is an explicit per-row sum rather than a BLAS
        matmul: each row's result is then independent of the batch
        shape, so batch and scalar predictions agree bit for bit.
        """
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != len(self.layout):
            raise ValueError(f"bad feature matrix shape {matrix.shape}")
        var = self._variance()
        scaled = var >= VARIANCE_GUARD
        std = np.sqrt(np.where(scaled, var, 1.0))
        xs = np.where(scaled, (matrix - self._mean) / std, matrix)
        raw = self.weights[0] + (xs * self.weights[1:]).sum(axis=1)
        return np.clip(raw, self.config.clamp_min, self.config.clamp_max)

    def predict(self, features: np.ndarray) -> float:
        """Estimated TER for one feature vector, clamped to the range."""
        x = self._check_features(features)
        return float(self.predict_batch(x.reshape(1, -1))[0])

    def train_step(self, features: np.ndarray, target: float) -> float:
        """One prequential step: blind-predict, then standardize, then
        one adaptive-gradient update on squared loss.

        Returns the blind prediction (recorded before any state
        change).  Non-finite inputs raise and leave the model untouched.
        """
        x = self._check_features(features)
        if not np.isfinite(x).all():
            raise ValueError("non-finite feature value")
        if not np.isfinite(target) or target < 0.0:
            raise ValueError(f"target must be finite and >= 0, got {target}")

        blind = self.predict(x)

        self._update_standardizer(x)
        xs = self._standardize(x)
        raw = float(self.weights[0] + (xs * self.weights[1:]).sum())
        residual = raw - target
        grad = np.empty_like(self.weights)
        grad[0] = 2.0 * residual
        grad[1:] = 2.0 * residual * xs
        self.grad_accum += grad * grad
        self.weights -= (
            self.config.learning_rate / np.sqrt(self.grad_accum + self.config.epsilon)
        ) * grad
        self.step += 1
        self.prequential.append((blind, target))
        return blind

    def prequential_stats(self) -> EvalStats:
        """Regression/ranking statistics over the blind-prediction log."""
        if not self.prequential:
            raise ValueError("prequential log is empty")
        blind = [b for b, _ in self.prequential]
        realized = [t for _, t in self.prequential]
        return eval_stats(blind, realized)

    # -- snapshots ---------------------------------------------------------

    def snapshot(self) -> dict:
        """Self-describing snapshot; restore() round-trips it exactly."""
        return {
            "format": SNAPSHOT_FORMAT,
            "layout": self.layout.to_dict(),
            "hyperparams": self.config.to_dict(),
            "step": self.step,
            "weights": self.weights.tolist(),
            "grad_accum": self.grad_accum.tolist(),
            "standardizer": {
                "count": self._count,
                "mean": self._mean.tolist(),
                "m2": self._m2.tolist(),
            },
        }

    def snapshot_json(self) -> str:
        return json.dumps(self.snapshot(), indent=2, sort_keys=True)

    @classmethod
    def restore(cls, blob: dict, expected_layout: FeatureLayout | None = None) -> "OnlineEstimator":
        if blob.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"unsupported snapshot format {blob.get('format')!r}")
        layout = FeatureLayout.from_dict(blob["layout"])
        if expected_layout is not None and layout.slot_names != expected_layout.slot_names:
            raise ValueError("snapshot layout does not match the engine layout")
        model = cls(layout, LearnerConfig.from_dict(blob["hyperparams"]))
        d = len(layout)
        weights = np.asarray(blob["weights"], dtype=np.float64)
        accum = np.asarray(blob["grad_accum"], dtype=np.float64)
        std = blob["standardizer"]
        mean = np.asarray(std["mean"], dtype=np.float64)
        m2 = np.asarray(std["m2"], dtype=np.float64)
        if weights.shape != (d + 1,) or accum.shape != (d + 1,):
            raise ValueError("snapshot weight shape does not match its layout")
        if mean.shape != (d,) or m2.shape != (d,):
            raise ValueError("snapshot standardizer shape does not match its layout")
        model.weights = weights
        model.grad_accum = accum
        model._count = int(std["count"])
        model._mean = mean
        model._m2 = m2
        model.step = int(blob["step"])
        return model
