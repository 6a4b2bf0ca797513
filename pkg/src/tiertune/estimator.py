"""Counter smoothing, the linear performance model, and its validation.

The control loop never sees raw counters: samples pass through a short
moving-average window first.  Performance is estimated by an affine model
over named counter fields, fitted offline by ordinary least squares on a
calibration sweep and validated by Pearson correlation against the
throughput it is supposed to track.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .simulator import CounterSample

DEFAULT_FEATURES = ("l1_miss_latency", "ddr_read_latency", "ipc")

# Tiny diagonal term for the normal equations; conditioning only, not
# regularization in any statistical sense.
RIDGE = 1e-9


class SampleWindow:
    """Ring buffer of the most recent counter samples."""

    def __init__(self, capacity: int = 5) -> None:
        if capacity < 1:
            raise ValueError("window capacity must be >= 1")
        self.capacity = capacity
        self._ring: deque[CounterSample] = deque(maxlen=capacity)

    def push(self, sample: CounterSample) -> None:
        self._ring.append(sample)

    def __len__(self) -> int:
        return len(self._ring)

    def samples(self) -> list[CounterSample]:
        return list(self._ring)

    def clear(self) -> None:
        self._ring.clear()


def moving_average(window: SampleWindow) -> CounterSample:
    """Arithmetic mean per field over the samples currently held.

    During warm-up (fewer samples than capacity) the mean runs over what is
    present; an empty window is an error.
    """
    samples = window.samples()
    if not samples:
        raise ValueError("moving_average of an empty window")
    means = {
        f.name: sum(getattr(s, f.name) for s in samples) / len(samples)
        for f in fields(CounterSample)
    }
    return CounterSample(**means)


@dataclass(frozen=True)
class ModelCoefficients:
    """Affine performance model: intercept plus one weight per counter field."""

    beta0: float
    betas: tuple[float, ...]
    feature_names: tuple[str, ...] = DEFAULT_FEATURES

    def __post_init__(self) -> None:
        if len(self.betas) != len(self.feature_names) or not self.betas:
            raise ValueError("betas and feature_names must align and be non-empty")

    def to_dict(self) -> dict:
        return {
            "beta0": self.beta0,
            "betas": list(self.betas),
            "feature_names": list(self.feature_names),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelCoefficients":
        return cls(
            beta0=float(data["beta0"]),
            betas=tuple(float(b) for b in data["betas"]),
            feature_names=tuple(data["feature_names"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ModelCoefficients":
        return cls.from_dict(json.loads(Path(path).read_text()))


def feature_vector(model: ModelCoefficients, sample: CounterSample) -> np.ndarray:
    values = []
    for name in model.feature_names:
        if not hasattr(sample, name):
            raise KeyError(f"sample has no feature {name!r}")
        values.append(float(getattr(sample, name)))
    return np.asarray(values)


def estimate(model: ModelCoefficients, smoothed: CounterSample) -> float:
    """Evaluate the affine model on a (smoothed) counter sample."""
    x = feature_vector(model, smoothed)
    return float(model.beta0 + np.dot(model.betas, x))


def fit_ols(
    observations: Iterable[tuple[Sequence[float], float]],
    feature_names: Sequence[str] = DEFAULT_FEATURES,
) -> ModelCoefficients:
    """Least-squares fit of the affine model via the normal equations.

    observations: (feature vector, measured throughput) pairs.  Requires at
    least one more observation than there are coefficients.
    """
    obs = list(observations)
    n_features = len(feature_names)
    if len(obs) < n_features + 1:
        raise ValueError(
            f"need >= {n_features + 1} observations to fit {n_features} features, "
            f"got {len(obs)}"
        )
    x = np.asarray([list(f) for f, _ in obs], dtype=float)
    y = np.asarray([t for _, t in obs], dtype=float)
    if x.shape[1] != n_features:
        raise ValueError("feature vectors do not match feature_names")
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    gram = design.T @ design + RIDGE * np.eye(n_features + 1)
    coef = np.linalg.solve(gram, design.T @ y)
    return ModelCoefficients(
        beta0=float(coef[0]),
        betas=tuple(float(b) for b in coef[1:]),
        feature_names=tuple(feature_names),
    )


def pearson(a: Sequence[float], b: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient of two equal-length series."""
    xs = np.asarray(a, dtype=float)
    ys = np.asarray(b, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("series must be one-dimensional and equally long")
    if xs.size < 2:
        raise ValueError("need at least two points")
    dx = xs - xs.mean()
    dy = ys - ys.mean()
    sx = float(np.sqrt(np.dot(dx, dx)))
    sy = float(np.sqrt(np.dot(dy, dy)))
    if sx == 0.0 or sy == 0.0:
        raise ValueError("correlation undefined for a constant series")
    return float(np.dot(dx, dy) / (sx * sy))
