"""Synthetic labeled feature data drawn from a known logistic model.

Used as a generative oracle: fit on the output and compare against the
generating parameters.
"""

from __future__ import annotations

import numpy as np

from serpscope.classifier import LogisticModel
from serpscope.features import MAX_RANK
from serpscope.trainer import LabeledDataset

MAX_OVERLAP = 5

# modest coefficients keep probabilities away from 0/1, where the data carry
# the most information about every parameter
GENERATOR = LogisticModel(
    intercept=1.4,
    coefficients=(0.5, -0.6, -1.0, -0.8, 1.2, -0.002, -0.5, -0.9, 0.7, -0.15),
    name="synthetic-generator",
)


def sample_features(rng: np.random.Generator, n: int) -> np.ndarray:
    """n x 10 matrix drawn uniformly over every feature's domain."""
    X = np.empty((n, 10))
    for j in (0, 1, 2, 6):
        X[:, j] = rng.integers(0, 2, n)
    for j in (3, 4, 7, 8):
        X[:, j] = rng.random(n)
    X[:, 5] = rng.integers(0, MAX_RANK + 1, n)
    X[:, 9] = rng.integers(0, MAX_OVERLAP + 1, n)
    return X


def bernoulli_labels(rng: np.random.Generator, X: np.ndarray, model: LogisticModel) -> np.ndarray:
    g = model.intercept + X @ np.array(model.coefficients)
    p = 1.0 / (1.0 + np.exp(-g))
    return (rng.random(len(p)) < p).astype(int)


def generate(n: int, model: LogisticModel = GENERATOR, seed: int = 0) -> LabeledDataset:
    rng = np.random.default_rng(seed)
    X = sample_features(rng, n)
    y = bernoulli_labels(rng, X, model)
    return LabeledDataset.from_arrays(X, y, [f"syn-{i:06d}" for i in range(n)])
