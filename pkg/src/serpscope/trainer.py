"""Maximum-likelihood fitting of :class:`LogisticModel` parameters."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Literal, Sequence

import numpy as np

from serpscope.classifier import N_FEATURES, LogisticModel
from serpscope.errors import Diverged, SingleClassData
from serpscope.features import FeatureVector

logger = logging.getLogger(__name__)

N_PARAMS = N_FEATURES + 1


@dataclass(frozen=True)
class LabeledInstance:
    features: FeatureVector
    label: int  # 1 = scholar, 0 = non-scholar
    source_query: str = ""

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")


@dataclass
class LabeledDataset:
    instances: list[LabeledInstance]

    def __len__(self) -> int:
        return len(self.instances)

    def __iter__(self) -> Iterator[LabeledInstance]:
        return iter(self.instances)

    def __getitem__(self, i: int) -> LabeledInstance:
        return self.instances[i]

    @cached_property
    def X(self) -> np.ndarray:
        """n x 10 feature matrix."""
        if not self.instances:
            return np.zeros((0, N_FEATURES))
        return np.array([inst.features.as_tuple() for inst in self.instances], dtype=float)

    @cached_property
    def y(self) -> np.ndarray:
        return np.array([inst.label for inst in self.instances], dtype=float)

    @property
    def class_counts(self) -> dict[int, int]:
        ones = int(sum(inst.label for inst in self.instances))
        return {1: ones, 0: len(self.instances) - ones}

    def subset(self, indices: Iterable[int]) -> "LabeledDataset":
        return LabeledDataset([self.instances[i] for i in indices])

    @classmethod
    def from_arrays(cls, X: np.ndarray, y: Sequence[int], queries: Sequence[str] | None = None):
        queries = queries if queries is not None else [""] * len(y)
        return cls(
            [
                LabeledInstance(FeatureVector.from_sequence(list(row)), int(label), q)
                for row, label, q in zip(np.asarray(X).tolist(), y, queries)
            ]
        )


@dataclass(frozen=True)
class FitConfig:
    method: Literal["newton-irls", "gradient-ascent"] = "newton-irls"
    ridge: float = 1e-8
    max_iterations: int = 100
    convergence_tol: float = 1e-8
    learning_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("newton-irls", "gradient-ascent"):
            raise ValueError(f"unknown fit method {self.method!r}")
        if self.ridge < 0:
            raise ValueError("ridge must be >= 0")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")


@dataclass
class FitReport:
    iterations: int
    final_log_likelihood: float
    converged: bool
    history: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "final_log_likelihood": self.final_log_likelihood,
            "converged": self.converged,
        }


# ---------------------------------------------------------------------------
# objective on the flat parameter vector (intercept first)


def _design(X: np.ndarray) -> np.ndarray:
    return np.hstack([np.ones((X.shape[0], 1)), X])


def _penalty_mask() -> np.ndarray:
    mask = np.ones(N_PARAMS)
    mask[0] = 0.0  # intercept is not penalized
    return mask


def _objective(beta: np.ndarray, X1: np.ndarray, y: np.ndarray, ridge: float) -> float:
    g = X1 @ beta
    # y*ln(s(g)) + (1-y)*ln(1-s(g)) == y*g - ln(1+e^g)
    ll = float(np.sum(y * g - np.logaddexp(0.0, g)))
    return ll - ridge * float(np.sum(beta[1:] ** 2))


def sigmoid_array(g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    pos = g >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-g[pos]))
    e = np.exp(g[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def _gradient(beta: np.ndarray, X1: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    resid = y - sigmoid_array(X1 @ beta)
    return X1.T @ resid - 2.0 * ridge * beta * _penalty_mask()


def _neg_hessian(beta: np.ndarray, X1: np.ndarray, ridge: float) -> np.ndarray:
    p = sigmoid_array(X1 @ beta)
    w = p * (1.0 - p)
    return (X1.T * w) @ X1 + 2.0 * ridge * np.diag(_penalty_mask())


def log_likelihood(model: LogisticModel, data: LabeledDataset, ridge: float = 0.0) -> float:
    """Log-likelihood of ``data`` under ``model``, minus ``ridge`` times the squared coefficients."""
    return _objective(np.array(model.params), _design(data.X), data.y, ridge)


def gradient(model: LogisticModel, data: LabeledDataset, ridge: float = 0.0) -> np.ndarray:
    """Gradient of :func:`log_likelihood` w.r.t. (intercept, c1..c10)."""
    return _gradient(np.array(model.params), _design(data.X), data.y, ridge)


# ---------------------------------------------------------------------------
# optimizers


def _converged(old: float, new: float, tol: float) -> bool:
    return abs(new - old) <= tol * (abs(old) + tol)


def _newton_direction(beta, X1, y, ridge):
    grad = _gradient(beta, X1, y, ridge)
    H = _neg_hessian(beta, X1, ridge)
    try:
        step = np.linalg.solve(H, grad)
    except np.linalg.LinAlgError:
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
    if not np.all(np.isfinite(step)):
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
    return step


def _preconditioner(X1: np.ndarray) -> np.ndarray:
    """T @ T.T, where beta = T @ theta reparameterizes onto standardized columns.

    Gradient steps in theta space are well scaled even though f6 spans 0..335
    while the other features live in [0, 1].
    """
    mean = X1[:, 1:].mean(axis=0)
    std = X1[:, 1:].std(axis=0)
    std[std == 0] = 1.0
    T = np.eye(X1.shape[1])
    T[0, 1:] = -mean / std
    T[1:, 1:] = np.diag(1.0 / std)
    return T @ T.T


def _gradient_direction(beta, X1, y, ridge, lr, P):
    return lr * P @ _gradient(beta, X1, y, ridge) / X1.shape[0]


def fit(data: LabeledDataset, config: FitConfig = FitConfig()) -> tuple[LogisticModel, FitReport]:
    """Maximize the (optionally ridge-penalized) log-likelihood.

    Each iteration proposes a Newton step (or a preconditioned gradient step) and
    halves it until the objective does not decrease, so the recorded history
    is non-decreasing. Stops when the relative change drops below
    ``config.convergence_tol`` or after ``config.max_iterations``.
    """
    counts = data.class_counts
    if len(data) == 0 or min(counts.values()) == 0:
        raise SingleClassData(f"need both classes to fit, got counts {counts}")
    if len(data) < N_PARAMS:
        warnings.warn(f"fitting {N_PARAMS} parameters on only {len(data)} instances", stacklevel=2)

    X1, y, ridge = _design(data.X), data.y, config.ridge
    beta = np.zeros(N_PARAMS)
    ll = _objective(beta, X1, y, ridge)
    history = [ll]
    converged = False
    lr = config.learning_rate
    P = _preconditioner(X1) if config.method == "gradient-ascent" else None
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        if config.method == "newton-irls":
            step = _newton_direction(beta, X1, y, ridge)
        else:
            step = _gradient_direction(beta, X1, y, ridge, lr, P)

        t = 1.0
        while True:
            cand = beta + t * step
            cand_ll = _objective(cand, X1, y, ridge)
            if math.isfinite(cand_ll) and cand_ll >= ll:
                break
            t *= 0.5
            if t < 1e-12:
                cand = None
                break
        if cand is None:
            # no ascent direction left: at the optimum to working precision
            converged = True
            break
        if not np.all(np.isfinite(cand)):
            raise Diverged(f"non-finite parameters at iteration {iterations}")
        if config.method == "gradient-ascent" and t < 1.0:
            lr *= t

        beta, old, ll = cand, ll, cand_ll
        history.append(ll)
        if _converged(old, ll, config.convergence_tol):
            converged = True
            break

    if not math.isfinite(ll):
        raise Diverged("log-likelihood is not finite")
    if not converged:
        logger.info("fit stopped after %d iterations without converging", iterations)

    model = LogisticModel(
        intercept=float(beta[0]),
        coefficients=tuple(float(b) for b in beta[1:]),
        name=f"fit-{config.method}",
        metadata={
            "trained_on": len(data),
            "ridge": ridge,
            "iterations": iterations,
            "method": config.method,
            "seed": config.seed,
        },
    )
    return model, FitReport(iterations, ll, converged, history)
