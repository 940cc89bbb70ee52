"""Logistic scoring of feature vectors and query classification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import jsonschema

from serpscope.errors import SchemaViolation
from serpscope.features import FeatureVector, extract_all
from serpscope.serp import SerpRecord

SCHOLAR = "scholar"
NON_SCHOLAR = "non-scholar"
THRESHOLD = 0.5

N_FEATURES = 10


@dataclass(frozen=True)
class LogisticModel:
    intercept: float
    coefficients: tuple[float, ...]
    name: str = "unnamed"
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        coefs = tuple(float(c) for c in self.coefficients)
        if len(coefs) != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} coefficients, got {len(coefs)}")
        if not all(math.isfinite(c) for c in (self.intercept, *coefs)):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "coefficients", coefs)
        object.__setattr__(self, "intercept", float(self.intercept))

    @property
    def params(self) -> tuple[float, ...]:
        """Intercept followed by the ten coefficients."""
        return (self.intercept, *self.coefficients)


@dataclass(frozen=True)
class Prediction:
    probability: float
    label: str
    logit: float


def paper_model() -> LogisticModel:
    """Built-in reference 10-feature model (fit on 600,000 labelled SERPs)."""
    return LogisticModel(
        intercept=2.7585,
        coefficients=(0.8266, -1.1664, -2.7413, -1.7444, 6.2504, -0.0017, -1.0145, -1.5367, 1.8977, -0.1737),
        name="reference-2016",
        metadata={"trained_on": 600000},
    )


def _values(fv: FeatureVector | Sequence[float]) -> tuple[float, ...]:
    return fv.as_tuple() if isinstance(fv, FeatureVector) else tuple(fv)


def logit(model: LogisticModel, fv: FeatureVector | Sequence[float]) -> float:
    return model.intercept + math.fsum(c * f for c, f in zip(model.coefficients, _values(fv), strict=True))


def sigmoid(g: float) -> float:
    # split on sign so exp() never overflows
    if g >= 0:
        return 1.0 / (1.0 + math.exp(-g))
    e = math.exp(g)
    return e / (1.0 + e)


def hypothesis(model: LogisticModel, fv: FeatureVector | Sequence[float]) -> float:
    return sigmoid(logit(model, fv))


def label_for(probability: float) -> str:
    return SCHOLAR if probability >= THRESHOLD else NON_SCHOLAR


def predict(model: LogisticModel, fv: FeatureVector | Sequence[float]) -> Prediction:
    g = logit(model, fv)
    p = sigmoid(g)
    return Prediction(probability=p, label=label_for(p), logit=g)


def classify(model: LogisticModel, query: str, record: SerpRecord) -> Prediction:
    """Extract features from the SERP, score them, threshold at 0.5 (inclusive)."""
    return predict(model, extract_all(query, record))


# ---------------------------------------------------------------------------
# model files

MODEL_SCHEMA = {
    "type": "object",
    "required": ["name", "intercept", "coefficients"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string"},
        "intercept": {"type": "number"},
        "coefficients": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": N_FEATURES,
            "maxItems": N_FEATURES,
        },
        "metadata": {"type": "object"},
    },
}


def model_to_dict(model: LogisticModel) -> dict:
    return {
        "name": model.name,
        "intercept": model.intercept,
        "coefficients": list(model.coefficients),
        "metadata": model.metadata,
    }


def serialize_model(model: LogisticModel) -> bytes:
    # json writes floats with repr(), which round-trips every binary64 exactly
    return json.dumps(model_to_dict(model), indent=2).encode("utf-8")


def model_from_dict(obj: Any) -> LogisticModel:
    errors = sorted(jsonschema.Draft202012Validator(MODEL_SCHEMA).iter_errors(obj), key=str)
    if errors:
        where = "/".join(str(p) for p in errors[0].absolute_path) or "<root>"
        raise SchemaViolation(f"model file: {where}: {errors[0].message}")
    try:
        return LogisticModel(
            intercept=obj["intercept"],
            coefficients=tuple(obj["coefficients"]),
            name=obj["name"],
            metadata=obj.get("metadata", {}),
        )
    except ValueError as exc:
        raise SchemaViolation(f"model file: {exc}") from exc


def deserialize_model(data: bytes | str) -> LogisticModel:
    if isinstance(data, bytes):
        data = data.decode("utf-8-sig")
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"model file: invalid JSON ({exc})") from exc
    return model_from_dict(obj)
