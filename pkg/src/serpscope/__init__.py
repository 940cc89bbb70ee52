"""Classify web queries as scholar or non-scholar from features of their SERPs."""

__version__ = "0.1.0"

from serpscope.classifier import LogisticModel, Prediction, classify, paper_model
from serpscope.features import FeatureVector, extract_all
from serpscope.serp import SerpRecord, ingest_json, load_profile, parse_html

__all__ = [
    "FeatureVector",
    "LogisticModel",
    "Prediction",
    "SerpRecord",
    "classify",
    "extract_all",
    "ingest_json",
    "load_profile",
    "paper_model",
    "parse_html",
]
