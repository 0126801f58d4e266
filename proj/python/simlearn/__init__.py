"""Similarity-based classification with landmark embeddings and learned transfer functions."""

import json

from ._simlearn import (
    Dataset,
    SimlearnError,
    apply_transfer,
    c_f,
    dselect,
    embed_pairs,
    estimate_goodness_pairs,
    family,
    gaussian_width,
    kernel_matrix,
    load_dataset,
    make_dataset,
    random_pairs,
    split,
    theorem_landmarks,
    welch_t_test,
)
from . import _simlearn

__all__ = [
    "Dataset",
    "SimlearnError",
    "apply_transfer",
    "c_f",
    "dselect",
    "embed_pairs",
    "estimate_goodness_pairs",
    "evaluate_method",
    "family",
    "gaussian_width",
    "kernel_matrix",
    "load_dataset",
    "make_dataset",
    "random_pairs",
    "run_experiment",
    "split",
    "theorem_landmarks",
    "train",
    "verify_theorem",
    "welch_t_test",
]


def train(x, labels, loss="hinge", c=1.0, seed=0):
    """Train a linear model on embedded rows; returns the model record as a dict."""
    return json.loads(_simlearn.train(x, labels, loss, c, seed))


def evaluate_method(dataset, method, landmarks, config=None, seed=0):
    """Train one method on one seeded split; returns (test_accuracy, details)."""
    acc, details = _simlearn.evaluate_method(
        dataset, method, landmarks, json.dumps(config or {}), seed
    )
    return acc, json.loads(details)


def run_experiment(config, dataset=None):
    """Run a repeated-split experiment; returns the report as a dict."""
    return json.loads(_simlearn.run_experiment(json.dumps(config), dataset))


def verify_theorem(which, **kwargs):
    """Monte-Carlo check on planted instances ("margin" or "surrogate")."""
    return json.loads(_simlearn.verify_theorem(which, **kwargs))
