"""Shared fixtures for the sepscore test suite."""

import numpy as np
import pytest

from src.models import LabeledPointCloud


def make_cloud(points, labels, **kwargs) -> LabeledPointCloud:
    return LabeledPointCloud(points=np.asarray(points, dtype=float), labels=tuple(labels), **kwargs)


@pytest.fixture
def two_cluster_1d() -> LabeledPointCloud:
    """The hand-checked 1-D fixture {0, 1} vs {5, 6}."""
    return make_cloud([[0.0], [1.0], [5.0], [6.0]], ["a", "a", "b", "b"])


@pytest.fixture
def three_separated_1d() -> LabeledPointCloud:
    """Three well separated 1-D groups of five points each."""
    points = np.concatenate([np.arange(5.0), 100.0 + np.arange(5.0), 200.0 + np.arange(5.0)])
    labels = ["x"] * 5 + ["y"] * 5 + ["z"] * 5
    return make_cloud(points.reshape(-1, 1), labels)


@pytest.fixture
def gaussian_groups() -> LabeledPointCloud:
    """Three 2-D Gaussian groups 10 sd apart, 30 points each."""
    rng = np.random.default_rng(11)
    centres = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    points = np.vstack([rng.normal(centre, 1.0, size=(30, 2)) for centre in centres])
    labels = ["g1"] * 30 + ["g2"] * 30 + ["g3"] * 30
    return make_cloud(points, labels)


@pytest.fixture
def clean_env(monkeypatch):
    """Remove every SEPSCORE_* variable so configuration defaults apply."""
    import os

    for name in list(os.environ):
        if name.startswith("SEPSCORE_"):
            monkeypatch.delenv(name, raising=False)
    return monkeypatch
