import sys
import time
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from tivis import nn
from tivis.shapes import generate_dataset
from tivis.training import REFERENCE_SEED, TrainConfig, reference_architecture, train


@pytest.fixture(scope="session")
def reference_dataset():
    return generate_dataset(REFERENCE_SEED, 100)


@pytest.fixture(scope="session")
def reference_run(reference_dataset):
    """Train the frozen reference model once per session.

    Returns (TrainResult, TrainConfig, train_seconds).
    """
    config = TrainConfig()
    t0 = time.time()
    result = train(reference_dataset, reference_architecture(REFERENCE_SEED), config)
    return result, config, time.time() - t0


@pytest.fixture(scope="session")
def reference_model(reference_run):
    return reference_run[0].model


@pytest.fixture
def tiny_confident_model():
    """Flatten+dense model whose bias keeps class 1 above any q_target."""
    n = 8
    w = np.zeros((3, 3 * n * n))
    b = np.array([0.0, 12.0, 0.0])
    return nn.Model(
        layers=[nn.Flatten(), nn.Dense(weight=w, bias=b)],
        input_shape=(3, n, n),
        class_names=("a", "b", "c"),
    ).validate()
