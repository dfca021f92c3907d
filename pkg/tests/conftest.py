import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from corrmedoid import Dataset, to_sparse


def rand_dense(seed, n, d, scale=1.0):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d)).astype(np.float32) * np.float32(scale)
    return Dataset.from_dense(pts)


def rand_sparse(seed, n, d, density=0.3):
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, d)).astype(np.float32)
    pts[rng.random((n, d)) > density] = 0.0
    return to_sparse(Dataset.from_dense(pts))


class CallRecorder:
    """Collects every (rows, cols) block handed to the distance kernel."""

    def __init__(self):
        self.calls = []

    def __call__(self, rows, cols):
        self.calls.append((np.array(rows, copy=True), np.array(cols, copy=True)))

    @property
    def total_evals(self):
        return sum(len(r) * len(c) for r, c in self.calls)


@pytest.fixture
def recorder():
    return CallRecorder()
