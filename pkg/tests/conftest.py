import numpy as np
import pytest

from metacog import ProbeResponseDataset, SqrtSumUtility, naive_response


def sqrt_optimal_dataset(k: int, m: int, seed: int, low: float = 0.2, high: float = 2.5):
    """Dataset generated by a true sqrt-sum maximizer on random probes.

    The responses come from the closed-form interior optimum, so the dataset
    is rationalizable by construction and serves as a positive oracle for the
    consistency checks.
    """
    rng = np.random.default_rng(seed)
    probes = rng.uniform(low, high, (k, m))
    u = SqrtSumUtility()
    responses = np.stack([naive_response(u, a) for a in probes])
    return ProbeResponseDataset(probes, responses)


@pytest.fixture
def violating_dataset():
    """Two-epoch cycle with a strict reversal, checked by hand:

    a_1.b_1 = 1 = a_1.b_2 (epoch 1 weakly prefers its own bundle) while
    a_2.b_1 = 0.25 < 1 = a_2.b_2, a strict reversal along the closure edge.
    """
    return ProbeResponseDataset([[1.0, 0.5], [0.25, 0.5]], [[1.0, 0.0], [0.0, 2.0]])


@pytest.fixture
def sqrt_dataset_k5():
    return sqrt_optimal_dataset(5, 2, seed=42)
