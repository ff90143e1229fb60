import numpy as np
import pytest

from metacog import project_budget, project_budget_all


def brute_force_projection(v, probe, step=1e-3):
    """Grid minimizer over the 2-d budget segment, spaced by arc length."""
    ends = np.array([[1.0 / probe[0], 0.0], [0.0, 1.0 / probe[1]]])
    length = np.linalg.norm(ends[1] - ends[0])
    ts = np.linspace(0.0, 1.0, int(np.ceil(length / step)) + 1)
    pts = ends[0] + ts[:, None] * (ends[1] - ends[0])
    dists = ((pts - v) ** 2).sum(axis=1)
    return pts[np.argmin(dists)]


def test_point_already_on_face_is_fixed():
    v = np.array([0.25, 0.375])
    probe = np.array([1.0, 2.0])
    assert probe @ v == 1.0
    assert np.allclose(project_budget(v, probe), v, atol=1e-14)


def test_symmetric_case():
    out = project_budget(np.array([2.0, 2.0]), np.array([1.0, 1.0]))
    assert np.allclose(out, [0.5, 0.5], atol=1e-12)


def test_clamped_case():
    out = project_budget(np.array([-1.0, 3.0]), np.array([1.0, 1.0]))
    assert np.allclose(out, [0.0, 1.0], atol=1e-12)


def test_idempotent():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.integers(2, 5)
        v = rng.normal(0, 2, m)
        probe = rng.uniform(0.2, 3.0, m)
        once = project_budget(v, probe)
        twice = project_budget(once, probe)
        assert np.abs(twice - once).max() <= 1e-10


def test_budget_exactness_and_nonnegativity():
    rng = np.random.default_rng(1)
    v = rng.normal(0, 2, (200, 3))
    probes = rng.uniform(0.2, 3.0, (200, 3))
    out = project_budget_all(v, probes)
    assert np.all(out >= 0)
    assert np.abs((probes * out).sum(axis=1) - 1.0).max() <= 1e-10


def test_against_grid_oracle():
    rng = np.random.default_rng(2)
    for _ in range(25):
        v = rng.normal(0.3, 1.5, 2)
        probe = rng.uniform(0.3, 2.5, 2)
        exact = project_budget(v, probe)
        grid = brute_force_projection(v, probe)
        assert np.abs(exact - grid).max() <= 2e-3


def test_batch_matches_single():
    rng = np.random.default_rng(3)
    v = rng.normal(0, 1, (30, 4))
    probes = rng.uniform(0.5, 2.0, (30, 4))
    batch = project_budget_all(v, probes)
    singles = np.stack([project_budget(v[i], probes[i]) for i in range(30)])
    assert np.array_equal(batch, singles)


def test_input_validation():
    with pytest.raises(ValueError):
        project_budget(np.array([1.0, 2.0]), np.array([1.0, -1.0]))
    with pytest.raises(ValueError):
        project_budget(np.array([1.0, 2.0]), np.array([1.0]))
