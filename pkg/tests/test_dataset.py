import numpy as np
import pytest

from metacog import ProbeResponseDataset, load_dataset, save_dataset


def test_shape_and_properties():
    d = ProbeResponseDataset([[1.0, 2.0]], [[0.5, 0.25]])
    assert d.k == 1 and d.m == 2


def test_mismatched_shapes_rejected():
    with pytest.raises(ValueError):
        ProbeResponseDataset([[1.0, 2.0]], [[0.5, 0.25], [1.0, 1.0]])


def test_nonpositive_probe_rejected():
    with pytest.raises(ValueError):
        ProbeResponseDataset([[1.0, 0.0]], [[0.5, 0.25]])


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        ProbeResponseDataset([[1.0, np.nan]], [[0.5, 0.25]])
    with pytest.raises(ValueError):
        ProbeResponseDataset([[1.0, 1.0]], [[np.inf, 0.25]])


def test_negative_responses_allowed_for_measurements():
    # raw noisy measurements may dip below zero and must round-trip intact
    d = ProbeResponseDataset([[1.0, 2.0]], [[-0.1, 0.25]])
    assert d.responses[0, 0] == -0.1


def test_with_responses_keeps_probes():
    d = ProbeResponseDataset([[1.0, 2.0]], [[0.5, 0.25]])
    d2 = d.with_responses([[0.1, 0.2]])
    assert np.array_equal(d2.probes, d.probes)
    assert np.allclose(d2.responses, [[0.1, 0.2]])


def test_csv_round_trip(tmp_path):
    rng = np.random.default_rng(3)
    d = ProbeResponseDataset(rng.uniform(0.5, 2, (4, 3)), rng.uniform(0, 1, (4, 3)))
    path = tmp_path / "data.csv"
    save_dataset(d, path)
    back = load_dataset(path)
    assert np.array_equal(back.probes, d.probes)
    assert np.array_equal(back.responses, d.responses)
    header = path.read_text().splitlines()[0]
    assert header == "epoch,alpha_1,alpha_2,alpha_3,beta_1,beta_2,beta_3"


def test_malformed_header_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("epoch,alpha_1,beta_1,beta_2\n1,1.0,0.5,0.5\n")
    with pytest.raises(ValueError):
        load_dataset(path)


def test_empty_file_rejected(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("epoch,alpha_1,beta_1\n")
    with pytest.raises(ValueError):
        load_dataset(path)
