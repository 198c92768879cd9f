import json

import numpy as np
import pytest

import ggtpc

TINY_CONFIG = json.dumps(
    {
        "name": "pysmoke",
        "world": {
            "num_classes": 3,
            "dim": 4,
            "samples_per_class_domain": 10,
            "mean_scale": 3.0,
            "cov_scale": 0.5,
            "seed": 11,
        },
        "partition": {
            "scheme": "dirichlet_label_skew",
            "beta": 0.4,
            "num_clients": 2,
            "seed": 3,
        },
        "train": {"learning_rate": 0.05, "batch_size": 4, "local_steps": 1},
        "rounds": 2,
        "seeds": [1],
    }
)


def random_psd(rng, dim):
    a = rng.standard_normal((dim, dim))
    return a @ a.T / dim


def test_exports():
    for name in ggtpc.__all__:
        assert hasattr(ggtpc, name), name


def test_pooled_stats_matches_numpy():
    rng = np.random.default_rng(7)
    dim = 5
    chunks = [rng.standard_normal((n, dim)) for n in (4, 9, 2)]
    parts = [
        (len(c), c.mean(axis=0), np.cov(c, rowvar=False, bias=True).reshape(dim, dim))
        for c in chunks
    ]
    mean, cov, total = ggtpc.pooled_stats(parts)

    everything = np.vstack(chunks)
    assert total == len(everything)
    np.testing.assert_allclose(mean, everything.mean(axis=0), rtol=0, atol=1e-12)
    np.testing.assert_allclose(
        cov, np.cov(everything, rowvar=False, bias=True), rtol=0, atol=1e-12
    )


def test_select_clients_prefix():
    assert ggtpc.select_clients({0: 50, 1: 30, 2: 20}, 0.8) == [0, 1]
    assert ggtpc.select_clients({0: 50, 1: 30, 2: 20}, 1.0) == [0, 1, 2]
    assert ggtpc.select_clients({0: 10, 1: 90}) == [1]
    assert ggtpc.select_clients({}) == []


def test_extract_shape_orthonormal_and_sorted():
    rng = np.random.default_rng(8)
    cov = random_psd(rng, 6)
    values, vectors = ggtpc.extract_shape(np.zeros(6), cov)
    assert np.all(np.diff(values) <= 1e-12)
    assert np.all(values >= 0)
    np.testing.assert_allclose(vectors.T @ vectors, np.eye(6), atol=1e-10)
    np.testing.assert_allclose(vectors @ np.diag(values) @ vectors.T, cov, atol=1e-8)


def test_gpcl_perturb_determinism_and_span():
    rng = np.random.default_rng(9)
    cov = random_psd(rng, 4)
    mean = rng.standard_normal(4)
    values, vectors = ggtpc.extract_shape(mean, cov)
    x = rng.standard_normal(4)

    a = ggtpc.gpcl_perturb(x, mean, values, vectors, seed=5)
    b = ggtpc.gpcl_perturb(x, mean, values, vectors, seed=5)
    c = ggtpc.gpcl_perturb(x, mean, values, vectors, seed=6)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)

    # top_k=1 stays on the leading-axis line through x.
    d = ggtpc.gpcl_perturb(x, mean, values, vectors, top_k=1, seed=7) - x
    residual = d - vectors[:, 0] * (vectors[:, 0] @ d)
    assert np.linalg.norm(residual) < 1e-12


def test_sampling_probabilities_closed_form():
    probs = ggtpc.sampling_probabilities({0: 1, 1: 10, 2: 100})
    np.testing.assert_allclose(
        [probs[0], probs[1], probs[2]],
        np.array([100.0, 10.0, 1.0]) / 111.0,
        atol=1e-14,
    )
    plain = ggtpc.sampling_probabilities({0: 1, 1: 10, 2: 100}, inverse_frequency=False)
    np.testing.assert_allclose(
        [plain[0], plain[1], plain[2]],
        np.array([1.0, 10.0, 100.0]) / 111.0,
        atol=1e-14,
    )


def test_run_cell_records_deterministic_jsonl():
    first = ggtpc.run_cell_records(TINY_CONFIG, "calibrated", 0.4, 1)
    second = ggtpc.run_cell_records(TINY_CONFIG, "calibrated", 0.4, 1)
    assert first == second

    lines = [json.loads(line) for line in first.splitlines()]
    assert [r["round"] for r in lines] == [0, 1]
    for record in lines:
        assert 0.0 <= record["accuracy"] <= 1.0
        assert record["bytes_transmitted"] > 0
        assert "duration" not in json.dumps(record)

    with pytest.raises(ValueError):
        ggtpc.run_cell_records(TINY_CONFIG, "missing_cell", 0.4, 1)


def test_canonical_config_idempotent():
    canonical = ggtpc.canonical_config(TINY_CONFIG)
    assert ggtpc.canonical_config(canonical) == canonical
    parsed = json.loads(canonical)
    assert parsed["name"] == "pysmoke"
    assert parsed["rounds"] == 2
    with pytest.raises(RuntimeError):
        ggtpc.canonical_config('{"bogus": 1}')
