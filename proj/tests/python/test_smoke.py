import json

import numpy as np
import pytest

import fraudsel


DGP = {
    "p": 5,
    "correlation_seed": 1,
    "margins": {"random": True, "seed": 2},
    "predictor": {"type": "linear", "n_nonzero": 3, "seed": 3},
    "p0": 0.2,
}


def test_criteria():
    y = [1, 0, 1, 0, 0]
    s = [0.2, 0.9, 0.8, 0.3, 0.1]
    assert fraudsel.top_k(s, 2) == [1, 2]
    assert fraudsel.fraud_loss(y, s, 2) == 1
    assert fraudsel.classification_error(y, [0, 1, 1, 0, 0], 2) == 2
    assert fraudsel.auc([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4]) == 1.0
    assert fraudsel.auc([0, 1], [0.5, 0.5]) == 0.0
    with pytest.raises(ValueError):
        fraudsel.top_k(s, 0)


def test_generate_is_calibrated_and_seeded():
    x, y, intercept, mean_prob = fraudsel.generate(json.dumps(DGP), 400, seed=5)
    assert x.shape == (400, 5)
    assert set(np.unique(y)) <= {0, 1}
    assert abs(mean_prob - 0.2) < 1e-8
    x2, y2, _, _ = fraudsel.generate(json.dumps(DGP), 400, seed=5)
    assert np.array_equal(x, x2) and list(y) == list(y2)
    with pytest.raises(ValueError):
        fraudsel.generate(json.dumps({**DGP, "p0": 1.5}), 10)


def test_ridge():
    x, y, _, _ = fraudsel.generate(json.dumps(DGP), 300, seed=6)
    m = fraudsel.fit_ridge(x, list(y), 1.0)
    assert m.gradient_norm < 1e-8
    p = m.predict_proba(x)
    assert p.shape == (300,) and np.all((p > 0) & (p < 1))
    lambdas, margins = fraudsel.ridge_path(x, list(y), length=10, x_eval=x)
    assert len(lambdas) == 10 and margins.shape == (300, 10)
    assert all(a > b for a, b in zip(lambdas, lambdas[1:]))
    with pytest.raises(ValueError):
        fraudsel.fit_ridge(x, [0] * 300, 0.0)


def test_boost():
    x, y, _, _ = fraudsel.generate(json.dumps(DGP), 200, seed=7)
    b = fraudsel.fit_boost(x, list(y), 20)
    assert len(b) == 20
    loss = b.training_loss
    assert all(a >= c for a, c in zip(loss, loss[1:]))
    assert np.allclose(b.staged_margin(x, 20), b.margin(x))
    assert np.allclose(b.staged_margin(x, 0), b.base_score)


def test_cross_validated_selection():
    x, y, _, _ = fraudsel.generate(json.dumps(DGP), 200, seed=8)
    est = json.dumps({"type": "ridge", "lambda_grid_length": 8})
    plan = json.dumps({"scheme": "cv", "folds": 5, "repeats": 2, "stratified": True, "seed": 3})
    tuning, stat, idx = fraudsel.cv_fraud_loss(x, list(y), est, plan, 0.2)
    assert len(tuning) == len(stat) == 8
    assert stat[idx] == min(stat)
    again = fraudsel.cv_fraud_loss(x, list(y), est, plan, 0.2, threads=2)
    assert list(again[1]) == list(stat)


def test_tiny_study():
    config = {
        "dgp": DGP,
        "n_train": 120,
        "n_test": 60,
        "estimator": {"type": "ridge", "lambda_grid_length": 5},
        "plans": [{"scheme": "cv", "folds": 2, "repeats": 2, "stratified": True}],
        "criteria": ["fraud", "auc"],
        "replicates": 2,
        "master_seed": 11,
    }
    out = fraudsel.run_study(json.dumps(config))
    assert out["successful"] == 2 and out["failed"] == 0
    assert len(out["rows"]) == 2
    for row in out["rows"]:
        assert min(row["rfl"]) >= 1.0 - 1e-12
    assert out["summary_csv"].startswith("plan,scheme,folds")
