"""Top-k fraud-loss model selection (C++ core)."""

from ._core import (
    BoostModel,
    RidgeModel,
    auc,
    classification_error,
    cv_fraud_loss,
    fit_boost,
    fit_ridge,
    fraud_loss,
    generate,
    ridge_path,
    run_study,
    top_k,
)

__all__ = [
    "BoostModel",
    "RidgeModel",
    "auc",
    "classification_error",
    "cv_fraud_loss",
    "fit_boost",
    "fit_ridge",
    "fraud_loss",
    "generate",
    "ridge_path",
    "run_study",
    "top_k",
]
