from .cox import cox_grad, cox_grad_eta, cox_nll, cox_nll_eta
from .fit import (
    BackgroundStats,
    FitError,
    FittedModel,
    ImportanceItem,
    ModelSpec,
    SchemaMismatchError,
    feature_importance,
    fit_classifier,
    fit_cox,
    load_model,
    model_fingerprint,
    predict_risk,
    save_model,
)
from .logistic import logistic_grad, logistic_nll, sigmoid
from .sparse import SparseMatrix, SparseMatrixError

__all__ = [
    "BackgroundStats",
    "FitError",
    "FittedModel",
    "ImportanceItem",
    "ModelSpec",
    "SchemaMismatchError",
    "SparseMatrix",
    "SparseMatrixError",
    "cox_grad",
    "cox_grad_eta",
    "cox_nll",
    "cox_nll_eta",
    "feature_importance",
    "fit_classifier",
    "fit_cox",
    "load_model",
    "logistic_grad",
    "logistic_nll",
    "model_fingerprint",
    "predict_risk",
    "save_model",
    "sigmoid",
]
