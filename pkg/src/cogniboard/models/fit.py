"""Model fitting facade: classifier/Cox entry points, grid search,
importance extraction, and binary-safe persistence."""

from __future__ import annotations

import base64
import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..metrics import auroc
from .cox import CoxError, fit_cox as _fit_cox_raw
from .gbt import GbtEnsemble, fit_gbt
from .logistic import fit_logistic, sigmoid
from .sparse import SparseMatrix

MODEL_FORMAT_VERSION = 1

DEFAULT_L2_GRID = [1e-3, 1e-2, 1e-1, 1.0]
DEFAULT_DEPTH_GRID = [2, 3, 4]


class FitError(ValueError):
    pass


class SchemaMismatchError(ValueError):
    pass


@dataclass
class ModelSpec:
    kind: str = "logistic"  # logistic | gbt | cox
    l2: float = 1e-2
    grid: dict[str, list] | None = None
    seed: int = 0
    max_iter: int = 100
    tol: float = 1e-8
    n_trees: int = 50
    learning_rate: float = 0.1
    max_depth: int = 3


@dataclass
class FittedModel:
    kind: str
    feature_names: list[str]
    beta: np.ndarray | None = None  # includes intercept at [0] for logistic
    ensemble: GbtEnsemble | None = None
    training_meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def check_schema(self, x: SparseMatrix) -> None:
        if x.feature_names != self.feature_names:
            raise SchemaMismatchError(
                f"feature schema mismatch: model has {len(self.feature_names)} "
                f"features, input has {len(x.feature_names)}"
            )


def _validate_classifier_inputs(x: SparseMatrix, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64).ravel()
    if x.n_rows != len(y):
        raise FitError("rows(X) must equal len(y)")
    if len(np.unique(y)) < 2:
        raise FitError("need at least one sample of each class")
    return y


def _fit_logistic_model(x: SparseMatrix, y: np.ndarray, spec: ModelSpec) -> FittedModel:
    beta, curve, converged = fit_logistic(
        x.to_csr(), y.astype(np.float64), l2=spec.l2, tol=spec.tol, max_iter=spec.max_iter
    )
    return FittedModel(
        kind="logistic",
        feature_names=list(x.feature_names),
        beta=beta,
        training_meta={
            "loss_curve": [float(v) for v in curve],
            "hyperparams": {"l2": spec.l2},
            "seed": spec.seed,
            "converged": converged,
        },
    )


def _fit_gbt_model(x: SparseMatrix, y: np.ndarray, spec: ModelSpec) -> FittedModel:
    ens, curve = fit_gbt(
        x.to_dense(),
        y.astype(np.float64),
        n_trees=spec.n_trees,
        max_depth=spec.max_depth,
        learning_rate=spec.learning_rate,
    )
    return FittedModel(
        kind="gbt",
        feature_names=list(x.feature_names),
        ensemble=ens,
        training_meta={
            "loss_curve": curve,
            "hyperparams": {
                "n_trees": spec.n_trees,
                "max_depth": spec.max_depth,
                "learning_rate": spec.learning_rate,
            },
            "seed": spec.seed,
        },
    )


def fit_classifier(
    x: SparseMatrix,
    y,
    spec: ModelSpec | None = None,
    validation: tuple[SparseMatrix, np.ndarray] | None = None,
) -> FittedModel:
    """Fit a binary classifier. When `spec.grid` is set, every grid cell is
    fit and the one with the best validation AUROC wins (ties break toward
    the earlier cell, so selection is deterministic)."""
    spec = spec or ModelSpec()
    y = _validate_classifier_inputs(x, y)
    fitter = {"logistic": _fit_logistic_model, "gbt": _fit_gbt_model}.get(spec.kind)
    if fitter is None:
        raise FitError(f"unknown classifier kind {spec.kind!r}")
    if not spec.grid:
        return fitter(x, y, spec)
    if validation is None:
        raise FitError("grid search requires a validation set")
    xv, yv = validation
    yv = np.asarray(yv, dtype=np.int64).ravel()
    cells = _grid_cells(spec)
    results = []
    best = None
    for cell_spec, label in cells:
        model = fitter(x, y, cell_spec)
        score = auroc(yv.tolist(), predict_risk(model, xv).tolist())
        results.append({"cell": label, "val_auroc": float(score)})
        if best is None or score > best[0] + 1e-12:
            best = (score, model, label)
    assert best is not None
    best[1].training_meta["grid_results"] = results
    best[1].training_meta["selected_cell"] = best[2]
    return best[1]


def _grid_cells(spec: ModelSpec) -> list[tuple[ModelSpec, dict]]:
    grid = spec.grid or {}
    l2s = grid.get("l2", [spec.l2])
    depths = grid.get("max_depth", [spec.max_depth]) if spec.kind == "gbt" else [spec.max_depth]
    cells = []
    for l2 in l2s:
        for depth in depths:
            cell = ModelSpec(
                kind=spec.kind,
                l2=float(l2),
                seed=spec.seed,
                max_iter=spec.max_iter,
                tol=spec.tol,
                n_trees=spec.n_trees,
                learning_rate=spec.learning_rate,
                max_depth=int(depth),
            )
            label = {"l2": float(l2)}
            if spec.kind == "gbt":
                label["max_depth"] = int(depth)
            cells.append((cell, label))
    return cells


def fit_cox(x: SparseMatrix, times, events, spec: ModelSpec | None = None) -> FittedModel:
    spec = spec or ModelSpec(kind="cox")
    times = np.asarray(times, dtype=np.float64).ravel()
    events = np.asarray(events, dtype=np.int64).ravel()
    if x.n_rows != len(times) or len(times) != len(events):
        raise FitError("rows(X), times, events must align")
    try:
        beta, curve, converged, frozen = _fit_cox_raw(
            x.to_csr(), times, events, l2=spec.l2, tol=spec.tol, max_iter=spec.max_iter
        )
    except CoxError as e:
        raise FitError(str(e)) from e
    if frozen:
        names = [x.feature_names[j] for j in frozen]
        shown = names[:5] + ([f"... +{len(names) - 5} more"] if len(names) > 5 else [])
        warnings.warn(f"{len(frozen)} zero-variance covariates pinned to 0: {shown}", stacklevel=2)
    return FittedModel(
        kind="cox",
        feature_names=list(x.feature_names),
        beta=beta,
        training_meta={
            "loss_curve": [float(v) for v in curve],
            "hyperparams": {"l2": spec.l2},
            "seed": spec.seed,
            "converged": converged,
            "frozen_features": [x.feature_names[j] for j in frozen],
        },
    )


def predict_risk(model: FittedModel, x: SparseMatrix) -> np.ndarray:
    """Probabilities for classifiers; unbounded relative-risk scores
    (the linear predictor) for Cox models."""
    model.check_schema(x)
    if model.kind == "logistic":
        return sigmoid(x.to_csr() @ model.beta[1:] + model.beta[0])
    if model.kind == "gbt":
        return model.ensemble.predict_proba(x.to_dense())
    if model.kind == "cox":
        return np.asarray(x.to_csr() @ model.beta, dtype=np.float64)
    raise FitError(f"unknown model kind {model.kind!r}")


@dataclass
class BackgroundStats:
    """Summary of a training matrix sufficient for importance scaling when
    the full background matrix is not kept around."""

    feature_names: list[str]
    sd: np.ndarray

    def column_sd(self) -> np.ndarray:
        return np.asarray(self.sd, dtype=np.float64)

    @classmethod
    def from_matrix(cls, x: SparseMatrix) -> "BackgroundStats":
        return cls(list(x.feature_names), x.column_sd())

    def to_json_dict(self) -> dict:
        return {"feature_names": self.feature_names, "sd": [float(v) for v in self.sd]}

    @classmethod
    def from_json_dict(cls, d: dict) -> "BackgroundStats":
        return cls(list(d["feature_names"]), np.asarray(d["sd"], dtype=np.float64))


@dataclass
class ImportanceItem:
    feature: str
    importance: float
    direction: str  # raises | lowers | neutral


def feature_importance(
    model: FittedModel, background=None, tol: float = 1e-12
) -> list[ImportanceItem]:
    """Signed beta*sd for linear models; total split gain with a
    partial-dependence direction probe for tree ensembles. Sorted by
    absolute importance, descending."""
    if model.kind in ("logistic", "cox"):
        coefs = model.beta[1:] if model.kind == "logistic" else model.beta
        if background is not None:
            model.check_schema(background)
            sd = background.column_sd()
            sd = np.where(sd > 0, sd, 1.0)
        else:
            sd = np.ones(len(coefs))
        raw = coefs * sd
    elif model.kind == "gbt":
        gains = model.ensemble.split_gains(model.n_features)
        signs = _pd_slope_signs(model, background)
        raw = gains * signs
    else:
        raise FitError(f"unknown model kind {model.kind!r}")
    items = []
    for name, v in zip(model.feature_names, raw):
        if abs(v) <= tol:
            direction = "neutral"
        elif v > 0:
            direction = "raises"
        else:
            direction = "lowers"
        items.append(ImportanceItem(name, float(v), direction))
    items.sort(key=lambda it: (-abs(it.importance), it.feature))
    return items


def _pd_slope_signs(model: FittedModel, background) -> np.ndarray:
    if background is None or not hasattr(background, "to_dense"):
        return np.ones(model.n_features)
    model.check_schema(background)
    base = background.to_dense()
    signs = np.ones(model.n_features)
    for j in range(model.n_features):
        col = base[:, j]
        lo, hi = np.percentile(col, [10, 90])
        if lo == hi:
            continue
        x_lo = base.copy()
        x_lo[:, j] = lo
        x_hi = base.copy()
        x_hi[:, j] = hi
        delta = model.ensemble.raw_predict(x_hi).mean() - model.ensemble.raw_predict(x_lo).mean()
        signs[j] = 1.0 if delta >= 0 else -1.0
    return signs


def save_model(model: FittedModel, path: str | Path) -> None:
    """Single-file container: JSON header line, then the raw little-endian
    float64 coefficient blob (base64 would bloat tree models stored in the
    header, so only the vector goes binary)."""
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": model.kind,
        "feature_names": model.feature_names,
        "training_meta": model.training_meta,
        "has_beta": model.beta is not None,
        "beta_len": 0 if model.beta is None else len(model.beta),
        "ensemble": model.ensemble.to_dict() if model.ensemble is not None else None,
    }
    blob = b"" if model.beta is None else np.asarray(model.beta, dtype="<f8").tobytes()
    with open(path, "wb") as f:
        f.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        f.write(b"\n")
        f.write(blob)


def load_model(path: str | Path) -> FittedModel:
    raw = Path(path).read_bytes()
    nl = raw.index(b"\n")
    header = json.loads(raw[:nl].decode("utf-8"))
    if header.get("format_version") != MODEL_FORMAT_VERSION:
        raise FitError(f"unsupported model format version {header.get('format_version')!r}")
    beta = None
    if header["has_beta"]:
        beta = np.frombuffer(raw[nl + 1 :], dtype="<f8", count=header["beta_len"]).copy()
    ensemble = GbtEnsemble.from_dict(header["ensemble"]) if header["ensemble"] else None
    return FittedModel(
        kind=header["kind"],
        feature_names=list(header["feature_names"]),
        beta=beta,
        ensemble=ensemble,
        training_meta=header["training_meta"],
    )


def model_fingerprint(model: FittedModel) -> str:
    import hashlib

    h = hashlib.sha256()
    h.update(model.kind.encode())
    h.update("\x00".join(model.feature_names).encode())
    if model.beta is not None:
        h.update(np.asarray(model.beta, dtype="<f8").tobytes())
    if model.ensemble is not None:
        h.update(json.dumps(model.ensemble.to_dict(), sort_keys=True).encode())
    return h.hexdigest()
