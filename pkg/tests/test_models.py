from __future__ import annotations

import numpy as np
import pytest

from cogniboard.models import (
    FitError,
    ModelSpec,
    SchemaMismatchError,
    SparseMatrix,
    SparseMatrixError,
    cox_grad,
    cox_nll,
    feature_importance,
    fit_classifier,
    fit_cox,
    load_model,
    logistic_grad,
    logistic_nll,
    predict_risk,
    save_model,
)


def central_fd(f, beta, h=1e-5):
    g = np.zeros_like(beta)
    for j in range(len(beta)):
        e = np.zeros_like(beta)
        e[j] = h
        g[j] = (f(beta + e) - f(beta - e)) / (2 * h)
    return g


def rel_err(a, b):
    denom = max(np.max(np.abs(a)), np.max(np.abs(b)), 1e-10)
    return np.max(np.abs(a - b)) / denom


def random_problem(rng, n=40, d=5):
    x = rng.normal(size=(n, d))
    y = (rng.random(n) < 0.4).astype(float)
    y[0], y[1] = 0, 1
    return SparseMatrix.from_dense(x), y


class TestSparseMatrix:
    def test_duplicate_coordinate_rejected(self):
        with pytest.raises(SparseMatrixError):
            SparseMatrix(2, 2, [0, 0], [1, 1], [1.0, 2.0])

    def test_out_of_range_rejected(self):
        with pytest.raises(SparseMatrixError):
            SparseMatrix(2, 2, [0, 5], [0, 1], [1.0, 2.0])

    def test_nonfinite_rejected(self):
        with pytest.raises(SparseMatrixError):
            SparseMatrix(1, 1, [0], [0], [np.inf])

    def test_round_trip_dense(self):
        arr = np.array([[0.0, 2.0], [3.0, 0.0]])
        sm = SparseMatrix.from_dense(arr, ["a", "b"])
        assert np.array_equal(sm.to_dense(), arr)


class TestLogisticGradient:
    def test_matches_finite_differences(self):
        rng = np.random.default_rng(0)
        for _ in range(10):
            sm, y = random_problem(rng)
            x = sm.to_csr()
            beta = rng.normal(scale=0.5, size=sm.n_cols + 1)
            l2 = 0.1
            analytic = logistic_grad(beta, x, y, l2)
            numeric = central_fd(lambda b: logistic_nll(b, x, y, l2), beta)
            assert rel_err(analytic, numeric) < 1e-6


class TestLogisticFit:
    def test_intercept_only_recovers_prevalence(self):
        y = np.array([1] * 20 + [0] * 80)
        x = SparseMatrix(100, 0, [], [], [], [])
        model = fit_classifier(x, y, ModelSpec(kind="logistic", l2=0.0))
        p = predict_risk(model, x)
        assert np.allclose(p, 0.2, atol=1e-8)

    def test_separable_sign(self):
        x = SparseMatrix.from_dense(np.array([[-2.0], [-1.0], [1.0], [2.0]]), ["f"])
        y = np.array([0, 0, 1, 1])
        model = fit_classifier(x, y, ModelSpec(kind="logistic", l2=1e-2))
        assert model.beta[1] > 0

    def test_loss_curve_non_increasing(self):
        rng = np.random.default_rng(5)
        sm, y = random_problem(rng, n=80, d=6)
        model = fit_classifier(sm, y, ModelSpec(kind="logistic", l2=1e-2))
        curve = model.training_meta["loss_curve"]
        assert all(a >= b - 1e-12 for a, b in zip(curve, curve[1:]))

    def test_single_class_rejected(self):
        x = SparseMatrix.from_dense(np.ones((3, 1)), ["f"])
        with pytest.raises(FitError):
            fit_classifier(x, np.array([1, 1, 1]))

    def test_known_beta_one_hot(self):
        model = fit_classifier(
            SparseMatrix.from_dense(np.array([[-2.0], [-1.0], [1.0], [2.0]]), ["f"]),
            np.array([0, 0, 1, 1]),
            ModelSpec(kind="logistic", l2=0.5),
        )
        row = SparseMatrix.from_dense(np.array([[1.0]]), ["f"])
        expected = 1.0 / (1.0 + np.exp(-(model.beta[0] + model.beta[1])))
        assert predict_risk(model, row)[0] == pytest.approx(expected, abs=1e-12)

    def test_grid_search_picks_best_validation_cell(self):
        rng = np.random.default_rng(7)
        sm, y = random_problem(rng, n=120, d=4)
        smv, yv = random_problem(rng, n=60, d=4)
        spec = ModelSpec(kind="logistic", grid={"l2": [1e-3, 1e-2, 1e-1, 1.0]})
        model = fit_classifier(sm, y, spec, validation=(smv, yv))
        results = model.training_meta["grid_results"]
        assert len(results) == 4
        best = max(results, key=lambda r: r["val_auroc"])
        assert model.training_meta["selected_cell"] == best["cell"]


class TestCox:
    def test_gradient_matches_finite_differences(self):
        rng = np.random.default_rng(1)
        for _ in range(10):
            n, d = 35, 4
            x = rng.normal(size=(n, d))
            t = rng.exponential(scale=5.0, size=n) + 0.1
            ev = rng.integers(0, 2, size=n)
            ev[0] = 1
            xs = SparseMatrix.from_dense(x).to_csr()
            beta = rng.normal(scale=0.4, size=d)
            analytic = cox_grad(beta, xs, t, ev, 0.05)
            numeric = central_fd(lambda b: cox_nll(b, xs, t, ev, 0.05), beta)
            assert rel_err(analytic, numeric) < 1e-6

    def test_gradient_with_ties(self):
        rng = np.random.default_rng(2)
        n, d = 30, 3
        x = rng.normal(size=(n, d))
        t = rng.integers(1, 6, size=n).astype(float)  # heavy ties
        ev = rng.integers(0, 2, size=n)
        ev[0] = 1
        xs = SparseMatrix.from_dense(x).to_csr()
        beta = rng.normal(scale=0.3, size=d)
        analytic = cox_grad(beta, xs, t, ev, 0.0)
        numeric = central_fd(lambda b: cox_nll(b, xs, t, ev, 0.0), beta)
        assert rel_err(analytic, numeric) < 1e-6

    def test_planted_hazard_ratio_recovery(self):
        # exponential survival oracle: hazard h0*exp(beta*x), true beta = ln 2
        rng = np.random.default_rng(11)
        n = 5000
        x = rng.integers(0, 2, size=n).astype(float)
        hazard = 0.05 * np.exp(np.log(2.0) * x)
        event_time = rng.exponential(1.0 / hazard)
        censor_time = rng.uniform(5, 60, size=n)
        t = np.minimum(event_time, censor_time)
        ev = (event_time <= censor_time).astype(int)
        model = fit_cox(SparseMatrix.from_dense(x[:, None], ["arm"]), t, ev, ModelSpec(kind="cox", l2=0.0))
        assert abs(model.beta[0] - np.log(2.0)) < 0.1 * np.log(2.0)

    def test_zero_variance_column_frozen(self):
        rng = np.random.default_rng(3)
        n = 50
        x = np.column_stack([rng.normal(size=n), np.full(n, 2.5)])
        t = rng.exponential(5, size=n) + 0.1
        ev = rng.integers(0, 2, size=n)
        ev[0] = 1
        with pytest.warns(UserWarning, match="zero-variance"):
            model = fit_cox(SparseMatrix.from_dense(x, ["a", "const"]), t, ev)
        assert model.beta[1] == 0.0
        assert model.training_meta["frozen_features"] == ["const"]

    def test_all_censored_rejected(self):
        x = SparseMatrix.from_dense(np.random.default_rng(0).normal(size=(5, 1)), ["a"])
        with pytest.raises(FitError):
            fit_cox(x, [1, 2, 3, 4, 5], [0, 0, 0, 0, 0])

    def test_score_scaling_preserves_order(self):
        from cogniboard.metrics import c_index

        rng = np.random.default_rng(4)
        n = 60
        x = rng.normal(size=(n, 3))
        t = rng.exponential(5, size=n) + 0.1
        ev = rng.integers(0, 2, size=n)
        ev[0] = 1
        sm = SparseMatrix.from_dense(x)
        model = fit_cox(sm, t, ev)
        scores = predict_risk(model, sm)
        base = c_index(t.tolist(), ev.tolist(), scores.tolist())
        scaled = c_index(t.tolist(), ev.tolist(), (3.7 * scores).tolist())
        assert base == scaled


class TestGbt:
    def test_deterministic(self):
        rng = np.random.default_rng(9)
        sm, y = random_problem(rng, n=100, d=5)
        m1 = fit_classifier(sm, y, ModelSpec(kind="gbt", n_trees=20))
        m2 = fit_classifier(sm, y, ModelSpec(kind="gbt", n_trees=20))
        assert np.array_equal(predict_risk(m1, sm), predict_risk(m2, sm))

    def test_planted_signal_recovered(self):
        rng = np.random.default_rng(10)
        n = 300
        signal = rng.normal(size=n)
        noise = rng.normal(size=(n, 3))
        y = (signal > 0).astype(int)
        x = SparseMatrix.from_dense(np.column_stack([noise[:, 0], signal, noise[:, 1:]]),
                                    ["n1", "sig", "n2", "n3"])
        model = fit_classifier(x, y, ModelSpec(kind="gbt", n_trees=25, max_depth=2))
        report = feature_importance(model, background=x)
        assert report[0].feature == "sig"
        assert report[0].direction == "raises"


class TestImportance:
    def test_signed_ranking(self):
        from cogniboard.models import FittedModel

        model = FittedModel(
            kind="logistic", feature_names=["f1", "f2"], beta=np.array([0.0, 2.0, -1.0])
        )
        report = feature_importance(model)  # no background: unit sds
        assert [it.feature for it in report] == ["f1", "f2"]
        assert report[0].direction == "raises"
        assert report[1].direction == "lowers"
        assert report[0].importance == 2.0
        assert report[1].importance == -1.0

    def test_zero_beta_all_neutral(self):
        from cogniboard.models import FittedModel

        model = FittedModel(kind="logistic", feature_names=["a", "b"], beta=np.zeros(3))
        report = feature_importance(model)
        assert all(it.direction == "neutral" for it in report)


class TestPersistence:
    def test_round_trip_bit_identical(self, tmp_path):
        rng = np.random.default_rng(12)
        sm, y = random_problem(rng, n=60, d=4)
        model = fit_classifier(sm, y, ModelSpec(kind="logistic", l2=1e-2))
        p = tmp_path / "m.cbm"
        save_model(model, p)
        again = load_model(p)
        assert np.array_equal(model.beta, again.beta)
        assert model.feature_names == again.feature_names
        assert model.kind == again.kind

    def test_gbt_round_trip(self, tmp_path):
        rng = np.random.default_rng(13)
        sm, y = random_problem(rng, n=80, d=3)
        model = fit_classifier(sm, y, ModelSpec(kind="gbt", n_trees=10))
        p = tmp_path / "m.cbm"
        save_model(model, p)
        again = load_model(p)
        assert np.array_equal(predict_risk(model, sm), predict_risk(again, sm))

    def test_schema_mismatch_raises(self):
        rng = np.random.default_rng(14)
        sm, y = random_problem(rng, n=40, d=3)
        model = fit_classifier(sm, y, ModelSpec(kind="logistic"))
        other = SparseMatrix.from_dense(np.zeros((2, 3)), ["x", "y", "z"])
        with pytest.raises(SchemaMismatchError):
            predict_risk(model, other)

    def test_beta_zero_gives_half(self):
        from cogniboard.models import FittedModel

        model = FittedModel(kind="logistic", feature_names=["a"], beta=np.zeros(2))
        x = SparseMatrix.from_dense(np.array([[1.0], [5.0]]), ["a"])
        assert np.allclose(predict_risk(model, x), 0.5)
