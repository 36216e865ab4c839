"""Tests for the numeric oracles."""

import math

import numpy as np
import pytest

import verification
from datasets import gen_blobs
from errors import ParameterError
from losses import penex_inference_probs
from models import DirectionCheck, ModelSpec, WeakLearnerReport
from networks import init_model
from tensor import Tensor
from verification import (
    check_margin_bound,
    check_weak_learner_direction,
    conf_penalty_minimizer,
    conf_penalty_stationarity_residual,
    direction_problem,
    direction_trend_ok,
    fisher_closed_form,
    fisher_numeric,
    gradient_check,
    grid_minimize_rho,
    margin_bound_from_logits,
    margin_bound_over_training,
    optimal_rho_numeric,
    run_oracle_suite,
)


class TestGradientCheck:

    def test_exact_for_polynomial(self):
        error = gradient_check(lambda t: (t[0] * t[0] * t[1]).sum(), [np.array([1.0, -2.0]), np.array([0.5, 3.0])])
        assert error < 1e-7

    def test_detects_wrong_gradient(self):
        # detach drops the contribution of the second factor
        def build(tensors):
            x = tensors[0]
            return (x * Tensor(x.data)).sum()

        assert gradient_check(build, [np.array([1.0, 2.0])]) > 0.1


class TestFisherConsistency:

    def test_closed_form_example(self):
        f = fisher_closed_form([0.8, 0.2], 0.1, 0.05)
        np.testing.assert_allclose(f, [0.427276, -0.832992], atol=1e-6)
        np.testing.assert_allclose(penex_inference_probs(f[None, :], 0.1).data[0], [0.8, 0.2], atol=1e-12)

    def test_uniform_probabilities_give_equal_logits(self):
        f = fisher_closed_form([0.25] * 4, 0.4, 0.3)
        assert np.ptp(f) == pytest.approx(0.0, abs=1e-15)

    def test_rho_only_shifts_the_minimizer(self):
        a = fisher_closed_form([0.6, 0.3, 0.1], 0.5, 0.1)
        b = fisher_closed_form([0.6, 0.3, 0.1], 0.5, 2.0)
        shift = a - b
        np.testing.assert_allclose(shift, shift[0])
        np.testing.assert_allclose(penex_inference_probs(a[None, :], 0.5).data,
                                   penex_inference_probs(b[None, :], 0.5).data)

    def test_numeric_agrees_with_closed_form(self, rng):
        for _ in range(100):
            probs = rng.dirichlet(np.ones(int(rng.integers(2, 6))))
            alpha, rho = rng.uniform(0.05, 2.0), rng.uniform(0.01, 1.0)
            np.testing.assert_allclose(fisher_numeric(probs, alpha, rho), fisher_closed_form(probs, alpha, rho),
                                       atol=1e-8)

    def test_converges_when_objective_stops_changing(self):
        # Newton lands within rounding of the optimum before |grad| drops below tol here
        probs, alpha, rho = [0.95824, 0.04176], 1.6136, 0.30449
        np.testing.assert_allclose(fisher_numeric(probs, alpha, rho), fisher_closed_form(probs, alpha, rho),
                                   atol=1e-8)

    def test_symmetric_binary_case(self):
        np.testing.assert_allclose(fisher_numeric([0.5, 0.5], 1.0, 1.0), [math.log(0.5) / 2] * 2, atol=1e-10)

    def test_zero_probability_class_diverges(self):
        f = fisher_numeric([1.0, 0.0], 1.0, 1.0)
        assert f[0] == pytest.approx(0.0, abs=1e-8)
        assert f[1] == -np.inf

    def test_invalid_inputs(self):
        with pytest.raises(ParameterError):
            fisher_closed_form([0.5, 0.6], 0.1, 0.1)
        with pytest.raises(ParameterError):
            fisher_closed_form([0.5, 0.5], 0.1, 0.0)


class TestConfidencePenalty:

    def test_no_penalty_recovers_probabilities(self):
        np.testing.assert_allclose(conf_penalty_minimizer([0.8, 0.2], 0.0), [0.8, 0.2], atol=1e-6)

    def test_uniform_stays_uniform(self):
        np.testing.assert_allclose(conf_penalty_minimizer([1 / 3] * 3, 0.7), [1 / 3] * 3, atol=1e-8)

    def test_penalty_pulls_toward_uniform(self):
        q = conf_penalty_minimizer([0.8, 0.2], 0.5)
        assert 0.5 < q[0] < 0.8
        assert conf_penalty_stationarity_residual([0.8, 0.2], q, 0.5) < 1e-6

    def test_negative_lambda_rejected(self):
        with pytest.raises(ParameterError):
            conf_penalty_minimizer([0.5, 0.5], -0.1)


class TestOptimalRho:

    @pytest.mark.parametrize("alpha,ex_mean,se_mean,gamma", [
        (0.1, 1.0, 2.0, 0.0),
        (1.0, 3.0, 0.5, 1.0),
        (2.5, 0.2, 7.0, 2.0),
    ])
    def test_matches_batch_estimate(self, alpha, ex_mean, se_mean, gamma):
        expected = alpha * ex_mean / se_mean
        assert optimal_rho_numeric(alpha, ex_mean, se_mean, gamma) == pytest.approx(expected, rel=1e-6)

    def test_grid_within_one_cell(self):
        best, ratio = grid_minimize_rho(0.1, 1.0, 2.0)
        assert abs(math.log(best / 0.05)) <= math.log(ratio)


class TestMarginBound:

    def test_zero_gamma_unit_rho_is_penex_value(self, rng):
        logits = rng.normal(size=(30, 3))
        labels = rng.integers(0, 3, size=30)
        check = margin_bound_from_logits(logits, labels, alpha=1.0, rho=1.0, gamma_grid=[0.0])
        assert check.bound_rhs[0] == pytest.approx(check.penex_value)

    def test_untrained_model_satisfies_bound(self):
        data = gen_blobs(200, 2, seed=0)
        model = init_model(ModelSpec(input_dim=2, num_classes=2), seed=0)
        check = check_margin_bound(model, data, alpha=0.1, rho=0.05)
        assert check.all_hold
        assert check.n == 200
        assert len(check.slack) == len(check.gamma_grid)

    def test_rho_must_be_positive(self, rng):
        with pytest.raises(ParameterError):
            margin_bound_from_logits(rng.normal(size=(4, 2)), [0, 1, 0, 1], 0.1, 0.0)

    def test_bound_is_checked_on_held_out_rows(self, monkeypatch):
        seen = []
        real_check = verification.check_margin_bound

        def recording_check(model, data, *args, **kwargs):
            seen.append(data.n)
            return real_check(model, data, *args, **kwargs)

        monkeypatch.setattr(verification, "check_margin_bound", recording_check)
        margin_bound_over_training(seed=0, epochs=1, n=100)
        assert seen == [20, 20]

    @pytest.mark.slow
    def test_bound_holds_on_held_out_data_throughout_training(self):
        assert margin_bound_over_training(seed=0, epochs=200) == []


class TestWeakLearnerDirection:

    def test_trend_needs_every_cosine(self):
        report = WeakLearnerReport(checks=[DirectionCheck(eta=0.1, cosine=0.99),
                                           DirectionCheck(eta=0.01, status="inconclusive")], seed=0)
        assert not report.conclusive
        assert not direction_trend_ok(report)

    def test_trend_ordering(self):
        rising = WeakLearnerReport(checks=[DirectionCheck(eta=1e-3, cosine=0.99),
                                           DirectionCheck(eta=1e-1, cosine=0.9)], seed=0)
        falling = WeakLearnerReport(checks=[DirectionCheck(eta=1e-3, cosine=0.96),
                                            DirectionCheck(eta=1e-1, cosine=0.99)], seed=0)
        assert direction_trend_ok(rising)
        assert not direction_trend_ok(falling)

    def test_hidden_layers_rejected(self):
        data = gen_blobs(20, 2, seed=0)
        model = init_model(ModelSpec(input_dim=2, hidden_dims=[4], num_classes=2), seed=0)
        with pytest.raises(ParameterError):
            check_weak_learner_direction(model, data, alpha=0.1)

    @pytest.mark.slow
    def test_small_step_aligns_with_penex_gradient(self):
        model, data = direction_problem(seed=0)
        report = check_weak_learner_direction(model, data, alpha=0.1, directions=20_000, seed=0)
        smallest = min(report.checks, key=lambda c: c.eta)
        assert smallest.status == "ok"
        assert smallest.cosine >= 0.95
        assert smallest.rho_fit >= 0


@pytest.mark.slow
class TestOracleSuite:

    def test_closed_form_checks_pass(self):
        report = run_oracle_suite(seed=0, directions=20_000, gradient_points=10, bound_epochs=3)
        results = {check.name: check for check in report.checks}
        for name in ("gradients", "fisher_numeric", "fisher_roundtrip", "confidence_penalty_inconsistency",
                     "optimal_rho", "controller_decay", "samme_eta", "margin_bound"):
            assert results[name].passed, results[name].detail
        assert "weak_learner_direction" in results
