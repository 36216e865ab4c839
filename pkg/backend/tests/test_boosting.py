"""Tests for SAMME boosting over decision stumps."""

import math

import numpy as np
import pytest

from boosting import (
    ETA_CAP,
    Stump,
    classifier_weight,
    ensemble_predict,
    ensemble_scores,
    fit_stump,
    samme_round,
    samme_train,
)
from datasets import Dataset, gen_blobs
from errors import ContractError, ParameterError
from models import DatasetKind


def _dataset(features, labels, num_classes=2):
    return Dataset(np.asarray(features, dtype=np.float64), np.asarray(labels), num_classes, DatasetKind.CSV)


def _uniform(n):
    return np.full(n, 1.0 / n)


@pytest.fixture
def separable_pair():
    return _dataset([[-1.0], [1.0]], [0, 1])


@pytest.fixture
def xor():
    return _dataset([[0, 0], [1, 1], [0, 1], [1, 0]], [0, 0, 1, 1])


class TestFitStump:

    def test_separable_pair_splits_at_zero(self, separable_pair):
        stump = fit_stump(separable_pair.features, separable_pair.labels, _uniform(2), 2)
        assert stump == Stump(feature_index=0, threshold=0.0, left_class=0, right_class=1)

    def test_single_label_is_predicted_everywhere(self):
        data = _dataset([[0.3], [1.5], [-2.0]], [1, 1, 1])
        stump = fit_stump(data.features, data.labels, _uniform(3), 2)
        assert np.all(stump.predict(data.features) == 1)

    def test_xor_has_no_useful_stump(self, xor):
        stump = fit_stump(xor.features, xor.labels, _uniform(4), 2)
        error = np.sum(_uniform(4)[stump.predict(xor.features) != xor.labels])
        assert error == pytest.approx(0.5)

    def test_ties_prefer_first_feature(self):
        data = _dataset([[-1.0, -1.0], [1.0, 1.0]], [0, 1])
        assert fit_stump(data.features, data.labels, _uniform(2), 2).feature_index == 0

    def test_empty_dataset_rejected(self):
        with pytest.raises(ContractError):
            fit_stump(np.zeros((0, 1)), np.zeros(0, dtype=np.int64), np.zeros(0), 2)

    def test_weights_must_be_a_distribution(self, separable_pair):
        with pytest.raises(ContractError):
            fit_stump(separable_pair.features, separable_pair.labels, np.array([0.7, 0.7]), 2)

    def test_weights_shift_the_split(self):
        data = _dataset([[0.0], [1.0], [2.0]], [0, 1, 0])
        heavy_middle = np.array([0.1, 0.8, 0.1])
        stump = fit_stump(data.features, data.labels, heavy_middle, 2)
        assert stump.predict(data.features)[1] == 1


class TestClassifierWeight:

    def test_ten_classes(self):
        assert classifier_weight(0.3, 10) == pytest.approx(3.044522, abs=1e-6)

    def test_chance_level_binary(self):
        assert classifier_weight(0.5, 2) == pytest.approx(0.0)

    def test_binary_is_classic_adaboost(self):
        assert classifier_weight(0.2, 2) == pytest.approx(math.log(4.0))

    def test_perfect_stump_is_capped(self):
        assert classifier_weight(0.0, 3) == pytest.approx(ETA_CAP + math.log(2))

    def test_needs_two_classes(self):
        with pytest.raises(ParameterError):
            classifier_weight(0.1, 1)


class TestSammeRound:

    def test_weights_stay_normalized(self, blobs):
        result = samme_round(blobs.features, blobs.labels, _uniform(blobs.n), 2)
        assert result.accepted
        assert result.weights.sum() == pytest.approx(1.0, abs=1e-12)

    def test_mistakes_gain_weight(self, blobs):
        result = samme_round(blobs.features, blobs.labels, _uniform(blobs.n), 2)
        wrong = result.stump.predict(blobs.features) != blobs.labels
        assert result.eta > 0
        assert wrong.any()
        assert result.weights[wrong].min() > result.weights[~wrong].max()

    def test_listing_update_shrinks_mistakes(self, blobs):
        result = samme_round(blobs.features, blobs.labels, _uniform(blobs.n), 2, listing_update=True)
        wrong = result.stump.predict(blobs.features) != blobs.labels
        assert result.weights[wrong].max() < result.weights[~wrong].min()

    def test_chance_level_round_rejected(self, xor):
        weights = _uniform(4)
        result = samme_round(xor.features, xor.labels, weights, 2)
        assert not result.accepted
        assert result.epsilon == pytest.approx(0.5)
        assert result.weights is weights


class TestSammeTrain:

    def test_single_round_is_best_stump(self, blobs):
        ensemble = samme_train(blobs, rounds=1)
        assert len(ensemble.members) == 1
        assert ensemble.members[0][0] == fit_stump(blobs.features, blobs.labels, _uniform(blobs.n), 2)

    def test_separable_data_fit_in_one_round(self, separable_pair):
        ensemble = samme_train(separable_pair, rounds=3)
        assert ensemble.rounds[0].train_acc == 1.0
        assert ensemble.rounds[0].eta == pytest.approx(ETA_CAP)

    def test_stops_when_no_stump_beats_chance(self, xor, caplog):
        ensemble = samme_train(xor, rounds=5)
        assert ensemble.stopped_early
        assert ensemble.members == []
        assert "no better than chance" in caplog.text

    def test_fifty_rounds_at_least_match_one_stump(self):
        data = gen_blobs(200, 3, seed=0)
        single = np.mean(ensemble_predict(samme_train(data, rounds=1), data.features) == data.labels)
        boosted = samme_train(data, rounds=50)
        assert np.mean(ensemble_predict(boosted, data.features) == data.labels) >= single
        assert boosted.rounds[-1].train_acc >= single

    def test_weights_remain_a_distribution_every_round(self, blobs):
        weights = _uniform(blobs.n)
        for _ in range(20):
            result = samme_round(blobs.features, blobs.labels, weights, 2)
            if not result.accepted:
                break
            weights = result.weights
            assert weights.sum() == pytest.approx(1.0, abs=1e-12)
            assert np.all(weights >= 0)

    def test_scores_are_weighted_votes(self, separable_pair):
        ensemble = samme_train(separable_pair, rounds=1)
        eta = ensemble.members[0][1]
        np.testing.assert_allclose(ensemble_scores(ensemble, separable_pair.features), [[eta, 0.0], [0.0, eta]])

    def test_zero_rounds_rejected(self, blobs):
        with pytest.raises(ParameterError):
            samme_train(blobs, rounds=0)

    def test_seed_is_recorded(self, blobs):
        assert samme_train(blobs, rounds=1, seed=11).seed == 11
