"""Ensemble-as-posterior tests: validation, Bayes hand cases, invariances."""

import numpy as np
import pytest

from besra.ensemble import (
    DegenerateEvidenceError,
    EnsembleProbs,
    EnsembleWeights,
    predictive,
    reweight,
    uniform_weights,
    updated_predictive,
)


def toy_probs():
    return EnsembleProbs(np.array([
        [[0.8, 0.1], [0.6, 0.4]],
        [[0.2, 0.3], [0.5, 0.9]],
    ]))


class TestContainers:
    def test_probs_shape_properties(self):
        ep = toy_probs()
        assert (ep.n_members, ep.n_instances, ep.n_labels) == (2, 2, 2)

    def test_probs_validation(self):
        with pytest.raises(ValueError):
            EnsembleProbs(np.zeros((2, 3)))  # not 3-d
        with pytest.raises(ValueError):
            EnsembleProbs(np.zeros((1, 3, 2)))  # single member
        with pytest.raises(ValueError):
            EnsembleProbs(np.full((2, 1, 1), 1.5))  # out of [0, 1]

    def test_probs_immutable(self):
        ep = toy_probs()
        with pytest.raises(ValueError):
            ep.probs[0, 0, 0] = 0.5

    def test_weights_validation(self):
        with pytest.raises(ValueError):
            EnsembleWeights([0.5, 0.6])  # does not sum to 1
        with pytest.raises(ValueError):
            EnsembleWeights([-0.2, 1.2])
        with pytest.raises(ValueError):
            EnsembleWeights([[0.5, 0.5]])  # not 1-d

    def test_uniform(self):
        w = uniform_weights(4)
        np.testing.assert_allclose(w.weights, 0.25)
        with pytest.raises(ValueError):
            uniform_weights(1)


class TestPredictive:
    def test_mixture(self):
        ep = toy_probs()
        w = EnsembleWeights([0.75, 0.25])
        out = predictive(w, ep.probs[:, 0, :])
        np.testing.assert_allclose(out, [0.75 * 0.8 + 0.25 * 0.2,
                                         0.75 * 0.1 + 0.25 * 0.3])

    def test_shape_check(self):
        w = uniform_weights(2)
        with pytest.raises(ValueError):
            predictive(w, np.zeros((3, 2)))  # three members' worth of rows


class TestReweight:
    def test_bayes_hand_case(self):
        # prior (0.5, 0.5), likelihoods (0.8, 0.2): posterior (0.8, 0.2)
        post = reweight(uniform_weights(2), [0.8, 0.2])
        np.testing.assert_allclose(post.weights, [0.8, 0.2])

    def test_nonuniform_prior(self):
        post = reweight(EnsembleWeights([0.9, 0.1]), [0.5, 1.0])
        z = 0.9 * 0.5 + 0.1 * 1.0
        np.testing.assert_allclose(post.weights, [0.45 / z, 0.1 / z])

    def test_zero_evidence(self):
        with pytest.raises(DegenerateEvidenceError):
            reweight(uniform_weights(2), [0.0, 0.0])
        # weightless member with zero likelihood is fine
        post = reweight(EnsembleWeights([1.0, 0.0]), [0.5, 0.0])
        np.testing.assert_allclose(post.weights, [1.0, 0.0])

    def test_likelihood_validation(self):
        with pytest.raises(ValueError):
            reweight(uniform_weights(2), [0.5, 1.5])
        with pytest.raises(ValueError):
            reweight(uniform_weights(2), [0.5])

    def test_sequential_equals_joint(self):
        # conditioning on two independent observations in either order
        w0 = uniform_weights(3)
        l1 = np.array([0.9, 0.5, 0.1])
        l2 = np.array([0.3, 0.6, 0.8])
        seq = reweight(reweight(w0, l1), l2)
        joint = reweight(w0, l1 * l2 / max((l1 * l2).max(), 1.0))
        np.testing.assert_allclose(seq.weights, joint.weights, atol=1e-12)


class TestUpdatedPredictive:
    def test_hand_case(self):
        # two members predicting (0.8, 0.2) at the observed point and
        # (0.9, 0.1) elsewhere; conditioning on y=1 there
        val = updated_predictive(uniform_weights(2), [0.9, 0.1], [0.8, 0.2])
        assert val == pytest.approx(0.8 * 0.9 + 0.2 * 0.1, abs=1e-12)

    def test_identical_members_are_fixed_points(self):
        # agreement means evidence carries no information
        val = updated_predictive(uniform_weights(3), [0.4, 0.4, 0.4],
                                 [0.7, 0.7, 0.7])
        assert val == pytest.approx(0.4, abs=1e-12)

    def test_member_order_invariance(self):
        w = EnsembleWeights([0.2, 0.3, 0.5])
        p = np.array([0.1, 0.6, 0.9])
        lik = np.array([0.4, 0.8, 0.2])
        base = updated_predictive(w, p, lik)
        perm = np.array([2, 0, 1])
        flipped = updated_predictive(EnsembleWeights(w.weights[perm]),
                                     p[perm], lik[perm])
        assert base == pytest.approx(flipped, abs=1e-12)
