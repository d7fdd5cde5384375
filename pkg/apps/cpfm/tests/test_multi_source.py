import math

import numpy as np
from django.test import SimpleTestCase

from apps.cpfm.exceptions import ContractError
from apps.cpfm.multi_source import (
    combine_teachers,
    confident_count,
    entropy_weight,
    mean_entropy,
    momentum_update_weights,
    normalize_weights,
    refresh_weights,
)
from apps.cpfm.tests.utils import random_simplex


class EntropyWeightTests(SimpleTestCase):
    def test_uniform(self):
        self.assertAlmostEqual(mean_entropy(np.full((3, 5), 0.2)), math.log(5), places=9)
        self.assertAlmostEqual(entropy_weight(np.full((3, 5), 0.2)), 0.6213, places=4)

    def test_one_hot_hits_floor(self):
        self.assertAlmostEqual(entropy_weight(np.eye(3)), 1e6)

    def test_batch_mean(self):
        # entropies ln 2 and ln 4 average to 1.5 ln 2
        preds = [[0.5, 0.5, 0.0, 0.0], [0.25, 0.25, 0.25, 0.25]]
        self.assertAlmostEqual(entropy_weight(preds), 1.0 / (1.5 * math.log(2)), places=9)


class NormalizeTests(SimpleTestCase):
    def test_hand_value(self):
        np.testing.assert_array_equal(normalize_weights([2.0, 4.0]), [0.5, 1.0])

    def test_single_teacher(self):
        np.testing.assert_array_equal(normalize_weights([0.3]), [1.0])

    def test_empty(self):
        with self.assertRaises(ContractError):
            normalize_weights([])

    def test_higher_entropy_never_raises_lambda(self):
        rng = np.random.default_rng(0)
        for _ in range(1000):
            m = int(rng.integers(2, 6))
            preds = [random_simplex(rng, (4, 3)) for _ in range(m)]
            lam = normalize_weights([entropy_weight(p) for p in preds])
            self.assertEqual(lam.max(), 1.0)
            h = [mean_entropy(p) for p in preds]
            order = np.argsort(h)
            self.assertTrue(np.all(np.diff(lam[order]) <= 1e-12))


class MomentumTests(SimpleTestCase):
    def test_no_confident_samples(self):
        np.testing.assert_array_equal(momentum_update_weights([1, 0.5], [0.5, 1], 0, 100), [0.5, 1.0])

    def test_all_confident(self):
        np.testing.assert_array_equal(momentum_update_weights([1, 0.5], [0.5, 1], 100, 100), [1.0, 0.5])

    def test_hand_value(self):
        np.testing.assert_allclose(momentum_update_weights([1, 0.5], [0.5, 1], 50, 100), [0.75, 0.75])

    def test_zero_total(self):
        with self.assertRaises(ContractError):
            momentum_update_weights([1.0], [1.0], 0, 0)


class CombineTests(SimpleTestCase):
    def test_single_teacher_identity(self):
        p = np.array([[0.2, 0.8]])
        np.testing.assert_allclose(combine_teachers([p], [1.0]), p)

    def test_hand_value(self):
        np.testing.assert_allclose(combine_teachers([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0]), [0.5, 0.5])

    def test_all_zero_weights(self):
        with self.assertRaises(ContractError):
            combine_teachers([[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0])

    def test_matches_brute_force(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            m, k = int(rng.integers(1, 6)), int(rng.integers(2, 7))
            preds = random_simplex(rng, (m, 3, k))
            lam = rng.random(m) + 0.01
            expected = np.zeros((3, k))
            for i in range(m):
                expected += lam[i] * preds[i]
            expected /= expected.sum(axis=1, keepdims=True)
            np.testing.assert_allclose(combine_teachers(preds, lam), expected, atol=1e-12)

    def test_confident_count(self):
        self.assertEqual(confident_count([[0.6, 0.4], [0.5, 0.5], [0.1, 0.9]]), 2)


class RefreshTests(SimpleTestCase):
    def setUp(self):
        self.sharp = np.tile([0.9, 0.05, 0.05], (4, 1))
        self.flat = np.tile([0.4, 0.3, 0.3], (4, 1))

    def test_first_epoch_takes_fresh_weights(self):
        weights = refresh_weights([self.sharp, self.flat], None, 1)
        self.assertEqual(weights.lam[0], 1.0)
        self.assertLess(weights.lam[1], 1.0)
        np.testing.assert_array_equal(weights.lam, normalize_weights(weights.eta))

    def test_later_epochs_blend_by_confident_share(self):
        first = refresh_weights([self.sharp, self.flat], None, 1)
        first.lam = np.array([0.2, 0.4])
        second = refresh_weights([self.sharp, self.flat], first, 2)
        alpha = second.confident / 4
        np.testing.assert_allclose(second.lam, alpha * first.lam + (1 - alpha) * normalize_weights(second.eta))

    def test_confident_share_uses_fresh_weights(self):
        uniform = np.full((4, 3), 1 / 3)
        first = refresh_weights([self.sharp, uniform], None, 1)
        first.lam = np.array([0.0, 1.0])
        self.assertEqual(confident_count(combine_teachers([self.sharp, uniform], first.lam)), 0)
        second = refresh_weights([self.sharp, uniform], first, 2)
        fresh = normalize_weights(second.eta)
        self.assertEqual(second.confident, confident_count(combine_teachers([self.sharp, uniform], fresh)))
        self.assertEqual(second.confident, 4)

    def test_naive_average(self):
        weights = refresh_weights([self.sharp, self.flat, self.flat], None, 3, naive=True)
        np.testing.assert_array_equal(weights.lam, np.full(3, 1 / 3))
