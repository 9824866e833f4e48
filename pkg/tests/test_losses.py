# -*- coding: utf-8 -*-
import numpy as np
from tests import TestCase

from hinet import gradcheck
from hinet.errors import ConfigurationError, ShapeError, IllegalArgumentError
from hinet.losses import DiceConfig, dice_loss, dice_loss_grad
from hinet.tensor import softmax_channels


def _one_hot(labels, classes):
    return np.stack([labels == d for d in range(classes)]).astype(np.float64)[np.newaxis]


def _random_problem(seed, classes=4, shape=(4, 4, 4)):
    rng = np.random.default_rng(seed)
    probs = softmax_channels(rng.normal(size=(1, classes) + shape))
    target = _one_hot(rng.integers(0, classes, size=shape), classes)
    return probs, target


def _printed_dice(P, T, r):
    """Direct transcription of -(2/D) sum_d (sum_j P T + r) / (sum_j P + sum_j T + r)."""
    D = P.shape[1]
    total = 0.0
    for d in range(D):
        overlap = 0.0
        p_sum = 0.0
        t_sum = 0.0
        for p, t in zip(P[:, d].ravel(), T[:, d].ravel()):
            overlap += p * t
            p_sum += p
            t_sum += t
        total += (overlap + r) / (p_sum + t_sum + r)
    return -2.0 / D * total


class DiceLossTestCase(TestCase):
    def test_worked_example(self):
        labels = np.array([0, 0, 0, 1]).reshape(1, 2, 2)
        T = _one_hot(labels, 2)
        loss = dice_loss(T.copy(), T, DiceConfig(r=1.0))
        self.assertAlmostEqual(-26.0 / 21.0, loss, places=12)
        self.assertAlmostEqual(_printed_dice(T, T, 1.0), loss, places=12)

    def test_matches_direct_transcription(self):
        for seed in range(5):
            P, T = _random_problem(seed)
            self.assertAlmostEqual(_printed_dice(P, T, 0.5), dice_loss(P, T, DiceConfig(r=0.5)), places=10)

    def test_perfect_match_limit(self):
        P, T = _random_problem(0)
        self.assertAlmostEqual(-1.0, dice_loss(T, T, DiceConfig(r=1e-12)), places=6)
        self.assertAlmostEqual(-1.0, dice_loss(T, T, DiceConfig(r=1e-12, conventional=True)), places=6)

    def test_disjoint(self):
        T = _one_hot(np.zeros((8, 8, 8), dtype=int), 2)
        P = T[:, ::-1].copy()
        self.assertAlmostEqual(0.0, dice_loss(P, T, DiceConfig(r=1e-12)), places=6)

    def test_bounds(self):
        for seed in range(10):
            P, T = _random_problem(seed)
            printed = dice_loss(P, T)
            conventional = dice_loss(P, T, DiceConfig(conventional=True))
            self.assertTrue(-2.0 <= printed < 0.0, printed)
            self.assertTrue(-1.0 <= conventional < 0.0, conventional)

    def test_voxel_permutation(self):
        P, T = _random_problem(1)
        order = np.random.default_rng(2).permutation(64)
        Pp = P.reshape(1, 4, -1)[:, :, order].reshape(P.shape)
        Tp = T.reshape(1, 4, -1)[:, :, order].reshape(T.shape)
        self.assertAlmostEqual(dice_loss(P, T), dice_loss(Pp, Tp), places=12)

    def test_gradient_sign(self):
        P, _ = _random_problem(3, classes=2)
        T = _one_hot(np.zeros((4, 4, 4), dtype=int), 2)
        grad = dice_loss_grad(P, T)
        self.assertTrue((grad[:, 1] > 0).all())
        self.assertTrue((grad[:, 0] < 0).all())

    def test_gradient_matches_finite_differences(self):
        errors = gradcheck.check_dice_loss(np.random.default_rng(4))
        self.assertEqual(3, len(errors))
        self.assertLess(max(errors.values()), 1e-6)

    def test_class_set(self):
        P, T = _random_problem(5)
        cfg = DiceConfig.foreground(4)
        self.assertEqual((1, 2, 3), cfg.class_set)
        grad = dice_loss_grad(P, T, cfg)
        self.assertFalse(grad[:, 0].any())
        self.assertTrue(grad[:, 1:].all())
        loss = dice_loss(P, T, cfg)
        self.assertAlmostEqual(_printed_dice(P[:, 1:], T[:, 1:], 1.0), loss, places=10)

    def test_float32_gradient(self):
        P, T = _random_problem(6)
        grad = dice_loss_grad(P.astype(np.float32), T.astype(np.float32))
        self.assertEqual(np.float32, grad.dtype)

    def test_invalid(self):
        P, T = _random_problem(7)
        with self.assertRaises(ShapeError):
            dice_loss(P, T[:, :3])
        bad = P.copy()
        bad[0, 0, 0, 0, 0] = np.nan
        with self.assertRaises(IllegalArgumentError):
            dice_loss(bad, T)
        with self.assertRaises(ConfigurationError):
            DiceConfig(r=0)
        with self.assertRaises(ConfigurationError):
            DiceConfig(class_set=())
        with self.assertRaises(ConfigurationError):
            dice_loss(P, T, DiceConfig(class_set=(4,)))
