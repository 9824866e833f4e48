# -*- coding: utf-8 -*-
import numpy as np
from tests import TestCase

from hinet.errors import ShapeError
from hinet.optim import AdamState, LrSchedule, adam_step, lr_at


class AdamTestCase(TestCase):
    def test_zero_gradient(self):
        params = {'w': np.array([1.0, -2.0, 3.0])}
        before = params['w'].copy()
        adam_step(params, {'w': np.zeros(3)}, AdamState(lr=0.1))
        self.assertEqual(before.tobytes(), params['w'].tobytes())

    def test_first_step(self):
        params = {'p': np.array([1.0])}
        state = AdamState(lr=0.1)
        adam_step(params, {'p': np.array([1.0])}, state)
        self.assertAlmostEqual(1.0 - 0.1 / (1.0 + 1e-8), params['p'][0], places=12)
        self.assertEqual(1, state.t)
        self.assertAlmostEqual(0.1, state.m['p'][0], places=15)
        self.assertAlmostEqual(0.001, state.v['p'][0], places=15)

    def test_step_bounded_by_lr(self):
        rng = np.random.default_rng(0)
        params = {'w': rng.normal(size=50)}
        state = AdamState(lr=0.01)
        for _ in range(20):
            before = params['w'].copy()
            adam_step(params, {'w': rng.normal(size=50)}, state)
            self.assertLessEqual(np.abs(params['w'] - before).max(), 0.01 * (1 + 1e-6) * 3.2)

    def test_deterministic(self):
        def run():
            rng = np.random.default_rng(1)
            params = {'a': np.ones((2, 3), dtype=np.float32), 'b': np.zeros(3, dtype=np.float32)}
            state = AdamState(lr=1e-3)
            for _ in range(5):
                adam_step(params, {'a': rng.normal(size=(2, 3)).astype(np.float32),
                                   'b': rng.normal(size=3).astype(np.float32)}, state)
            return params['a'].tobytes() + params['b'].tobytes()
        self.assertEqual(run(), run())

    def test_keeps_dtype(self):
        params = {'w': np.ones(4, dtype=np.float32)}
        adam_step(params, {'w': np.ones(4, dtype=np.float32)}, AdamState())
        self.assertEqual(np.float32, params['w'].dtype)

    def test_mismatch(self):
        with self.assertRaises(ShapeError):
            adam_step({'w': np.ones(3)}, {'w': np.ones(4)}, AdamState())
        with self.assertRaises(ShapeError):
            adam_step({'w': np.ones(3)}, {'v': np.ones(3)}, AdamState())


class LrScheduleTestCase(TestCase):
    def test_values(self):
        self.assertEqual(3e-5, lr_at(0))
        self.assertEqual(3e-5, lr_at(29))
        self.assertEqual(1.5e-5, lr_at(30))
        self.assertEqual(3.75e-6, lr_at(95))

    def test_monotonic(self):
        schedule = LrSchedule(lr0=1e-3, decay=0.5, period=3)
        rates = [schedule.lr_at(epoch) for epoch in range(20)]
        self.assertEqual(sorted(rates, reverse=True), rates)
        for epoch in range(0, 18, 3):
            self.assertEqual(rates[epoch] / 2, rates[epoch + 3])
