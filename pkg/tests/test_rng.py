# -*- coding: utf-8 -*-
import numpy as np
from tests import TestCase

from hinet.rng import SplitMix64


class SplitMix64TestCase(TestCase):
    def test_reference_value(self):
        # first output of SplitMix64 seeded with 0
        self.assertEqual(0xE220A8397B1DCDAF, int(SplitMix64(0).next_uint64(1)[0]))

    def test_batching_independent(self):
        whole = SplitMix64(42).next_uint64(10)
        rng = SplitMix64(42)
        parts = np.concatenate([rng.next_uint64(3), rng.next_uint64(7)])
        self.assertTrue(np.array_equal(whole, parts))

    def test_uniform(self):
        values = SplitMix64(1).uniform(-2.0, 2.0, (4, 5))
        self.assertEqual((4, 5), values.shape)
        self.assertTrue(((values >= -2.0) & (values < 2.0)).all())
        self.assertFalse(np.array_equal(values, SplitMix64(2).uniform(-2.0, 2.0, (4, 5))))
