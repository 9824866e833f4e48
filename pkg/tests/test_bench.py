# -*- coding: utf-8 -*-
from tests import TestCase

from hinet.bench import Benchmark
from hinet.errors import IllegalArgumentError


class BenchmarkTestCase(TestCase):
    def test_counts(self):
        counts = Benchmark(8, 4, 1).counts()
        self.assertEqual(1736, counts['params_full'])
        self.assertEqual(876, counts['params_factorized'])
        self.assertEqual(27 * 64 * 64, counts['macs_full'])
        self.assertEqual(3 * 9 * 8 * 4 * 64, counts['macs_factorized'])

    def test_factorized_is_smaller(self):
        for channels in (8, 16, 32):
            counts = Benchmark(channels, 32, 1).counts()
            self.assertLess(counts['params_factorized'], counts['params_full'], channels)
            self.assertLess(counts['macs_factorized'], counts['macs_full'], channels)

    def test_run(self):
        data = Benchmark(4, 4, 1).run().data
        self.assertTrue(data['passed'])
        self.assertEqual(2, data['branch_width'])
        self.assertGreaterEqual(data['seconds_full'], 0.0)
        self.assertGreaterEqual(data['seconds_factorized'], 0.0)
        self.assertLess(data['params_ratio'], 1.0)

    def test_single_channel(self):
        self.assertFalse(Benchmark(1, 4, 1).run().data['passed'])

    def test_invalid(self):
        with self.assertRaises(IllegalArgumentError):
            Benchmark(0, 4, 1)
        with self.assertRaises(IllegalArgumentError):
            Benchmark(8, 4, 0)
