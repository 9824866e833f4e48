# -*- coding: utf-8 -*-
import csv
import os
from pprint import pprint
from statistics import median
from tempfile import TemporaryDirectory

from mock import patch
from itests import TestCase

from hinet.bench import Benchmark
from hinet.config import parse_run_config
from hinet.constants import HYPERDENSE, BASELINE
from hinet.gradcheck import GradientChecker
from hinet.network import NetworkConfig, build_hinet, variant_delta
from hinet.train import Trainer


class TrainingTestCase(TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()

    def tearDown(self):
        self.tmp.cleanup()

    def overfit(self, variant):
        cfg = parse_run_config({
            'levels': 3, 'base_filters': 4, 'repetitions': [1, 2, 3], 'extent': 32,
            'block_variant': variant, 'epochs': 30, 'steps_per_epoch': 10, 'augment': False,
            'lr0': 1e-3, 'lr_period': 1000, 'output_dir': os.path.join(self.tmp.name, variant)})
        report = Trainer(cfg).run()
        pprint(report.data)
        with open(report.data['log']) as fp:
            losses = [float(row['loss']) for row in csv.DictReader(fp)]
        return report, losses

    def test_overfit_single_phantom(self):
        report, losses = self.overfit(HYPERDENSE)
        self.assertGreaterEqual(report.data['mean_foreground_dsc'], 0.9)
        windows = [median(losses[i:i + 20]) for i in range(0, len(losses), 20)]
        self.assertLess(windows[-1], windows[0])
        self.assertLess(windows[len(windows) // 2], windows[0])

    def test_baseline_completes(self):
        report, losses = self.overfit(BASELINE)
        self.assertEqual(300, len(losses))
        self.assertLess(median(losses[-20:]), median(losses[:20]))

    def test_reproducible_across_thread_counts(self):
        logs = []
        for threads in ('1', '4'):
            out = os.path.join(self.tmp.name, threads)
            cfg = parse_run_config({'levels': 2, 'base_filters': 2, 'repetitions': [1, 2], 'extent': 32,
                                    'epochs': 1, 'steps_per_epoch': 3, 'output_dir': out})
            with patch.dict(os.environ, {'HINET_THREADS': threads}):
                report = Trainer(cfg).run()
            with open(report.data['log']) as fp, open(report.data['checkpoint'], 'rb') as ckpt:
                logs.append((fp.read(), ckpt.read()))
        self.assertEqual(logs[0], logs[1])


class AblationTestCase(TestCase):
    def test_parameter_delta(self):
        cfg = dict(levels=4, base_filters=4, repetitions=(1, 2, 3, 4))
        hyper = build_hinet(NetworkConfig(block_variant=HYPERDENSE, **cfg))
        base = build_hinet(NetworkConfig(block_variant=BASELINE, **cfg))
        expected = sum(variant_delta(p.c_b) for p in hyper.blocks.values())
        print('hyperdense %d, baseline %d' % (hyper.count_params(), base.count_params()))
        self.assertEqual(expected, hyper.count_params() - base.count_params())


class VerificationTestCase(TestCase):
    def test_full_gradient_suite(self):
        report = GradientChecker().run()
        pprint(report.data)
        self.assertTrue(report.data['passed'])

    def test_bench(self):
        for channels in (8, 16, 32):
            data = Benchmark(channels, 32, 5).run().data
            pprint(data)
            self.assertTrue(data['passed'])
            self.assertLess(data['seconds_factorized'], data['seconds_full'])
