# -*- coding: utf-8 -*-
import json
import os
from tempfile import NamedTemporaryFile

from mock import patch
from tests import TestCase

from hinet import config
from hinet.constants import BASELINE
from hinet.errors import ConfigurationError


class RunConfigTestCase(TestCase):
    def test_defaults(self):
        cfg = config.RunConfig().validate()
        self.assertEqual([1, 2, 3, 4], cfg.repetitions)
        self.assertEqual(3e-5, cfg.lr0)
        net_cfg = cfg.network_config()
        self.assertEqual((1, 2, 3, 4), net_cfg.repetitions)
        self.assertEqual(4, net_cfg.base_filters)

    def test_parse(self):
        cfg = config.parse_run_config({'levels': 2, 'repetitions': [1, 2], 'block_variant': BASELINE,
                                       'foreground_only': True, 'dice_r': 0.5})
        self.assertEqual(2, cfg.levels)
        self.assertEqual(BASELINE, cfg.network_config().block_variant)
        dice = cfg.dice_config()
        self.assertEqual((1, 2, 3), dice.class_set)
        self.assertEqual(0.5, dice.r)

    def test_unknown_keys(self):
        with self.assertRaises(ConfigurationError) as ctx:
            config.parse_run_config({'levels': 4, 'learning_rate': 1})
        self.assertIn('learning_rate', str(ctx.exception))

    def test_invalid_values(self):
        for data in ({'levels': 3},
                     {'repetitions': [4, 3, 2, 1]},
                     {'extent': 8},
                     {'dice_r': 0},
                     {'lr_decay': 1.5},
                     {'block_variant': 'dense'},
                     {'steps_per_epoch': 0}):
            with self.assertRaises(ConfigurationError, msg=str(data)):
                config.parse_run_config(data)
        with self.assertRaises(ConfigurationError):
            config.parse_run_config([1, 2])

    def test_invalid_types(self):
        for data in ({'epochs': 'x'},
                     {'levels': 2.5},
                     {'levels': True},
                     {'repetitions': '1234'},
                     {'repetitions': [1, 2, 'a', 4]},
                     {'repetitions': 4},
                     {'block_variant': 3},
                     {'augment': 'yes'},
                     {'lr0': '1e-3'},
                     {'dice_r': None},
                     {'data_dir': 5},
                     {'output_dir': None}):
            with self.assertRaises(ConfigurationError, msg=str(data)) as ctx:
                config.parse_run_config(data)
            self.assertIn(list(data)[0], str(ctx.exception))

    def test_integer_numbers(self):
        cfg = config.parse_run_config({'lr0': 1, 'dice_r': 2, 'data_dir': None})
        self.assertEqual(1, cfg.lr_schedule().lr0)
        self.assertEqual(2, cfg.dice_config().r)

    def test_load(self):
        with NamedTemporaryFile('w', suffix='.json') as f:
            json.dump({'epochs': 2, 'seed': 7}, f)
            f.flush()
            cfg = config.load_run_config(f.name)
            self.assertEqual(2, cfg.epochs)
            self.assertEqual(7, cfg.network_config().seed)

        with NamedTemporaryFile('w', suffix='.json') as f:
            f.write('{"epochs": ')
            f.flush()
            with self.assertRaises(ConfigurationError):
                config.load_run_config(f.name)

        with self.assertRaises(ConfigurationError):
            config.load_run_config('/nonexistent/run.json')

    def test_lr_schedule(self):
        schedule = config.parse_run_config({'lr0': 1e-3, 'lr_period': 2}).lr_schedule()
        self.assertEqual(1e-3, schedule.lr_at(1))
        self.assertEqual(5e-4, schedule.lr_at(2))

    def test_config_keys(self):
        keys = config.config_keys()
        self.assertIn('branch_divisor', keys)
        self.assertEqual(len(keys), len(set(keys)))


class ThreadCountTestCase(TestCase):
    def test_thread_count(self):
        with patch.dict(os.environ, {config.THREADS_ENV: '3'}):
            self.assertEqual(3, config.get_thread_count())

        env = dict(os.environ)
        env.pop(config.THREADS_ENV, None)
        with patch.dict(os.environ, env, clear=True):
            with patch('hinet.config.os.cpu_count') as cpu_count_mock:
                cpu_count_mock.return_value = 6
                self.assertEqual(6, config.get_thread_count())

    def test_invalid_thread_count(self):
        for value in ('0', '-2', 'many'):
            with patch.dict(os.environ, {config.THREADS_ENV: value}):
                with self.assertRaises(ConfigurationError):
                    config.get_thread_count()
