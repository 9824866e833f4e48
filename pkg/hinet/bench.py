# -*- coding: utf-8 -*-
"""
Full 3x3x3 convolution versus one factorised three-view stage at equal
input width: closed-form parameter and multiply-accumulate counts plus
median wall-clock time. Both sides are timed with their ReLU.
"""
import time

import numpy as np

from . import blocks
from .constants import ViewAxis
from .base import BaseComponent, Report
from .errors import IllegalArgumentError
from .network import conv_macs, full_conv_count, factorized_stage_count
from .tensor import ConvWeights, TRAIN_DTYPE, conv3d, relu


def _median_seconds(fn, repeats):
    fn()
    timings = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        timings.append(time.perf_counter() - start)
    return float(np.median(timings))


class Benchmark(BaseComponent):
    """
    :param int channels: input and full-convolution output width ``c``;
        each view branch produces ``max(1, c // 2)`` channels
    :param int extent: cubic spatial extent of the input
    :param int repeats: timed runs per variant
    """
    def __init__(self, channels, extent, repeats, seed=0):
        for name, value in (('channels', channels), ('extent', extent), ('repeats', repeats)):
            if value < 1:
                raise IllegalArgumentError('%s must be positive, got %r' % (name, value))
        self.channels = channels
        self.extent = extent
        self.repeats = repeats
        self.seed = seed

    def counts(self):
        c = self.channels
        c_b = max(1, c // 2)
        voxels = self.extent ** 3
        return {
            'params_full': full_conv_count(c, c),
            'params_factorized': factorized_stage_count(c, c_b),
            'macs_full': conv_macs(c, c, (3, 3, 3), voxels),
            'macs_factorized': sum(conv_macs(c, c_b, kernel, voxels) for _, kernel in ViewAxis),
        }

    def run(self):
        c = self.channels
        c_b = max(1, c // 2)
        rng = np.random.default_rng(self.seed)
        x = rng.normal(size=(1, c, self.extent, self.extent, self.extent)).astype(TRAIN_DTYPE)
        full = ConvWeights(rng.normal(0, 0.1, (c, c, 3, 3, 3)).astype(TRAIN_DTYPE), np.zeros(c, TRAIN_DTYPE))
        stage = [(view, ConvWeights(rng.normal(0, 0.1, (c_b, c) + kernel).astype(TRAIN_DTYPE),
                                    np.zeros(c_b, TRAIN_DTYPE)))
                 for view, kernel in ViewAxis]

        data = self.counts()
        data.update({'channels': c, 'branch_width': c_b, 'extent': self.extent, 'repeats': self.repeats})
        data['seconds_full'] = _median_seconds(lambda: relu(conv3d(x, full)), self.repeats)
        data['seconds_factorized'] = _median_seconds(
            lambda: [blocks.view_conv(x, view, k) for view, k in stage], self.repeats)
        data['params_ratio'] = data['params_factorized'] / float(data['params_full'])
        data['macs_ratio'] = data['macs_factorized'] / float(data['macs_full'])
        data['passed'] = (data['params_factorized'] < data['params_full']
                          and data['macs_factorized'] < data['macs_full'])
        self.logger.info('c=%d extent=%d: params %d vs %d, MACs %d vs %d, median %.4fs vs %.4fs',
                         c, self.extent, data['params_full'], data['params_factorized'],
                         data['macs_full'], data['macs_factorized'],
                         data['seconds_full'], data['seconds_factorized'])
        return Report(data)
