# -*- coding: utf-8 -*-
import argparse
import logging
import os
from collections import OrderedDict
from pprint import pprint
import sys

import numpy as np

from .base import Report
from .bench import Benchmark
from .checkpoint import load_checkpoint
from .config import RunConfig, config_keys, load_run_config, THREADS_ENV
from .constants import EXIT_OK, EXIT_VERIFICATION_FAILED, EXIT_USAGE, EXIT_NUMERICAL
from .data import VolumeSample
from .errors import HINetError, NumericalError, ShapeError
from .gradcheck import GradientChecker
from .metrics import evaluate, mean_scores, format_table
from .network import check_input
from .train import Trainer, predict_labels
from .volumes import read_volume, write_volume, list_volumes

log = logging.getLogger(__name__)


def config_help():
    defaults = RunConfig()
    lines = ['configuration keys (JSON object, all optional):']
    for key in config_keys():
        lines.append('  %-18s default %s' % (key, getattr(defaults, key)))
    lines.append('')
    lines.append('%s caps the worker threads (default: CPU count).' % THREADS_ENV)
    return '\n'.join(lines)


def get_parser():
    parser = argparse.ArgumentParser(
        prog='hinet',
        description='Hyperdense inception 3D UNet for volumetric segmentation')
    parser.add_argument('--verbose', action='store_true', help='log every training step')

    subparsers = parser.add_subparsers()
    populate_train_arguments(subparsers)
    populate_predict_arguments(subparsers)
    populate_evaluate_arguments(subparsers)
    populate_gradcheck_arguments(subparsers)
    populate_bench_arguments(subparsers)

    return parser


def populate_train_arguments(subparsers):
    train_parser = subparsers.add_parser(
        'train', help='Train a network with dice loss and Adam',
        epilog=config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    train_parser.add_argument('--config', required=True, help='run configuration JSON file')
    train_parser.set_defaults(method=cmd_train)


def populate_predict_arguments(subparsers):
    predict_parser = subparsers.add_parser(
        'predict', help='Segment a volume with a trained checkpoint')
    predict_parser.add_argument('--ckpt', required=True, help='checkpoint file')
    predict_parser.add_argument('--in', dest='input', required=True, help='input .hvol volume')
    predict_parser.add_argument('--out', required=True, help='output .hvol label volume')
    predict_parser.set_defaults(method=cmd_predict)


def populate_evaluate_arguments(subparsers):
    evaluate_parser = subparsers.add_parser(
        'evaluate', help='DSC, sensitivity and specificity for WT, TC and ET')
    evaluate_parser.add_argument('--pred', required=True,
                                 help='predicted .hvol volume, or a directory of them')
    evaluate_parser.add_argument('--gt', required=True,
                                 help='ground truth .hvol volume, or a directory paired by file name')
    evaluate_parser.add_argument('--json', help='write the report to this file')
    evaluate_parser.set_defaults(method=cmd_evaluate)


def populate_gradcheck_arguments(subparsers):
    gradcheck_parser = subparsers.add_parser(
        'gradcheck', help='Compare every backward pass with finite differences')
    gradcheck_parser.add_argument('--seed', type=int, default=0)
    gradcheck_parser.set_defaults(method=cmd_gradcheck)


def populate_bench_arguments(subparsers):
    bench_parser = subparsers.add_parser(
        'bench', help='Full 3x3x3 convolution versus a factorized three-view stage')
    bench_parser.add_argument('--channels', type=int, default=8)
    bench_parser.add_argument('--extent', type=int, default=32)
    bench_parser.add_argument('--repeats', type=int, default=5)
    bench_parser.set_defaults(method=cmd_bench)


def cmd_train(opts):
    report = Trainer(load_run_config(opts.config)).run()
    pprint(report.data)
    return EXIT_OK


def cmd_predict(opts):
    net = load_checkpoint(opts.ckpt)
    sample = read_volume(opts.input)
    check_input(net, sample.image)
    labels = predict_labels(net, sample.image)
    empty = np.zeros((1, 0) + labels.shape, dtype=np.float32)
    write_volume(opts.out, VolumeSample(empty, labels))
    return EXIT_OK


def _volume_pairs(pred, gt):
    if os.path.isdir(pred) and os.path.isdir(gt):
        pairs = [(path, os.path.join(gt, os.path.basename(path))) for path in list_volumes(pred)]
        if not pairs:
            raise ShapeError('No .hvol volumes in %s' % (pred,))
        return pairs
    return [(pred, gt)]


def cmd_evaluate(opts):
    cases = OrderedDict()
    reports = []
    for pred_path, gt_path in _volume_pairs(opts.pred, opts.gt):
        pred = read_volume(pred_path)
        gt = read_volume(gt_path)
        if pred.extents != gt.extents:
            raise ShapeError('Prediction extents %s do not match ground truth extents %s'
                             % (pred.extents, gt.extents))
        report = evaluate(pred.labels, gt.labels)
        cases[os.path.basename(pred_path)] = report.to_dict()
        reports.append(report)
    means = mean_scores(reports)
    print(format_table(means))
    if opts.json:
        Report({'cases': cases, 'mean': means}).write(opts.json)
    return EXIT_OK


def cmd_gradcheck(opts):
    report = GradientChecker(seed=opts.seed).run()
    for name, result in report.data['components'].items():
        print('%-18s %.3e  %s' % (name, result['worst_error'], 'ok' if result['passed'] else 'FAILED'))
    if report.data['failures']:
        print('failed components: %s' % ', '.join(report.data['failures']))
        return EXIT_VERIFICATION_FAILED
    return EXIT_OK


def cmd_bench(opts):
    report = Benchmark(opts.channels, opts.extent, opts.repeats).run()
    pprint(report.data)
    return EXIT_OK if report.data['passed'] else EXIT_VERIFICATION_FAILED


def main(argv=None):
    parser = get_parser()
    opts = parser.parse_args(argv)
    if 'method' not in opts:
        parser.print_help()
        return EXIT_USAGE

    logging.basicConfig(stream=sys.stdout, level=logging.DEBUG if opts.verbose else logging.INFO)
    try:
        return opts.method(opts)
    except NumericalError as e:
        log.error('Training aborted: %s', e)
        return EXIT_NUMERICAL
    except (HINetError, IOError, OSError) as e:
        log.error('%s', e)
        return EXIT_USAGE
