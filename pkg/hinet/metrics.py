# -*- coding: utf-8 -*-
"""
Overlap and detection-rate metrics per tumour region.

Degenerate denominators (both masks empty for DSC, no positives for
sensitivity, no negatives for specificity) score 1.0 and are listed in
the region's ``flags``.
"""
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .constants import Region
from .data import region_binarize
from .errors import IllegalArgumentError, ShapeError

REGIONS = tuple(region for region, _ in Region)
SCORES = ('dsc', 'sensitivity', 'specificity')
SCORE_TITLES = {'dsc': 'DSC', 'sensitivity': 'Sensitivity', 'specificity': 'Specificity'}


def _check_masks(pred, gt):
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise ShapeError('Prediction mask shape %s does not match ground truth shape %s' % (pred.shape, gt.shape))
    for mask in (pred, gt):
        if not np.isin(mask, (0, 1)).all():
            raise IllegalArgumentError('Masks must be binary, got values %s' % (np.unique(mask).tolist(),))
    return pred.astype(bool), gt.astype(bool)


def confusion_counts(pred, gt):
    """:returns: ``(tp, fp, tn, fn)`` as Python ints"""
    pred, gt = _check_masks(pred, gt)
    tp = int(np.count_nonzero(pred & gt))
    fp = int(np.count_nonzero(pred & ~gt))
    fn = int(np.count_nonzero(~pred & gt))
    tn = int(pred.size - tp - fp - fn)
    return tp, fp, tn, fn


def _ratio(num, den):
    return 1.0 if den == 0 else num / float(den)


def dsc(pred_mask, gt_mask):
    """``2|A & B| / (|A| + |B|)``; 1.0 when both masks are empty."""
    tp, fp, _, fn = confusion_counts(pred_mask, gt_mask)
    return _ratio(2 * tp, 2 * tp + fp + fn)


def sensitivity(pred_mask, gt_mask):
    tp, _, _, fn = confusion_counts(pred_mask, gt_mask)
    return _ratio(tp, tp + fn)


def specificity(pred_mask, gt_mask):
    _, fp, tn, _ = confusion_counts(pred_mask, gt_mask)
    return _ratio(tn, tn + fp)


@dataclass
class RegionScores(object):
    tp: int
    fp: int
    tn: int
    fn: int
    flags: list = field(default_factory=list)

    @classmethod
    def from_masks(cls, pred_mask, gt_mask):
        scores = cls(*confusion_counts(pred_mask, gt_mask))
        if scores.tp + scores.fp + scores.fn == 0:
            scores.flags.append('dsc_empty')
        if scores.tp + scores.fn == 0:
            scores.flags.append('sensitivity_empty')
        if scores.tn + scores.fp == 0:
            scores.flags.append('specificity_empty')
        return scores

    @property
    def dsc(self):
        return _ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn)

    @property
    def sensitivity(self):
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def specificity(self):
        return _ratio(self.tn, self.tn + self.fp)

    def to_dict(self):
        return {'dsc': self.dsc, 'sensitivity': self.sensitivity, 'specificity': self.specificity,
                'tp': self.tp, 'fp': self.fp, 'tn': self.tn, 'fn': self.fn, 'flags': list(self.flags)}


@dataclass
class MetricsReport(object):
    regions: OrderedDict
    voxels: int

    def scores(self):
        return OrderedDict((region, OrderedDict((score, getattr(values, score)) for score in SCORES))
                           for region, values in self.regions.items())

    def mean_foreground_dsc(self):
        return float(np.mean([self.regions[r].dsc for r in REGIONS]))

    def to_dict(self):
        return {'voxels': self.voxels,
                'regions': OrderedDict((r, s.to_dict()) for r, s in self.regions.items())}


def evaluate(pred_labels, gt_labels):
    """
    Score a predicted label volume against ground truth for WT, TC and ET.

    :rtype: :py:class:`hinet.metrics.MetricsReport`
    """
    if np.shape(pred_labels) != np.shape(gt_labels):
        raise ShapeError('Prediction extents %s do not match ground truth extents %s'
                         % (np.shape(pred_labels), np.shape(gt_labels)))
    regions = OrderedDict()
    for region in REGIONS:
        regions[region] = RegionScores.from_masks(region_binarize(pred_labels, region),
                                                  region_binarize(gt_labels, region))
    return MetricsReport(regions, int(np.size(gt_labels)))


def mean_scores(reports):
    """Mean of each score per region over several cases."""
    means = OrderedDict()
    for region in REGIONS:
        means[region] = OrderedDict(
            (score, float(np.mean([getattr(r.regions[region], score) for r in reports]))) for score in SCORES)
    return means


def format_table(scores):
    """
    Render ``{region: {score: value}}`` in percent with three decimals.
    """
    lines = ['%-12s' % 'Metric' + ''.join('%10s' % region for region in scores)]
    for score in SCORES:
        lines.append('%-12s' % SCORE_TITLES[score]
                     + ''.join('%10.3f' % (100.0 * values[score]) for values in scores.values()))
    return '\n'.join(lines)
