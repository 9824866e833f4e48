# -*- coding: utf-8 -*-
"""
Multi-label dice loss.

With ``num_d = sum_j P[j,d] T[j,d] + r`` and
``den_d = sum_j P[j,d] + sum_j T[j,d] + r`` the loss over the class set
``C`` (``D = len(C)``) is::

    loss = -(2 / D) * sum_{d in C} num_d / den_d

The factor 2 multiplies the class ratios, not the overlap term. The
conventional form ``-(1 / D) * sum (2 * overlap + r) / den_d`` is
available through ``DiceConfig.conventional``. Sums run over every voxel
of every batch item.
"""
from dataclasses import dataclass

import numpy as np

from .constants import LABEL_CODES
from .errors import ConfigurationError, ShapeError, IllegalArgumentError


@dataclass(frozen=True)
class DiceConfig(object):
    """
    :param float r: smoothing constant added to numerator and denominator
    :param tuple class_set: channel indices summed over, ``None`` for all
    :param bool conventional: use the conventional dice form
    """
    r: float = 1.0
    class_set: tuple = None
    conventional: bool = False

    def __post_init__(self):
        if not self.r > 0:
            raise ConfigurationError('Dice smoothing r must be positive, got %r' % (self.r,))
        if self.class_set is not None and len(self.class_set) == 0:
            raise ConfigurationError('Dice class set must not be empty')

    @classmethod
    def foreground(cls, num_classes=len(LABEL_CODES), r=1.0, conventional=False):
        """Class set without the background channel 0."""
        return cls(r=r, class_set=tuple(range(1, num_classes)), conventional=conventional)

    def classes(self, num_classes):
        classes = tuple(range(num_classes)) if self.class_set is None else tuple(self.class_set)
        if any(d < 0 or d >= num_classes for d in classes):
            raise ConfigurationError('Class set %s is out of range for %d classes' % (classes, num_classes))
        return classes


def _check(P, T):
    if P.ndim != 5 or P.shape != T.shape:
        raise ShapeError('Prediction shape %s does not match target shape %s' % (P.shape, T.shape))
    if not (np.isfinite(P).all() and np.isfinite(T).all()):
        raise IllegalArgumentError('Dice loss inputs must be finite')


def _terms(P, T, cfg):
    classes = list(cfg.classes(P.shape[1]))
    axes = (0, 2, 3, 4)
    overlap = (P * T).sum(axis=axes)[classes]
    den = (P.sum(axis=axes) + T.sum(axis=axes))[classes] + cfg.r
    if cfg.conventional:
        num = 2.0 * overlap + cfg.r
        scale = 1.0 / len(classes)
    else:
        num = overlap + cfg.r
        scale = 2.0 / len(classes)
    return classes, num, den, scale


def dice_loss(P, T, cfg=DiceConfig()):
    """
    :param numpy.ndarray P: softmax probabilities (n, D, z, y, x)
    :param numpy.ndarray T: one-hot target of the same shape
    :param cfg: loss configuration
    :type cfg: :py:class:`hinet.losses.DiceConfig`
    :returns: scalar loss
    :rtype: float
    :raises hinet.errors.ShapeError: on shape mismatch
    :raises hinet.errors.IllegalArgumentError: on non-finite input
    """
    _check(P, T)
    _, num, den, scale = _terms(P.astype(np.float64), T.astype(np.float64), cfg)
    return float(-scale * np.sum(num / den))


def dice_loss_grad(P, T, cfg=DiceConfig()):
    """Gradient of :py:func:`dice_loss` with respect to ``P``; zero outside the class set."""
    _check(P, T)
    classes, num, den, scale = _terms(P.astype(np.float64), T.astype(np.float64), cfg)
    dP = np.zeros(P.shape, dtype=np.float64)
    overlap_weight = 2.0 if cfg.conventional else 1.0
    for i, d in enumerate(classes):
        dP[:, d] = -scale * (overlap_weight * T[:, d] * den[i] - num[i]) / den[i] ** 2
    return dP.astype(P.dtype)
