# -*- coding: utf-8 -*-
from dataclasses import dataclass, field

import numpy as np

from .errors import ShapeError


@dataclass
class AdamState(object):
    """
    Optimizer state. ``m`` and ``v`` mirror the parameter mapping and are
    created at zero on the first step that sees a parameter.
    """
    lr: float = 3e-5
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(params, grads, state):
    """
    One bias-corrected Adam update, in place on ``params`` and ``state``.

    :param dict params: name -> array, updated in place
    :param dict grads: name -> gradient array of the same shape
    :param state: optimizer state
    :type state: :py:class:`hinet.optim.AdamState`
    :raises hinet.errors.ShapeError: if names or shapes differ
    """
    if set(params) != set(grads):
        raise ShapeError('Gradient names do not match parameter names')
    for name, p in params.items():
        if grads[name].shape != p.shape:
            raise ShapeError('Gradient %s has shape %s, expected %s' % (name, grads[name].shape, p.shape))

    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for name, p in params.items():
        g = grads[name]
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m = state.m[name] = state.beta1 * state.m[name] + (1.0 - state.beta1) * g
        v = state.v[name] = state.beta2 * state.v[name] + (1.0 - state.beta2) * (g * g)
        m_hat = m / bc1
        v_hat = v / bc2
        p -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)
    return params, state


@dataclass(frozen=True)
class LrSchedule(object):
    """Step decay: ``lr0 * decay ** floor(epoch / period)``."""
    lr0: float = 3e-5
    decay: float = 0.5
    period: int = 30

    def lr_at(self, epoch):
        return self.lr0 * self.decay ** (epoch // self.period)


def lr_at(epoch, schedule=LrSchedule()):
    return schedule.lr_at(epoch)
