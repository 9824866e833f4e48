# -*- coding: utf-8 -*-
"""
Finite-difference verification of every backward pass.

Each component builds a tiny random float64 problem, takes the scalar
objective ``sum(dy * f(inputs))`` (``sum(probs ** 2)`` for the network,
the loss itself for dice) and compares analytic gradients with central
differences. The error of one tensor is the worst entry-wise
``|analytic - numeric| / (|analytic| + |numeric|)`` with a floored
denominator, so entries near zero are held to an absolute bound.
"""
from collections import OrderedDict

import numpy as np

from . import blocks
from .base import BaseComponent, Report
from .constants import HYPERDENSE, BASELINE, CHECK64
from .losses import DiceConfig, dice_loss, dice_loss_grad
from .network import NetworkConfig, build_hinet, forward, backward
from .tensor import (ConvWeights, conv3d, conv3d_grad, relu, relu_grad, upsample_nearest,
                     upsample_nearest_grad, concat_channels, split_channels, eltwise_add,
                     eltwise_add_grad, softmax_channels, softmax_channels_grad)

STEP = 1e-5
PRIMITIVE_TOLERANCE = 1e-6
END_TO_END_TOLERANCE = 1e-4
# sampled entries per parameter tensor of the end-to-end check
NETWORK_SAMPLES = 6
# denominator floor of the entry-wise relative error
ERROR_FLOOR = 1e-2


def relative_error(analytic, numeric, floor=ERROR_FLOOR):
    """
    Worst entry-wise error ``|a - n| / max(|a| + |n|, floor)``. The floor
    turns the check absolute for entries near zero.
    """
    analytic = np.asarray(analytic, dtype=np.float64).reshape(-1)
    numeric = np.asarray(numeric, dtype=np.float64).reshape(-1)
    if analytic.size == 0:
        return 0.0
    denom = np.maximum(np.abs(analytic) + np.abs(numeric), floor)
    return float(np.max(np.abs(analytic - numeric) / denom))


def numeric_gradient(objective, array, indices=None, step=STEP):
    """
    Central differences of ``objective()`` with respect to the entries of
    ``array`` (perturbed in place and restored).

    :param indices: flat indices to check, all entries when ``None``
    """
    flat = array.reshape(-1)
    indices = range(flat.size) if indices is None else indices
    grad = []
    for i in indices:
        original = flat[i]
        flat[i] = original + step
        plus = objective()
        flat[i] = original - step
        minus = objective()
        flat[i] = original
        grad.append((plus - minus) / (2 * step))
    return np.array(grad)


def _compare(objective, arrays, analytic):
    errors = OrderedDict()
    for name, array in arrays.items():
        errors[name] = relative_error(analytic[name].reshape(-1), numeric_gradient(objective, array))
    return errors


def _weights(rng, c_out, c_in, kernel, stride=1):
    return ConvWeights(rng.normal(0, 0.5, (c_out, c_in) + tuple(kernel)), rng.normal(0, 0.1, c_out), stride)


def _conv_arrays(prefix, k):
    return OrderedDict([(prefix + '.w', k.w), (prefix + '.b', k.b)])


def _conv_grads(prefix, g):
    return OrderedDict([(prefix + '.w', g.w), (prefix + '.b', g.b)])


def _linear(fn, dy):
    return lambda: float(np.sum(dy * fn()))


def check_conv3d(rng, stride=1):
    x = rng.normal(size=(1, 2, 3, 3, 3) if stride == 1 else (1, 2, 4, 4, 4))
    k = _weights(rng, 3, 2, (3, 3, 3), stride)
    dy = rng.normal(size=conv3d(x, k).shape)
    dx, dw, db = conv3d_grad(x, k, dy)
    arrays = OrderedDict([('x', x), ('w', k.w), ('b', k.b)])
    return _compare(_linear(lambda: conv3d(x, k), dy), arrays, {'x': dx, 'w': dw, 'b': db})


def check_relu(rng):
    x = rng.choice([-1.0, 1.0], size=(1, 2, 3, 3, 3)) * rng.uniform(1e-2, 1.0, size=(1, 2, 3, 3, 3))
    dy = rng.normal(size=x.shape)
    return _compare(_linear(lambda: relu(x), dy), {'x': x}, {'x': relu_grad(x, dy)})


def check_upsample_nearest(rng):
    x = rng.normal(size=(1, 1, 2, 2, 2))
    dy = rng.normal(size=(1, 1, 4, 4, 4))
    return _compare(_linear(lambda: upsample_nearest(x, 2), dy), {'x': x}, {'x': upsample_nearest_grad(dy, 2)})


def check_concat_channels(rng):
    a = rng.normal(size=(1, 2, 2, 2, 2))
    b = rng.normal(size=(1, 3, 2, 2, 2))
    dy = rng.normal(size=(1, 5, 2, 2, 2))
    da, db = split_channels(dy, [2, 3])
    return _compare(_linear(lambda: concat_channels([a, b]), dy),
                    OrderedDict([('a', a), ('b', b)]), {'a': da, 'b': db})


def check_eltwise_add(rng):
    a = rng.normal(size=(1, 2, 2, 2, 2))
    b = rng.normal(size=(1, 2, 2, 2, 2))
    dy = rng.normal(size=a.shape)
    da, db = eltwise_add_grad(dy)
    return _compare(_linear(lambda: eltwise_add(a, b), dy),
                    OrderedDict([('a', a), ('b', b)]), {'a': da, 'b': db})


def check_softmax_channels(rng):
    x = rng.normal(size=(1, 4, 2, 2, 2))
    dy = rng.normal(size=x.shape)
    probs = softmax_channels(x)
    return _compare(_linear(lambda: softmax_channels(x), dy), {'x': x}, {'x': softmax_channels_grad(probs, dy)})


def check_view_conv(rng):
    errors = OrderedDict()
    for view in blocks.VIEWS:
        x = rng.normal(size=(1, 2, 3, 3, 3))
        k = _weights(rng, 2, 2, blocks.view_kernel(view))
        out, pre = blocks.view_conv_forward(x, view, k)
        dy = rng.normal(size=out.shape)
        dx, g = blocks.view_conv_backward(x, k, pre, dy)
        arrays = OrderedDict([('x', x)] + list(_conv_arrays('k', k).items()))
        analytic = OrderedDict([('x', dx)] + list(_conv_grads('k', g).items()))
        for name, err in _compare(_linear(lambda: blocks.view_conv(x, view, k), dy), arrays, analytic).items():
            errors['%s.%s' % (view, name)] = err
    return errors


def _random_block(rng, variant, c_in=2, c_b=1):
    p = blocks.BlockParams.zeros(variant, c_in, c_b, dtype=np.float64)
    for _, k in p.named_weights():
        k.w[...] = rng.normal(0, 0.5, k.w.shape)
        k.b[...] = rng.normal(0, 0.1, k.b.shape)
    return p


def check_block(rng, variant):
    p = _random_block(rng, variant)
    x = rng.normal(size=(1, 2, 3, 3, 3))
    out, cache = blocks.block_forward(x, p)
    dy = rng.normal(size=out.shape)
    dx, grads = blocks.block_backward(p, cache, dy)
    arrays = OrderedDict([('x', x)])
    analytic = OrderedDict([('x', dx)])
    for name, k in p.named_weights():
        arrays.update(_conv_arrays(name, k))
        analytic.update(_conv_grads(name, grads[name]))
    return _compare(_linear(lambda: blocks.block_forward(x, p)[0], dy), arrays, analytic)


def check_down_transition(rng):
    x = rng.normal(size=(1, 1, 4, 4, 4))
    k = _weights(rng, 2, 1, (3, 3, 3), stride=2)
    out, pre = blocks.down_transition_forward(x, k)
    dy = rng.normal(size=out.shape)
    dx, g = blocks.down_transition_backward(x, k, pre, dy)
    arrays = OrderedDict([('x', x)] + list(_conv_arrays('k', k).items()))
    analytic = OrderedDict([('x', dx)] + list(_conv_grads('k', g).items()))
    return _compare(_linear(lambda: blocks.down_transition(x, k), dy), arrays, analytic)


def check_up_transition(rng):
    x = rng.normal(size=(1, 2, 2, 2, 2))
    skip = rng.normal(size=(1, 1, 4, 4, 4))
    k = _weights(rng, 1, 2, (1, 1, 1))
    out, pre = blocks.up_transition_forward(x, skip, k)
    dy = rng.normal(size=out.shape)
    dx, dskip, g = blocks.up_transition_backward(x, k, pre, dy)
    arrays = OrderedDict([('x', x), ('skip', skip)] + list(_conv_arrays('k', k).items()))
    analytic = OrderedDict([('x', dx), ('skip', dskip)] + list(_conv_grads('k', g).items()))
    return _compare(_linear(lambda: blocks.up_transition(x, skip, k), dy), arrays, analytic)


def check_dice_loss(rng):
    probs = softmax_channels(rng.normal(size=(1, 2, 2, 2, 2)))
    labels = rng.integers(0, 2, size=(2, 2, 2))
    target = np.stack([labels == 0, labels == 1]).astype(np.float64)[np.newaxis]
    errors = OrderedDict()
    for cfg in (DiceConfig(r=1.0), DiceConfig(r=0.5, conventional=True), DiceConfig(class_set=(1,))):
        name = 'P[r=%g%s%s]' % (cfg.r, ',conventional' if cfg.conventional else '',
                                ',classes=%s' % (cfg.class_set,) if cfg.class_set else '')
        analytic = dice_loss_grad(probs, target, cfg)
        errors[name] = relative_error(analytic.reshape(-1),
                                      numeric_gradient(lambda: dice_loss(probs, target, cfg), probs))
    return errors


def micro_network(seed=0, variant=HYPERDENSE):
    cfg = NetworkConfig(levels=2, base_filters=2, repetitions=(1, 2), block_variant=variant,
                        num_classes=3, in_channels=2, seed=seed)
    return build_hinet(cfg, CHECK64)


def check_network(rng, variant=HYPERDENSE):
    net = micro_network(int(rng.integers(0, 2 ** 31)), variant)
    # biases and block projections start at zero; move them off so every path is exercised
    for name, k in net.registry.items():
        k.b[...] = rng.normal(0, 0.1, k.b.shape)
        if name.endswith('.proj'):
            k.w[...] = rng.normal(0, 0.5, k.w.shape)
    x = rng.normal(size=(1, 2, 4, 4, 4))
    probs, cache = forward(net, x)
    grads = backward(net, cache, 2 * probs)

    def objective():
        return float(np.sum(forward(net, x)[0] ** 2))

    errors = OrderedDict()
    for name, array in net.parameters().items():
        indices = rng.choice(array.size, size=min(NETWORK_SAMPLES, array.size), replace=False)
        numeric = numeric_gradient(objective, array, indices)
        errors[name] = relative_error(grads[name].reshape(-1)[indices], numeric)
    return errors


# name -> (check, tolerance)
COMPONENTS = OrderedDict([
    ('conv3d', (check_conv3d, PRIMITIVE_TOLERANCE)),
    ('conv3d_stride2', (lambda rng: check_conv3d(rng, stride=2), PRIMITIVE_TOLERANCE)),
    ('relu', (check_relu, PRIMITIVE_TOLERANCE)),
    ('upsample_nearest', (check_upsample_nearest, PRIMITIVE_TOLERANCE)),
    ('concat_channels', (check_concat_channels, PRIMITIVE_TOLERANCE)),
    ('eltwise_add', (check_eltwise_add, PRIMITIVE_TOLERANCE)),
    ('softmax_channels', (check_softmax_channels, PRIMITIVE_TOLERANCE)),
    ('view_conv', (check_view_conv, PRIMITIVE_TOLERANCE)),
    ('hyperdense_block', (lambda rng: check_block(rng, HYPERDENSE), PRIMITIVE_TOLERANCE)),
    ('baseline_block', (lambda rng: check_block(rng, BASELINE), PRIMITIVE_TOLERANCE)),
    ('down_transition', (check_down_transition, PRIMITIVE_TOLERANCE)),
    ('up_transition', (check_up_transition, PRIMITIVE_TOLERANCE)),
    ('dice_loss', (check_dice_loss, END_TO_END_TOLERANCE)),
    ('network', (check_network, END_TO_END_TOLERANCE)),
])


class GradientChecker(BaseComponent):
    """
    Runs the finite-difference suite.

    :param int seed: seed of the random problems
    :param components: names to run, all when ``None``
    """
    def __init__(self, seed=0, components=None):
        self.seed = seed
        self.components = list(COMPONENTS) if components is None else list(components)

    def run(self):
        """
        :returns: report with ``components`` (worst error, tolerance and
            verdict per component) and ``failures``
        :rtype: :py:class:`hinet.base.Report`
        """
        results = OrderedDict()
        failures = []
        for i, name in enumerate(self.components):
            check, tolerance = COMPONENTS[name]
            errors = check(np.random.default_rng((self.seed, i)))
            worst_tensor = max(errors, key=errors.get)
            worst = errors[worst_tensor]
            passed = bool(worst < tolerance)
            results[name] = {'worst_error': worst, 'worst_tensor': worst_tensor,
                             'tolerance': tolerance, 'passed': passed}
            if passed:
                self.logger.info('%-18s worst relative error %.3e (%s)', name, worst, worst_tensor)
            else:
                failures.append(name)
                self.logger.warning('%-18s worst relative error %.3e (%s) exceeds %.0e',
                                    name, worst, worst_tensor, tolerance)
        return Report({'components': results, 'failures': failures, 'passed': not failures})
