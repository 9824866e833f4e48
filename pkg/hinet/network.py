# -*- coding: utf-8 -*-
"""
The HI-Net encoder-decoder.

Wiring for ``levels`` = L and widths ``w_l = base_filters * 2**l``:

* stem: 3x3x3 convolution + ReLU, ``in_channels -> w_0``
* encoder level l: ``repetitions[l]`` blocks at width ``w_l``, then a
  stride-2 down transition to ``w_{l+1}`` (none after the deepest level)
* decoder level l (from L-2 down to 0): up transition from the coarse
  path to ``w_l`` channels concatenated with the encoder skip, then one
  block at width ``2 * w_l``. The deepest up transition halves the
  channels (``w_{L-1} -> w_{L-2}``); every later one reads the
  ``2 * w_{l+1}`` channels of the previous decoder block and so reduces
  them four-fold to ``w_l``
* head: 1x1x1 convolution to ``num_classes`` and a channel softmax

The fusing projection of every block starts at zero, so a freshly built
block is the identity on its input.

Parameter names are path-like (``enc.L2.block1.stage2.sagittal.w``) and
form the checkpoint contract.
"""
from collections import OrderedDict
from dataclasses import dataclass, field, asdict

import numpy as np

from . import blocks
from .base import BaseComponent
from .constants import BlockVariant, HYPERDENSE, TRAIN32, Mode
from .errors import ConfigurationError, ShapeError, StaleCacheError, IllegalArgumentError
from .optim import adam_step
from .rng import SplitMix64
from .tensor import (ConvWeights, dtype_for, check_tensor5, conv3d, conv3d_grad, relu,
                     relu_grad, softmax_channels, softmax_channels_grad)


def _is_int(value):
    return isinstance(value, int) and not isinstance(value, bool)


@dataclass
class NetworkConfig(object):
    levels: int = 4
    base_filters: int = 8
    repetitions: tuple = (1, 2, 3, 4)
    block_variant: str = HYPERDENSE
    num_classes: int = 4
    in_channels: int = 4
    seed: int = 0
    branch_divisor: int = 2
    include_input: bool = False

    def validate(self):
        for name in ('levels', 'base_filters', 'num_classes', 'in_channels', 'branch_divisor'):
            value = getattr(self, name)
            if not _is_int(value) or value < 1:
                raise ConfigurationError('%s must be a positive integer, got %r' % (name, value))
        if not _is_int(self.seed):
            raise ConfigurationError('seed must be an integer, got %r' % (self.seed,))
        if not isinstance(self.include_input, bool):
            raise ConfigurationError('include_input must be a boolean, got %r' % (self.include_input,))
        if not isinstance(self.repetitions, (list, tuple)) or not all(_is_int(r) for r in self.repetitions):
            raise ConfigurationError('repetitions must be a list of integers, got %r' % (self.repetitions,))
        if not isinstance(self.block_variant, str):
            raise ConfigurationError('Block variant %r is illegal' % (self.block_variant,))
        reps = tuple(self.repetitions)
        if len(reps) != self.levels:
            raise ConfigurationError('repetitions %s must have one entry per level (levels=%d)'
                                     % (list(reps), self.levels))
        if min(reps) < 1:
            raise ConfigurationError('repetitions must be positive, got %s' % (list(reps),))
        if max(reps) != reps[-1]:
            raise ConfigurationError('The deepest level must hold the maximum repetition, got %s' % (list(reps),))
        if self.block_variant not in dict(BlockVariant):
            raise ConfigurationError('Block variant %s is illegal' % (self.block_variant,))
        self.repetitions = reps
        return self

    def width(self, level):
        return self.base_filters * 2 ** level

    def branch_width(self, width):
        return max(1, width // self.branch_divisor)

    @property
    def divisor(self):
        return 2 ** (self.levels - 1)

    def to_dict(self):
        data = asdict(self)
        data['repetitions'] = list(self.repetitions)
        return data


def _fan_in_init(rng, c_out, c_in, kernel, stride, dtype):
    shape = (c_out, c_in) + tuple(kernel)
    bound = np.sqrt(6.0 / (c_in * int(np.prod(kernel))))
    return ConvWeights(rng.uniform(-bound, bound, shape).astype(dtype), np.zeros(c_out, dtype=dtype), stride)


class Network(BaseComponent):
    """
    Parameter registry plus wiring of one HI-Net.

    ``registry`` maps layer names to :py:class:`hinet.tensor.ConvWeights`
    in initialisation order; ``blocks`` maps block prefixes to
    :py:class:`hinet.blocks.BlockParams` sharing the same weight objects.
    """
    def __init__(self, cfg, mode=TRAIN32):
        self.cfg = cfg.validate()
        if mode not in dict(Mode):
            raise IllegalArgumentError('Mode %s is illegal' % (mode,))
        self.mode = mode
        self.dtype = dtype_for(mode)
        self.generation = 0
        self.registry = OrderedDict()
        self.blocks = OrderedDict()
        self._init_parameters()
        self.logger.debug('Built %s network with %d parameters', cfg.block_variant, self.count_params())

    def _add_conv(self, rng, name, c_out, c_in, kernel, stride=1):
        self.registry[name] = _fan_in_init(rng, c_out, c_in, kernel, stride, self.dtype)

    def _add_block(self, rng, prefix, width):
        cfg = self.cfg
        p = blocks.BlockParams.zeros(cfg.block_variant, width, cfg.branch_width(width),
                                     cfg.include_input, self.dtype)
        for local, k in p.named_weights():
            stage, _, view = local.partition('.')
            if stage == 'proj':
                # residual branch starts silent
                self.registry['%s.%s' % (prefix, local)] = k
                continue
            weights = _fan_in_init(rng, k.c_out, k.c_in, k.kernel, k.stride, self.dtype)
            self.registry['%s.%s' % (prefix, local)] = weights
            getattr(p, stage)[view] = weights
        self.blocks[prefix] = p.validate()

    def _init_parameters(self):
        cfg = self.cfg
        rng = SplitMix64(cfg.seed)
        levels = cfg.levels
        self._add_conv(rng, 'stem', cfg.width(0), cfg.in_channels, (3, 3, 3))
        for level in range(levels):
            for i in range(cfg.repetitions[level]):
                self._add_block(rng, 'enc.L%d.block%d' % (level, i + 1), cfg.width(level))
            if level < levels - 1:
                self._add_conv(rng, 'enc.L%d.down' % level, cfg.width(level + 1), cfg.width(level),
                               (3, 3, 3), stride=2)
        coarse = cfg.width(levels - 1)
        for level in reversed(range(levels - 1)):
            skip = cfg.width(level)
            self._add_conv(rng, 'dec.L%d.up' % level, skip, coarse, (1, 1, 1))
            self._add_block(rng, 'dec.L%d.block1' % level, 2 * skip)
            coarse = 2 * skip
        self._add_conv(rng, 'head', cfg.num_classes, coarse, (1, 1, 1))
        self._check_symmetry()

    def _check_symmetry(self):
        for level in range(self.cfg.levels - 1):
            up = self.registry['dec.L%d.up' % level]
            block = self.blocks['dec.L%d.block1' % level]
            skip_width = self.cfg.width(level)
            if up.c_out != skip_width or block.c_in != up.c_out + skip_width:
                raise ConfigurationError('Decoder level %d does not match its encoder skip' % level)

    def parameters(self):
        """Flat ``name.w`` / ``name.b`` view over the registry arrays."""
        params = OrderedDict()
        for name, k in self.registry.items():
            params[name + '.w'] = k.w
            params[name + '.b'] = k.b
        return params

    def count_params(self):
        return count_params(self)

    def astype(self, mode):
        """Copy of the network with parameters cast to ``mode``'s dtype."""
        other = Network(self.cfg, mode)
        other.load_parameters(self.parameters())
        return other

    def load_parameters(self, arrays):
        """
        Copy ``arrays`` (a ``name.w`` / ``name.b`` mapping) into the registry.

        :raises hinet.errors.ShapeError: on missing, extra or misshaped entries
        """
        params = self.parameters()
        if set(arrays) != set(params):
            missing = sorted(set(params) - set(arrays))
            extra = sorted(set(arrays) - set(params))
            raise ShapeError('Parameter names do not match the network: missing %s, unexpected %s'
                             % (missing, extra))
        for name, target in params.items():
            source = np.asarray(arrays[name])
            if source.shape != target.shape:
                raise ShapeError('Parameter %s has shape %s, expected %s' % (name, source.shape, target.shape))
            target[...] = source
        self.generation += 1

    def update(self, grads, state):
        """Apply one Adam step in place; invalidates outstanding caches."""
        adam_step(self.parameters(), grads, state)
        self.generation += 1


def build_hinet(cfg, mode=TRAIN32):
    """
    Build and initialise a network.

    Weights are drawn uniformly in ``+-sqrt(6 / fan_in)`` from a
    SplitMix64 stream seeded with ``cfg.seed``, in registry order. Block
    projections and all biases start at zero.

    :param cfg: network configuration
    :type cfg: :py:class:`hinet.network.NetworkConfig`
    :raises hinet.errors.ConfigurationError: if the configuration is invalid
    """
    return Network(cfg, mode)


@dataclass
class ForwardCache(object):
    network: Network
    generation: int
    steps: list = field(default_factory=list)
    probs: np.ndarray = None


def check_input(net, x):
    check_tensor5(x, 'network input')
    cfg = net.cfg
    if x.shape[1] != cfg.in_channels:
        raise ShapeError('Input shape %s must have %d channels' % (x.shape, cfg.in_channels))
    if any(e % cfg.divisor for e in x.shape[2:]) or min(x.shape[2:]) < 1:
        raise ShapeError('Input spatial extents %s must be divisible by %d' % (x.shape[2:], cfg.divisor))


def forward(net, x):
    """
    :returns: ``(probs, cache)``; ``probs`` has shape (n, num_classes, z, y, x)
    :raises hinet.errors.ShapeError: on channel mismatch or spatial extents
        not divisible by ``2**(levels-1)``
    """
    check_input(net, x)
    cfg = net.cfg
    cache = ForwardCache(net, net.generation)
    h = np.ascontiguousarray(x, dtype=net.dtype)

    stem = net.registry['stem']
    pre = conv3d(h, stem)
    cache.steps.append(('stem', 'stem', h, pre))
    h = relu(pre)

    skips = {}
    for level in range(cfg.levels):
        for i in range(cfg.repetitions[level]):
            prefix = 'enc.L%d.block%d' % (level, i + 1)
            h, block_cache = blocks.block_forward(h, net.blocks[prefix])
            cache.steps.append(('block', prefix, block_cache, None))
        if level < cfg.levels - 1:
            skips[level] = h
            name = 'enc.L%d.down' % level
            out, pre = blocks.down_transition_forward(h, net.registry[name])
            cache.steps.append(('down', name, h, pre))
            h = out

    for level in reversed(range(cfg.levels - 1)):
        name = 'dec.L%d.up' % level
        out, pre = blocks.up_transition_forward(h, skips[level], net.registry[name])
        cache.steps.append(('up', name, h, pre))
        prefix = 'dec.L%d.block1' % level
        h, block_cache = blocks.block_forward(out, net.blocks[prefix])
        cache.steps.append(('block', prefix, block_cache, None))

    logits = conv3d(h, net.registry['head'])
    cache.steps.append(('head', 'head', h, None))
    cache.probs = softmax_channels(logits)
    return cache.probs, cache


def backward(net, cache, dprobs):
    """
    Reverse pass through a cached forward.

    :returns: ``OrderedDict`` of ``name.w`` / ``name.b`` gradients in
        registry order
    :raises hinet.errors.StaleCacheError: if the cache belongs to another
        network or predates a parameter update
    """
    if cache.network is not net or cache.generation != net.generation:
        raise StaleCacheError('Forward cache does not match the current network parameters')
    if dprobs.shape != cache.probs.shape:
        raise ShapeError('Cotangent shape %s does not match output shape %s' % (dprobs.shape, cache.probs.shape))

    grads = {}
    dh = softmax_channels_grad(cache.probs, dprobs)
    dskips = {}
    for kind, name, data, pre in reversed(cache.steps):
        if kind == 'head':
            dh, dw, db = conv3d_grad(data, net.registry[name], dh)
            grads[name] = ConvWeights(dw, db)
        elif kind == 'block':
            dh, block_grads = blocks.block_backward(net.blocks[name], data, dh)
            for local, g in block_grads.items():
                grads['%s.%s' % (name, local)] = g
        elif kind == 'up':
            level = int(name.split('.')[1][1:])
            dh, dskips[level], grads[name] = blocks.up_transition_backward(data, net.registry[name], pre, dh)
        elif kind == 'down':
            level = int(name.split('.')[1][1:])
            dh, grads[name] = blocks.down_transition_backward(data, net.registry[name], pre, dh)
            dh = dh + dskips.pop(level)
        elif kind == 'stem':
            _, dw, db = conv3d_grad(data, net.registry[name], relu_grad(pre, dh))
            grads[name] = ConvWeights(dw, db)

    flat = OrderedDict()
    for name in net.registry:
        flat[name + '.w'] = grads[name].w
        flat[name + '.b'] = grads[name].b
    return flat


def count_params(net):
    return sum(k.size for k in net.registry.values())


def conv_param_count(c_in, c_out, kernel):
    return c_out * c_in * int(np.prod(kernel)) + c_out


def conv_macs(c_in, c_out, kernel, voxels):
    """Multiply-accumulates of a convolution producing ``voxels`` outputs per channel."""
    return c_out * c_in * int(np.prod(kernel)) * voxels


def full_conv_count(c_in, c_out):
    return conv_param_count(c_in, c_out, (3, 3, 3))


def factorized_stage_count(c_in, c_b):
    """Three view branches ``c_in -> c_b`` with 9-tap planar kernels."""
    return 3 * (9 * c_in * c_b + c_b)


def block_param_count(width, c_b, variant, include_input=False):
    stage2_in = 3 * c_b if variant == HYPERDENSE else c_b
    if include_input:
        stage2_in += width
    return (factorized_stage_count(width, c_b)
            + factorized_stage_count(stage2_in, c_b)
            + 3 * c_b * width + width)


def variant_delta(c_b):
    """Extra hyperdense parameters of one block: three branches read 2*c_b more channels."""
    return 3 * 9 * c_b * (2 * c_b)


def closed_form_count(cfg):
    """Parameter count of :py:func:`build_hinet` computed from ``cfg`` alone."""
    cfg.validate()
    levels = cfg.levels
    w = [cfg.width(level) for level in range(levels)]
    total = 27 * cfg.in_channels * w[0] + w[0]
    for level in range(levels):
        total += cfg.repetitions[level] * block_param_count(
            w[level], cfg.branch_width(w[level]), cfg.block_variant, cfg.include_input)
        if level < levels - 1:
            total += 27 * w[level] * w[level + 1] + w[level + 1]
    coarse = w[-1]
    for level in reversed(range(levels - 1)):
        total += coarse * w[level] + w[level]
        total += block_param_count(2 * w[level], cfg.branch_width(2 * w[level]),
                                   cfg.block_variant, cfg.include_input)
        coarse = 2 * w[level]
    total += cfg.num_classes * coarse + cfg.num_classes
    return total
