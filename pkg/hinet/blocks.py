# -*- coding: utf-8 -*-
"""
Orthogonal-view residual inception blocks and resolution transitions.

Each block runs two stages of three parallel view convolutions (axial,
coronal, sagittal). In the hyperdense variant every stage-2 branch reads
the concatenation of all stage-1 views; in the baseline variant it reads
only its own view. The stage-2 outputs are fused by a 1x1x1 projection
and added to the block input.

Every layer comes as a ``*_forward`` returning what its backward needs
and a ``*_backward`` returning input and weight gradients. Weight
gradients are :py:class:`hinet.tensor.ConvWeights` instances holding
``dw`` and ``db``.
"""
from dataclasses import dataclass, field

import numpy as np

from .constants import ViewAxis, BlockVariant, HYPERDENSE, BASELINE
from .errors import ShapeError, IllegalArgumentError, ConfigurationError
from .tensor import (TRAIN_DTYPE, ConvWeights, conv3d, conv3d_grad, relu, relu_grad,
                     upsample_nearest, upsample_nearest_grad, concat_channels,
                     split_channels, eltwise_add, eltwise_add_grad)

VIEWS = tuple(view for view, _ in ViewAxis)
STAGES = ('stage1', 'stage2')


def view_kernel(view):
    kernels = dict(ViewAxis)
    if view not in kernels:
        raise IllegalArgumentError('View %s is illegal' % (view,))
    return kernels[view]


def _check_view(view, k):
    kernel = view_kernel(view)
    if k.kernel != kernel or k.stride != 1:
        raise ShapeError('Kernel %s with stride %d does not match the %s view pattern %s'
                         % (k.kernel, k.stride, view, kernel))


def view_conv(x, view, k):
    """
    Anisotropic convolution in one orthogonal view followed by ReLU.

    :param numpy.ndarray x: input tensor
    :param str view: one of ``axial``, ``coronal``, ``sagittal``
    :param k: weights whose kernel matches the view pattern
    :raises hinet.errors.ShapeError: if the kernel does not match the view
    """
    return view_conv_forward(x, view, k)[0]


def view_conv_forward(x, view, k):
    _check_view(view, k)
    pre = conv3d(x, k)
    return relu(pre), pre


def view_conv_backward(x, k, pre, dy):
    dx, dw, db = conv3d_grad(x, k, relu_grad(pre, dy))
    return dx, ConvWeights(dw, db, k.stride)


@dataclass
class BlockParams(object):
    """
    Weights and channel plan of one residual inception block.

    ``stage1`` and ``stage2`` map each view to its branch weights.
    """
    variant: str
    c_in: int
    c_b: int
    stage1: dict
    stage2: dict
    proj: ConvWeights
    include_input: bool = False

    @property
    def stage2_in(self):
        width = 3 * self.c_b if self.variant == HYPERDENSE else self.c_b
        if self.include_input:
            width += self.c_in
        return width

    @classmethod
    def zeros(cls, variant, c_in, c_b, include_input=False, dtype=TRAIN_DTYPE):
        p = cls(variant, c_in, c_b, {}, {}, None, include_input)
        for view in VIEWS:
            p.stage1[view] = ConvWeights.zeros(c_b, c_in, view_kernel(view), dtype=dtype)
            p.stage2[view] = ConvWeights.zeros(c_b, p.stage2_in, view_kernel(view), dtype=dtype)
        p.proj = ConvWeights.zeros(c_in, 3 * c_b, (1, 1, 1), dtype=dtype)
        return p.validate()

    def validate(self):
        if self.variant not in dict(BlockVariant):
            raise ConfigurationError('Block variant %s is illegal' % (self.variant,))
        if self.c_in < 1 or self.c_b < 1:
            raise ConfigurationError('Block widths must be positive, got c_in=%r c_b=%r' % (self.c_in, self.c_b))
        for stage, c_in in (('stage1', self.c_in), ('stage2', self.stage2_in)):
            weights = getattr(self, stage)
            if sorted(weights) != sorted(VIEWS):
                raise ConfigurationError('%s must hold exactly the views %s' % (stage, ', '.join(VIEWS)))
            for view, k in weights.items():
                _check_view(view, k)
                if k.c_in != c_in or k.c_out != self.c_b:
                    raise ConfigurationError('%s %s weights %s violate the plan %d -> %d'
                                             % (stage, view, k.w.shape, c_in, self.c_b))
        if self.proj.kernel != (1, 1, 1) or self.proj.c_in != 3 * self.c_b or self.proj.c_out != self.c_in:
            raise ConfigurationError('Projection weights %s violate the plan %d -> %d'
                                     % (self.proj.w.shape, 3 * self.c_b, self.c_in))
        return self

    def named_weights(self):
        for stage in STAGES:
            for view in VIEWS:
                yield '%s.%s' % (stage, view), getattr(self, stage)[view]
        yield 'proj', self.proj


@dataclass
class BlockCache(object):
    x: np.ndarray
    stage1_pre: list = field(default_factory=list)
    stage1: list = field(default_factory=list)
    stage2_in: list = field(default_factory=list)
    stage2_pre: list = field(default_factory=list)
    stage2: list = field(default_factory=list)
    fused_in: np.ndarray = None


def _stage2_inputs(x, stage1, p):
    if p.variant == HYPERDENSE:
        shared = concat_channels(stage1)
        inputs = [shared] * len(VIEWS)
    else:
        inputs = list(stage1)
    if p.include_input:
        inputs = [concat_channels([x, t]) for t in inputs]
    return inputs


def block_forward(x, p):
    """
    Forward pass of either block variant.

    :returns: ``(output, cache)``
    :raises hinet.errors.ShapeError: if ``x`` does not have ``p.c_in`` channels
    """
    if x.ndim != 5 or x.shape[1] != p.c_in:
        raise ShapeError('Block input shape %s does not match the plan c_in=%d' % (x.shape, p.c_in))
    cache = BlockCache(x)
    for view in VIEWS:
        act, pre = view_conv_forward(x, view, p.stage1[view])
        cache.stage1_pre.append(pre)
        cache.stage1.append(act)
    cache.stage2_in = _stage2_inputs(x, cache.stage1, p)
    for view, inp in zip(VIEWS, cache.stage2_in):
        act, pre = view_conv_forward(inp, view, p.stage2[view])
        cache.stage2_pre.append(pre)
        cache.stage2.append(act)
    cache.fused_in = concat_channels(cache.stage2)
    return eltwise_add(x, conv3d(cache.fused_in, p.proj)), cache


def block_backward(p, cache, dy):
    """
    :returns: ``(dx, grads)`` where ``grads`` maps the names of
        :py:meth:`BlockParams.named_weights` to gradient weights
    """
    grads = {}
    dx, dproj_out = eltwise_add_grad(dy)
    dx = dx.copy()
    dfused, dw, db = conv3d_grad(cache.fused_in, p.proj, dproj_out)
    grads['proj'] = ConvWeights(dw, db)

    dstage2_in = []
    for i, (view, dout) in enumerate(zip(VIEWS, split_channels(dfused, [p.c_b] * len(VIEWS)))):
        dinp, grads['stage2.%s' % view] = view_conv_backward(
            cache.stage2_in[i], p.stage2[view], cache.stage2_pre[i], dout)
        dstage2_in.append(dinp)

    dstage1 = [np.zeros_like(t) for t in cache.stage1]
    for i, dinp in enumerate(dstage2_in):
        if p.include_input:
            dxpart, dinp = split_channels(dinp, [p.c_in, dinp.shape[1] - p.c_in])
            dx += dxpart
        if p.variant == HYPERDENSE:
            for j, part in enumerate(split_channels(dinp, [p.c_b] * len(VIEWS))):
                dstage1[j] = dstage1[j] + part
        else:
            dstage1[i] = dstage1[i] + dinp

    for i, view in enumerate(VIEWS):
        dxi, grads['stage1.%s' % view] = view_conv_backward(
            cache.x, p.stage1[view], cache.stage1_pre[i], dstage1[i])
        dx += dxi
    return dx, grads


def _block(x, p, variant):
    if p.variant != variant:
        raise IllegalArgumentError('Expected %s block parameters, got %s' % (variant, p.variant))
    p.validate()
    return block_forward(x, p)[0]


def hyperdense_block(x, p):
    """Residual inception block with cross-view (hyperdense) stage-2 inputs."""
    return _block(x, p, HYPERDENSE)


def baseline_block(x, p):
    """Residual inception block whose branches never cross views."""
    return _block(x, p, BASELINE)


def down_transition(x, k):
    return down_transition_forward(x, k)[0]


def down_transition_forward(x, k):
    """Stride-2 3x3x3 convolution and ReLU; spatial extents become ceil(e/2)."""
    if k.kernel != (3, 3, 3) or k.stride != 2:
        raise ShapeError('Down transition needs a 3x3x3 stride-2 kernel, got %s stride %d' % (k.kernel, k.stride))
    if x.ndim != 5 or min(x.shape[2:]) < 2:
        raise ShapeError('Down transition needs spatial extents of at least 2, got shape %s' % (x.shape,))
    pre = conv3d(x, k)
    return relu(pre), pre


def down_transition_backward(x, k, pre, dy):
    dx, dw, db = conv3d_grad(x, k, relu_grad(pre, dy))
    return dx, ConvWeights(dw, db, k.stride)


def up_transition(x, skip, k):
    return up_transition_forward(x, skip, k)[0]


def up_transition_forward(x, skip, k):
    """
    Nearest x2 upsampling, 1x1x1 convolution and ReLU on the coarse path,
    then concatenation with the skip tensor: ``[coarse, skip]``.

    The pointwise convolution and ReLU commute with nearest upsampling, so
    they run at the coarse resolution.

    :returns: ``(output, pre)`` with ``pre`` the coarse pre-activation
    :raises hinet.errors.ShapeError: if the upsampled shape differs from
        the skip shape
    """
    if k.kernel != (1, 1, 1) or k.stride != 1:
        raise ShapeError('Up transition needs a 1x1x1 stride-1 kernel, got %s stride %d' % (k.kernel, k.stride))
    upsampled = (x.shape[0], k.c_out) + tuple(2 * e for e in x.shape[2:])
    if upsampled[:1] + upsampled[2:] != skip.shape[:1] + skip.shape[2:]:
        raise ShapeError('Upsampled shape %s does not match skip shape %s' % (upsampled, skip.shape))
    pre = conv3d(x, k)
    return concat_channels([upsample_nearest(relu(pre), 2), skip]), pre


def up_transition_backward(x, k, pre, dy):
    """:returns: ``(dx, dskip, grads)``"""
    dcoarse, dskip = split_channels(dy, [k.c_out, dy.shape[1] - k.c_out])
    dpre = relu_grad(pre, upsample_nearest_grad(dcoarse, 2))
    dx, dw, db = conv3d_grad(x, k, dpre)
    return dx, dskip, ConvWeights(dw, db, k.stride)
