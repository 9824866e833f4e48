# -*- coding: utf-8 -*-
"""
Dense 5-D tensors and the differentiable primitives the network is built
from.

Tensors are plain ``numpy.ndarray`` objects of rank 5 laid out as
``(n, c, z, y, x)`` in C order, so ``x`` varies fastest. Every forward
primitive has a ``*_grad`` companion returning the exact adjoint.

Stride-1 convolutions with a spatial kernel run tap by tap over one
padded copy of the input; strided and pointwise convolutions, and every
backward pass, run as im2col followed by a matrix product. Work is cut
into fixed blocks of output voxels that do not depend on the worker
count, and partial reductions are combined in block order, so results
are bitwise identical for any ``HINET_THREADS`` value.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import get_thread_count
from .constants import TRAIN32, CHECK64
from .errors import ShapeError, IllegalArgumentError

TRAIN_DTYPE = np.float32
CHECK_DTYPE = np.float64

# output voxels per work item of the convolution kernels
BLOCK_ROWS = 4096

_executors = {}


def dtype_for(mode):
    if mode == TRAIN32:
        return TRAIN_DTYPE
    elif mode == CHECK64:
        return CHECK_DTYPE
    raise IllegalArgumentError('Mode %s is illegal' % (mode,))


def check_tensor5(x, name='tensor'):
    if not isinstance(x, np.ndarray) or x.ndim != 5:
        shape = getattr(x, 'shape', None)
        raise ShapeError('%s must be a 5-D (n, c, z, y, x) array, got shape %s' % (name, shape))
    return x


def tensor5(data, dtype=TRAIN_DTYPE):
    """Contiguous copy of ``data`` as a rank-5 array of ``dtype``."""
    return check_tensor5(np.array(data, dtype=dtype, order='C'))


@dataclass
class ConvWeights(object):
    """
    Weights of one convolution.

    :param numpy.ndarray w: kernel of shape (c_out, c_in, k_z, k_y, k_x)
    :param numpy.ndarray b: bias of shape (c_out,)
    :param int stride: 1 or 2, shared by the three spatial axes
    """
    w: np.ndarray
    b: np.ndarray
    stride: int = 1

    def __post_init__(self):
        if self.w.ndim != 5:
            raise ShapeError('Convolution weights must be 5-D, got shape %s' % (self.w.shape,))
        if any(e % 2 == 0 for e in self.kernel):
            raise ShapeError('Kernel extents must be odd, got %s' % (self.kernel,))
        if self.b.shape != (self.c_out,):
            raise ShapeError('Bias shape %s does not match weight shape %s' % (self.b.shape, self.w.shape))
        if self.stride not in (1, 2):
            raise IllegalArgumentError('Stride must be 1 or 2, got %r' % (self.stride,))

    @property
    def c_out(self):
        return self.w.shape[0]

    @property
    def c_in(self):
        return self.w.shape[1]

    @property
    def kernel(self):
        return tuple(self.w.shape[2:])

    @property
    def size(self):
        return self.w.size + self.b.size

    @classmethod
    def zeros(cls, c_out, c_in, kernel, stride=1, dtype=TRAIN_DTYPE):
        return cls(np.zeros((c_out, c_in) + tuple(kernel), dtype=dtype),
                   np.zeros(c_out, dtype=dtype), stride)

    def astype(self, dtype):
        return ConvWeights(self.w.astype(dtype), self.b.astype(dtype), self.stride)


def _executor(threads):
    if threads not in _executors:
        _executors[threads] = ThreadPoolExecutor(max_workers=threads)
    return _executors[threads]


def _blocks(rows):
    return [(i, min(i + BLOCK_ROWS, rows)) for i in range(0, rows, BLOCK_ROWS)]


def _map_blocks(fn, blocks):
    threads = get_thread_count()
    if threads == 1 or len(blocks) == 1:
        return [fn(span) for span in blocks]
    return list(_executor(threads).map(fn, blocks))


def _same_pads(kernel):
    return tuple(e // 2 for e in kernel)


def _im2col(x, kernel, stride):
    """
    Rows are output voxels in (n, z, y, x) order, columns are taps in
    (c, dz, dy, dx) order.
    """
    n, c = x.shape[:2]
    if kernel == (1, 1, 1):
        view = x[:, :, ::stride, ::stride, ::stride]
        out_shape = (n,) + view.shape[2:]
        return view.transpose(0, 2, 3, 4, 1).reshape(-1, c), out_shape
    pads = ((0, 0), (0, 0)) + tuple((p, p) for p in _same_pads(kernel))
    padded = np.pad(x, pads)
    win = sliding_window_view(padded, kernel, axis=(2, 3, 4))
    win = win[:, :, ::stride, ::stride, ::stride]
    out_shape = (n,) + win.shape[2:5]
    cols = win.transpose(0, 2, 3, 4, 1, 5, 6, 7).reshape(int(np.prod(out_shape)), -1)
    return cols, out_shape


def _conv_taps(x, k):
    """
    Stride-1 convolution as a sum over kernel taps.

    The input is padded once and flattened per channel. On the padded grid
    every tap is a constant offset, so each tap multiplies ``w[:, :, tap]``
    into a strided slice of the shared buffer and no im2col matrix is
    built. Outputs are produced on the padded grid in fixed column blocks,
    taps summed in kernel order, and the border is dropped.
    """
    n, c, depth, height, width = x.shape
    pz, py, px = _same_pads(k.kernel)
    padded = np.pad(x, ((0, 0), (0, 0), (pz, pz), (py, py), (px, px)))
    zp, yp, xp = padded.shape[2:]
    length = zp * yp * xp
    # flat index of the first interior voxel; the last one is length - 1 - first
    first = (pz * yp + py) * xp + px
    taps = [(np.ascontiguousarray(k.w[:, :, a, b, e]), ((a - pz) * yp + (b - py)) * xp + (e - px))
            for a, b, e in np.ndindex(*k.kernel)]
    bias = k.b[:, np.newaxis]
    out = np.empty((n, k.c_out, length), dtype=np.result_type(x, k.w))

    for item in range(n):
        flat = padded[item].reshape(c, length)
        target = out[item]

        def work(span):
            lo, hi = first + span[0], first + span[1]
            acc = None
            for w_tap, offset in taps:
                part = w_tap @ flat[:, lo + offset:hi + offset]
                if acc is None:
                    acc = part
                else:
                    acc += part
            acc += bias
            target[:, lo:hi] = acc
        _map_blocks(work, _blocks(length - 2 * first))

    out = out.reshape(n, k.c_out, zp, yp, xp)
    return np.ascontiguousarray(out[:, :, pz:pz + depth, py:py + height, px:px + width])


def _col2im(dcols, x_shape, kernel, stride, out_shape):
    n, c, z, y, x = x_shape
    _, oz, oy, ox = out_shape
    kz, ky, kx = kernel
    if kernel == (1, 1, 1):
        dx = np.zeros(x_shape, dtype=dcols.dtype)
        dx[:, :, ::stride, ::stride, ::stride] = dcols.reshape(n, oz, oy, ox, c).transpose(0, 4, 1, 2, 3)
        return dx
    pz, py, px = _same_pads(kernel)
    padded = np.zeros((n, c, z + 2 * pz, y + 2 * py, x + 2 * px), dtype=dcols.dtype)
    taps = dcols.reshape(n, oz, oy, ox, c, kz, ky, kx)
    for a in range(kz):
        for b in range(ky):
            for e in range(kx):
                padded[:, :, a:a + stride * oz:stride, b:b + stride * oy:stride, e:e + stride * ox:stride] += \
                    taps[:, :, :, :, :, a, b, e].transpose(0, 4, 1, 2, 3)
    return padded[:, :, pz:pz + z, py:py + y, px:px + x]


def _matmul_rows(a, b):
    out = np.empty((a.shape[0], b.shape[1]), dtype=np.result_type(a, b))

    def work(span):
        i, j = span
        np.matmul(a[i:j], b, out=out[i:j])
    _map_blocks(work, _blocks(a.shape[0]))
    return out


def _matmul_reduce_rows(a, b):
    """``a.T @ b`` with partial products summed in block order."""
    def work(span):
        i, j = span
        return a[i:j].T @ b[i:j]
    partials = _map_blocks(work, _blocks(a.shape[0]))
    total = partials[0]
    for part in partials[1:]:
        total = total + part
    return total


def _check_conv(x, k):
    check_tensor5(x, 'conv3d input')
    if 0 in x.shape:
        raise ShapeError('conv3d input has a zero extent: %s' % (x.shape,))
    if x.shape[1] != k.c_in:
        raise ShapeError('conv3d input shape %s does not match weight shape %s' % (x.shape, k.w.shape))


def conv_output_shape(x_shape, k):
    n, _, z, y, x = x_shape
    s = k.stride
    return (n, k.c_out, -(-z // s), -(-y // s), -(-x // s))


def conv3d(x, k):
    """
    Zero-padded "same" convolution with stride ``k.stride``.

    :param numpy.ndarray x: input of shape (n, c_in, z, y, x)
    :param k: convolution weights
    :type k: :py:class:`hinet.tensor.ConvWeights`
    :returns: output of shape (n, c_out, ceil(z/s), ceil(y/s), ceil(x/s))
    :raises hinet.errors.ShapeError: if channels mismatch or an extent is zero
    """
    _check_conv(x, k)
    if k.stride == 1 and k.kernel != (1, 1, 1):
        return _conv_taps(x, k)
    cols, out_shape = _im2col(x, k.kernel, k.stride)
    out = _matmul_rows(cols, k.w.reshape(k.c_out, -1).T)
    out += k.b
    return np.ascontiguousarray(out.reshape(out_shape + (k.c_out,)).transpose(0, 4, 1, 2, 3))


def conv3d_grad(x, k, dy):
    """
    Adjoint of :py:func:`conv3d`.

    :returns: ``(dx, dw, db)`` shaped like ``x``, ``k.w`` and ``k.b``
    """
    _check_conv(x, k)
    check_tensor5(dy, 'conv3d cotangent')
    expected = conv_output_shape(x.shape, k)
    if dy.shape != expected:
        raise ShapeError('conv3d cotangent shape %s does not match output shape %s' % (dy.shape, expected))
    cols, out_shape = _im2col(x, k.kernel, k.stride)
    dy_rows = dy.transpose(0, 2, 3, 4, 1).reshape(-1, k.c_out)
    wmat = k.w.reshape(k.c_out, -1)
    dw = _matmul_reduce_rows(dy_rows, cols).reshape(k.w.shape)
    db = dy.sum(axis=(0, 2, 3, 4))
    dcols = _matmul_rows(dy_rows, wmat)
    dx = _col2im(dcols, x.shape, k.kernel, k.stride, out_shape)
    return np.ascontiguousarray(dx), dw, db


def relu(x):
    return np.maximum(x, 0)


def relu_grad(x, dy):
    """Passes ``dy`` where ``x > 0``; zero at the kink."""
    return dy * (x > 0)


def upsample_nearest(x, factor=2):
    check_tensor5(x, 'upsample input')
    if int(factor) != factor or factor < 1:
        raise IllegalArgumentError('Upsampling factor must be a positive integer, got %r' % (factor,))
    if factor == 1:
        return x.copy()
    return x.repeat(factor, axis=2).repeat(factor, axis=3).repeat(factor, axis=4)


def upsample_nearest_grad(dy, factor=2):
    n, c, z, y, x = check_tensor5(dy, 'upsample cotangent').shape
    if z % factor or y % factor or x % factor:
        raise ShapeError('Cotangent shape %s is not divisible by factor %d' % (dy.shape, factor))
    blocks = dy.reshape(n, c, z // factor, factor, y // factor, factor, x // factor, factor)
    return blocks.sum(axis=(3, 5, 7))


def concat_channels(parts):
    if not parts:
        raise ShapeError('concat_channels needs at least one tensor')
    head = check_tensor5(parts[0], 'concat part')
    for part in parts[1:]:
        check_tensor5(part, 'concat part')
        if part.shape[:1] + part.shape[2:] != head.shape[:1] + head.shape[2:]:
            raise ShapeError('Cannot concatenate shapes %s and %s along channels' % (head.shape, part.shape))
    return np.concatenate(parts, axis=1)


def split_channels(x, sizes):
    """Inverse of :py:func:`concat_channels` for parts of ``sizes`` channels."""
    if sum(sizes) != x.shape[1]:
        raise ShapeError('Channel sizes %s do not add up to shape %s' % (list(sizes), x.shape))
    offsets = np.cumsum(sizes)[:-1]
    return np.split(x, offsets, axis=1)


def eltwise_add(a, b):
    if a.shape != b.shape:
        raise ShapeError('Cannot add shapes %s and %s' % (a.shape, b.shape))
    return a + b


def eltwise_add_grad(dy):
    return dy, dy


def softmax_channels(x):
    check_tensor5(x, 'softmax input')
    if x.shape[1] < 1:
        raise ShapeError('softmax needs at least one channel, got shape %s' % (x.shape,))
    e = np.exp(x - x.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def softmax_channels_grad(probs, dy):
    """Jacobian-vector product of the channel softmax at output ``probs``."""
    return probs * (dy - (probs * dy).sum(axis=1, keepdims=True))
