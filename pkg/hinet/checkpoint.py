# -*- coding: utf-8 -*-
"""
Binary checkpoints, all integers little-endian::

    b"HINT"  u32 version (1)  u32 entry count
    per entry: u16 name length, UTF-8 name, u8 dtype code, u8 rank,
               rank x u32 extents, raw little-endian payload

dtype codes: 0 float32, 1 float64, 2 uint8. Parameter entries are
named ``<layer>.w`` / ``<layer>.b``. A trailing uint8 entry
``meta.config`` carries the network configuration as JSON so a
checkpoint alone rebuilds its network.
"""
import json
import logging
import struct
from collections import OrderedDict

import numpy as np

from .errors import HeaderError, TruncatedDataError, ConfigurationError
from .network import Network, NetworkConfig
from .constants import TRAIN32, CHECK64

MAGIC = b'HINT'
VERSION = 1
CONFIG_ENTRY = 'meta.config'

DTYPE_CODES = {0: np.dtype('<f4'), 1: np.dtype('<f8'), 2: np.dtype('u1')}
_CODE_FOR = dict((dtype, code) for code, dtype in DTYPE_CODES.items())

log = logging.getLogger(__name__)


def write_state(path, arrays):
    """Write an ordered ``name -> array`` mapping."""
    with open(path, 'wb') as fp:
        fp.write(MAGIC)
        fp.write(struct.pack('<II', VERSION, len(arrays)))
        for name, array in arrays.items():
            dtype = np.dtype(array.dtype).newbyteorder('<')
            if dtype not in _CODE_FOR:
                raise ConfigurationError('Cannot store %s with dtype %s' % (name, array.dtype))
            encoded = name.encode('utf-8')
            fp.write(struct.pack('<H', len(encoded)))
            fp.write(encoded)
            fp.write(struct.pack('<BB', _CODE_FOR[dtype], array.ndim))
            fp.write(struct.pack('<%dI' % array.ndim, *array.shape))
            fp.write(np.ascontiguousarray(array, dtype=dtype).tobytes())


class _Reader(object):
    def __init__(self, path, data):
        self.path = path
        self.data = data
        self.offset = 0

    def take(self, size, what):
        end = self.offset + size
        if end > len(self.data):
            raise TruncatedDataError('Checkpoint %s ends inside %s: needs %d bytes at offset %d, file has %d'
                                     % (self.path, what, size, self.offset, len(self.data)))
        chunk = self.data[self.offset:end]
        self.offset = end
        return chunk

    def unpack(self, fmt, what):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))


def read_state(path):
    """
    :returns: ``OrderedDict`` of name -> array in file order
    :raises hinet.errors.HeaderError: on wrong magic, version, entry name or
        dtype code
    :raises hinet.errors.TruncatedDataError: if the file ends early
    """
    with open(path, 'rb') as fp:
        reader = _Reader(path, fp.read())
    magic = reader.take(4, 'magic')
    if magic != MAGIC:
        raise HeaderError('Checkpoint %s has magic %r, expected %r' % (path, magic, MAGIC))
    version, count = reader.unpack('<II', 'header')
    if version != VERSION:
        raise HeaderError('Checkpoint %s has version %d, expected %d' % (path, version, VERSION))
    arrays = OrderedDict()
    for _ in range(count):
        (length,) = reader.unpack('<H', 'entry name length')
        raw = reader.take(length, 'entry name')
        try:
            name = raw.decode('utf-8')
        except UnicodeDecodeError:
            raise HeaderError('Checkpoint %s has an entry name that is not UTF-8: %r' % (path, raw))
        code, rank = reader.unpack('<BB', 'entry %s' % name)
        if code not in DTYPE_CODES:
            raise HeaderError('Checkpoint %s entry %s has unknown dtype code %d' % (path, name, code))
        shape = reader.unpack('<%dI' % rank, 'entry %s extents' % name)
        dtype = DTYPE_CODES[code]
        size = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
        payload = reader.take(size, 'entry %s payload' % name)
        arrays[name] = np.frombuffer(payload, dtype=dtype).astype(dtype.newbyteorder('=')).reshape(shape)
    return arrays


def save_checkpoint(net, path):
    arrays = net.parameters()
    config = json.dumps(net.cfg.to_dict(), sort_keys=True).encode('utf-8')
    arrays[CONFIG_ENTRY] = np.frombuffer(config, dtype=np.uint8)
    write_state(path, arrays)
    log.info('Wrote checkpoint %s with %d parameters', path, net.count_params())


def _stored_config(path, meta):
    try:
        data = json.loads(meta.tobytes().decode('utf-8'))
        return NetworkConfig(**data)
    except (ValueError, TypeError) as e:
        raise HeaderError('Checkpoint %s has a malformed %s entry: %s' % (path, CONFIG_ENTRY, e))


def load_checkpoint(path, cfg=None):
    """
    Rebuild the network stored in ``path``.

    :param cfg: configuration to use when the file carries none
    :rtype: :py:class:`hinet.network.Network`
    :raises hinet.errors.HeaderError: if the stored configuration is malformed
    """
    arrays = read_state(path)
    meta = arrays.pop(CONFIG_ENTRY, None)
    if meta is not None:
        cfg = _stored_config(path, meta)
    if cfg is None:
        raise ConfigurationError('Checkpoint %s carries no network configuration' % (path,))
    dtypes = set(a.dtype for a in arrays.values())
    mode = CHECK64 if dtypes == set([np.dtype(np.float64)]) else TRAIN32
    net = Network(cfg, mode)
    net.load_parameters(arrays)
    return net
