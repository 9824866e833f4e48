# -*- coding: utf-8 -*-
"""
The ``.hvol`` volume container.

A UTF-8 JSON header next to two raw little-endian payload files::

    {"magic": "HVOL1", "extents": [z, y, x], "modalities": m,
     "dtype": "f32le", "label_dtype": "u8",
     "data_file": "case.hvol.img", "label_file": "case.hvol.lbl",
     "crc32": ...}

The image payload is float32 in (c, z, y, x) order, the label payload
uint8 in (z, y, x) order; ``crc32`` covers the image bytes followed by
the label bytes. Payload paths are relative to the header.
"""
import json
import logging
import os
import zlib

import numpy as np

from .data import VolumeSample
from .errors import HeaderError, TruncatedDataError, ChecksumError

MAGIC = 'HVOL1'
EXTENSION = '.hvol'
IMAGE_DTYPE = 'f32le'
LABEL_DTYPE = 'u8'
HEADER_KEYS = ('magic', 'extents', 'modalities', 'dtype', 'label_dtype', 'data_file', 'label_file', 'crc32')

log = logging.getLogger(__name__)


def write_volume(path, sample):
    """
    Write ``sample`` as ``path`` plus ``path.img`` and ``path.lbl``.

    :param str path: header path
    :param sample: volume to store; may have zero modalities
    :type sample: :py:class:`hinet.data.VolumeSample`
    """
    image = np.ascontiguousarray(sample.image[0], dtype='<f4').tobytes()
    labels = np.ascontiguousarray(sample.labels, dtype=np.uint8).tobytes()
    base = os.path.basename(path)
    header = {
        'magic': MAGIC,
        'extents': list(sample.extents),
        'modalities': sample.modalities,
        'dtype': IMAGE_DTYPE,
        'label_dtype': LABEL_DTYPE,
        'data_file': base + '.img',
        'label_file': base + '.lbl',
        'crc32': zlib.crc32(labels, zlib.crc32(image)),
    }
    folder = os.path.dirname(path)
    with open(os.path.join(folder, header['data_file']), 'wb') as fp:
        fp.write(image)
    with open(os.path.join(folder, header['label_file']), 'wb') as fp:
        fp.write(labels)
    with open(path, 'w', encoding='utf-8') as fp:
        json.dump(header, fp, indent=2)
    log.info('Wrote volume %s with extents %s and %d modalities', path, header['extents'], header['modalities'])


def read_header(path):
    try:
        with open(path, encoding='utf-8') as fp:
            header = json.load(fp)
    except ValueError as e:
        raise HeaderError('Volume header %s is not valid JSON: %s' % (path, e))
    if not isinstance(header, dict):
        raise HeaderError('Volume header %s must be a JSON object' % (path,))
    missing = [key for key in HEADER_KEYS if key not in header]
    if missing:
        raise HeaderError('Volume header %s lacks keys: %s' % (path, ', '.join(missing)))
    if header['magic'] != MAGIC:
        raise HeaderError('Volume header %s has magic %r, expected %r' % (path, header['magic'], MAGIC))
    if header['dtype'] != IMAGE_DTYPE or header['label_dtype'] != LABEL_DTYPE:
        raise HeaderError('Volume header %s has unsupported dtypes %s/%s'
                          % (path, header['dtype'], header['label_dtype']))
    extents = header['extents']
    if (not isinstance(extents, list) or len(extents) != 3
            or not all(isinstance(e, int) and e > 0 for e in extents)
            or not isinstance(header['modalities'], int) or header['modalities'] < 0):
        raise HeaderError('Volume header %s has invalid extents %r or modalities %r'
                          % (path, extents, header['modalities']))
    return header


def _read_payload(path, name, expected):
    with open(path, 'rb') as fp:
        payload = fp.read()
    if len(payload) != expected:
        raise TruncatedDataError('%s payload %s holds %d bytes, expected %d'
                                 % (name, path, len(payload), expected))
    return payload


def read_volume(path):
    """
    :raises hinet.errors.HeaderError: on a malformed header
    :raises hinet.errors.TruncatedDataError: if a payload size is wrong
    :raises hinet.errors.ChecksumError: if the payload crc32 differs
    """
    header = read_header(path)
    folder = os.path.dirname(path)
    z, y, x = header['extents']
    voxels = z * y * x
    image = _read_payload(os.path.join(folder, header['data_file']), 'Image',
                          4 * voxels * header['modalities'])
    labels = _read_payload(os.path.join(folder, header['label_file']), 'Label', voxels)
    crc = zlib.crc32(labels, zlib.crc32(image))
    if crc != header['crc32']:
        raise ChecksumError('Volume %s checksum %d does not match header %d' % (path, crc, header['crc32']))
    image = np.frombuffer(image, dtype='<f4').astype(np.float32).reshape(1, header['modalities'], z, y, x)
    labels = np.frombuffer(labels, dtype=np.uint8).reshape(z, y, x).copy()
    return VolumeSample(image, labels)


def list_volumes(directory):
    return sorted(os.path.join(directory, name) for name in os.listdir(directory)
                  if name.endswith(EXTENSION))
