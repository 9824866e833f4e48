# -*- coding: utf-8 -*-
"""
Labelled multi-modality volumes: validation, region masks, one-hot
targets, intensity normalisation, synthetic tumour phantoms and
geometric augmentation.
"""
import logging
from collections import namedtuple
from dataclasses import dataclass

import numpy as np

from .constants import LABEL_CODES, Region, BACKGROUND, NECROTIC, EDEMA, ENHANCING
from .errors import IllegalArgumentError, ShapeError

log = logging.getLogger(__name__)

MIN_PHANTOM_EXTENT = 16

# mean intensity per label code for the T1, T1c, T2 and FLAIR-like channels
PHANTOM_CONTRAST = {
    BACKGROUND: (0.50, 0.45, 0.40, 0.35),
    NECROTIC: (0.25, 0.30, 0.85, 0.55),
    EDEMA: (0.40, 0.45, 0.75, 0.95),
    ENHANCING: (0.45, 1.00, 0.60, 0.70),
}
PHANTOM_NOISE = 0.08
# modalities with a smaller standard deviation are treated as constant
NORMALIZE_EPS = 1e-6


@dataclass
class VolumeSample(object):
    """
    :param numpy.ndarray image: float32 intensities (1, modalities, z, y, x)
    :param numpy.ndarray labels: uint8 label codes (z, y, x)
    """
    image: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.image.ndim != 5 or self.image.shape[0] != 1:
            raise ShapeError('Image must have shape (1, modalities, z, y, x), got %s' % (self.image.shape,))
        if self.labels.ndim != 3 or self.labels.shape != self.image.shape[2:]:
            raise ShapeError('Label shape %s does not match image shape %s' % (self.labels.shape, self.image.shape))
        check_labels(self.labels)

    @property
    def extents(self):
        return tuple(self.labels.shape)

    @property
    def modalities(self):
        return self.image.shape[1]

    def equals(self, other):
        """Bitwise equality of image and labels."""
        return (self.image.dtype == other.image.dtype and self.image.shape == other.image.shape
                and self.image.tobytes() == other.image.tobytes()
                and np.array_equal(self.labels, other.labels))


def check_labels(labels):
    unknown = np.setdiff1d(np.unique(labels), LABEL_CODES)
    if unknown.size:
        raise IllegalArgumentError('Unknown label values %s; expected codes %s'
                                   % (unknown.tolist(), list(LABEL_CODES)))
    return labels


def region_binarize(labels, region):
    """
    :param numpy.ndarray labels: label codes
    :param str region: ``WT``, ``TC`` or ``ET``
    :returns: uint8 mask, 1 where the label belongs to the region
    """
    regions = dict(Region)
    if region not in regions:
        raise IllegalArgumentError('Region %s is illegal' % (region,))
    check_labels(labels)
    return np.isin(labels, sorted(regions[region])).astype(np.uint8)


def one_hot(labels, codes=LABEL_CODES, dtype=np.float32):
    """One-hot target of shape (1, len(codes), z, y, x) in ``codes`` order."""
    check_labels(labels)
    return np.stack([labels == code for code in codes]).astype(dtype)[np.newaxis]


def normalize_image(image):
    """
    Z-score every modality of a (n, m, z, y, x) image over its voxels.
    Constant modalities are only centred.
    """
    image = np.asarray(image, dtype=np.float64)
    axes = (0, 2, 3, 4)
    mean = image.mean(axis=axes, keepdims=True)
    std = image.std(axis=axes, keepdims=True)
    return ((image - mean) / np.where(std > NORMALIZE_EPS, std, 1.0)).astype(np.float32)


def labels_from_scores(scores, codes=LABEL_CODES):
    """Argmax over channels of a (1, D, z, y, x) tensor mapped back to label codes."""
    return np.asarray(codes, dtype=np.uint8)[np.argmax(scores[0], axis=0)]


def make_phantom(seed, extent, modalities=4):
    """
    Three concentric spheres around a random lattice point: edema (2)
    inside ``r_ed``, necrotic core (1) inside ``r_ncr`` and enhancing
    tumour (4) inside ``r_et``, with ``r_ed > r_ncr > r_et``. Each
    modality has its own label contrast plus Gaussian noise.

    :raises hinet.errors.IllegalArgumentError: if ``extent`` is below 16
    """
    if extent < MIN_PHANTOM_EXTENT:
        raise IllegalArgumentError('Phantom extent must be at least %d, got %r' % (MIN_PHANTOM_EXTENT, extent))
    if not 1 <= modalities <= len(PHANTOM_CONTRAST[BACKGROUND]):
        raise IllegalArgumentError('Phantoms have 1 to 4 modalities, got %r' % (modalities,))
    rng = np.random.default_rng(seed)
    r_ed = rng.uniform(0.18, 0.3) * extent
    r_ncr = rng.uniform(0.5, 0.7) * r_ed
    r_et = rng.uniform(0.4, 0.6) * r_ncr
    margin = int(np.ceil(r_ed))
    center = rng.integers(margin, extent - margin, size=3)

    grid = np.indices((extent,) * 3, dtype=np.float64)
    dist = np.sqrt(sum((g - c) ** 2 for g, c in zip(grid, center)))
    labels = np.full((extent,) * 3, BACKGROUND, dtype=np.uint8)
    labels[dist <= r_ed] = EDEMA
    labels[dist <= r_ncr] = NECROTIC
    labels[dist <= r_et] = ENHANCING

    # lookup indexed by label code; code 3 is unused
    contrast = np.array([PHANTOM_CONTRAST.get(code, PHANTOM_CONTRAST[BACKGROUND])[:modalities]
                         for code in range(max(LABEL_CODES) + 1)])
    image = contrast[labels].transpose(3, 0, 1, 2)
    image = image + rng.normal(0.0, PHANTOM_NOISE, size=image.shape)
    log.debug('Phantom seed=%s extent=%d radii=(%.2f, %.2f, %.2f)', seed, extent, r_ed, r_ncr, r_et)
    return VolumeSample(image[np.newaxis].astype(np.float32), labels)


# quarter turns in the (y, x), (z, x) and (z, y) planes, then mirrors of z, y, x
AugmentSetting = namedtuple('AugmentSetting', ['turns', 'mirrors'])

_PLANES = ((1, 2), (0, 2), (0, 1))


def draw_augment(seed):
    rng = np.random.default_rng(seed)
    turns = tuple(int(k) for k in rng.integers(0, 4, size=3))
    mirrors = tuple(bool(m) for m in rng.random(3) < 0.5)
    return AugmentSetting(turns, mirrors)


def _transform(volume, setting, offset):
    for k, (a, b) in zip(setting.turns, _PLANES):
        if k:
            volume = np.rot90(volume, k, axes=(a + offset, b + offset))
    for axis, mirror in enumerate(setting.mirrors):
        if mirror:
            volume = np.flip(volume, axis=axis + offset)
    return np.ascontiguousarray(volume)


def apply_augment(sample, setting):
    return VolumeSample(_transform(sample.image, setting, 2), _transform(sample.labels, setting, 0))


def augment(sample, seed):
    """
    Seeded random rotation by quarter turns in the three axis-aligned
    planes followed by per-axis mirroring (probability 0.5 each), applied
    identically to image and labels.
    """
    return apply_augment(sample, draw_augment(seed))


def center_crop(sample, extent):
    """Crop every spatial axis longer than ``extent`` around its center."""
    slices = []
    for e in sample.extents:
        start = max(0, (e - extent) // 2)
        slices.append(slice(start, start + min(e, extent)))
    z, y, x = slices
    return VolumeSample(np.ascontiguousarray(sample.image[:, :, z, y, x]),
                        np.ascontiguousarray(sample.labels[z, y, x]))
