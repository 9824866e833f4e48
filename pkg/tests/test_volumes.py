# -*- coding: utf-8 -*-
import json
import os
from tempfile import TemporaryDirectory

import numpy as np
from tests import TestCase

from hinet import volumes
from hinet.data import VolumeSample, make_phantom
from hinet.errors import HeaderError, TruncatedDataError, ChecksumError


class VolumeTestCase(TestCase):
    def setUp(self):
        self.tmp = TemporaryDirectory()
        self.path = os.path.join(self.tmp.name, 'case.hvol')

    def tearDown(self):
        self.tmp.cleanup()

    def _rewrite_header(self, **changes):
        with open(self.path) as fp:
            header = json.load(fp)
        header.update(changes)
        with open(self.path, 'w') as fp:
            json.dump(header, fp)

    def test_round_trip(self):
        sample = make_phantom(0, 16)
        volumes.write_volume(self.path, sample)
        self.assertTrue(volumes.read_volume(self.path).equals(sample))
        header = volumes.read_header(self.path)
        self.assertEqual('HVOL1', header['magic'])
        self.assertEqual([16, 16, 16], header['extents'])
        self.assertEqual('case.hvol.img', header['data_file'])
        self.assertEqual(4 * 4 * 16 ** 3, os.path.getsize(self.path + '.img'))

    def test_labels_only(self):
        labels = make_phantom(1, 16).labels
        sample = VolumeSample(np.zeros((1, 0) + labels.shape, dtype=np.float32), labels)
        volumes.write_volume(self.path, sample)
        loaded = volumes.read_volume(self.path)
        self.assertEqual(0, loaded.modalities)
        self.assertTrue(np.array_equal(labels, loaded.labels))

    def test_wrong_magic(self):
        volumes.write_volume(self.path, make_phantom(0, 16))
        self._rewrite_header(magic='HVOL2')
        with self.assertRaises(HeaderError):
            volumes.read_volume(self.path)

    def test_missing_keys(self):
        volumes.write_volume(self.path, make_phantom(0, 16))
        with open(self.path, 'w') as fp:
            json.dump({'magic': 'HVOL1'}, fp)
        with self.assertRaises(HeaderError) as ctx:
            volumes.read_volume(self.path)
        self.assertIn('crc32', str(ctx.exception))

    def test_invalid_json(self):
        with open(self.path, 'w') as fp:
            fp.write('{"magic": ')
        with self.assertRaises(HeaderError):
            volumes.read_volume(self.path)

    def test_invalid_extents(self):
        volumes.write_volume(self.path, make_phantom(0, 16))
        self._rewrite_header(extents=[16, 16])
        with self.assertRaises(HeaderError):
            volumes.read_volume(self.path)

    def test_truncated(self):
        volumes.write_volume(self.path, make_phantom(0, 16))
        with open(self.path + '.img', 'r+b') as fp:
            fp.truncate(1000)
        with self.assertRaises(TruncatedDataError) as ctx:
            volumes.read_volume(self.path)
        self.assertIn('holds 1000 bytes, expected %d' % (4 * 4 * 16 ** 3), str(ctx.exception))

    def test_checksum(self):
        volumes.write_volume(self.path, make_phantom(0, 16))
        with open(self.path + '.lbl', 'r+b') as fp:
            first = fp.read(1)
            fp.seek(0)
            fp.write(bytes([first[0] ^ 1]))
        with self.assertRaises(ChecksumError):
            volumes.read_volume(self.path)

    def test_list_volumes(self):
        for name in ('b.hvol', 'a.hvol'):
            volumes.write_volume(os.path.join(self.tmp.name, name), make_phantom(0, 16))
        self.assertEqual(['a.hvol', 'b.hvol'],
                         [os.path.basename(p) for p in volumes.list_volumes(self.tmp.name)])
