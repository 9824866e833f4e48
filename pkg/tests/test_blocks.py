# -*- coding: utf-8 -*-
import numpy as np
from tests import TestCase

from hinet import blocks, gradcheck
from hinet.constants import HYPERDENSE, BASELINE, AXIAL, CORONAL, SAGITTAL
from hinet.errors import ShapeError, IllegalArgumentError, ConfigurationError
from hinet.network import variant_delta
from hinet.tensor import ConvWeights, conv3d, relu


def _random_weights(rng, c_out, c_in, kernel, stride=1, dtype=np.float64):
    return ConvWeights(rng.normal(0, 0.5, (c_out, c_in) + kernel).astype(dtype),
                       rng.normal(0, 0.1, c_out).astype(dtype), stride)


def _random_block(rng, variant, c_in=4, c_b=2, include_input=False):
    p = blocks.BlockParams.zeros(variant, c_in, c_b, include_input, dtype=np.float64)
    for _, k in p.named_weights():
        k.w[...] = rng.normal(0, 0.5, k.w.shape)
        k.b[...] = 0.1
    return p


class ViewConvTestCase(TestCase):
    def test_view_kernel(self):
        self.assertEqual((1, 3, 3), blocks.view_kernel(AXIAL))
        self.assertEqual((3, 1, 3), blocks.view_kernel(CORONAL))
        self.assertEqual((3, 3, 1), blocks.view_kernel(SAGITTAL))
        with self.assertRaises(IllegalArgumentError):
            blocks.view_kernel('oblique')

    def test_kernel_must_match_view(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(1, 2, 3, 3, 3))
        with self.assertRaises(ShapeError):
            blocks.view_conv(x, AXIAL, _random_weights(rng, 2, 2, (3, 1, 3)))
        with self.assertRaises(ShapeError):
            blocks.view_conv(x, SAGITTAL, _random_weights(rng, 2, 2, (3, 3, 3)))

    def test_center_tap_identity(self):
        x = np.random.default_rng(1).normal(size=(1, 2, 3, 4, 5))
        for view in blocks.VIEWS:
            k = ConvWeights.zeros(2, 2, blocks.view_kernel(view), dtype=np.float64)
            center = tuple(e // 2 for e in k.kernel)
            for i in range(2):
                k.w[(i, i) + center] = 1
            self.assertTrue(np.array_equal(relu(x), blocks.view_conv(x, view, k)), view)

    def test_axial_view_acts_per_slice(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(1, 2, 4, 5, 5))
        k = _random_weights(rng, 3, 2, (1, 3, 3))
        out = blocks.view_conv(x, AXIAL, k)
        for z in range(4):
            expected = relu(conv3d(x[:, :, z:z + 1], k))
            self.assertTrue(np.allclose(expected[:, :, 0], out[:, :, z], rtol=0, atol=1e-12), z)

    def test_axial_view_on_z_constant_input(self):
        rng = np.random.default_rng(3)
        plane = rng.normal(size=(1, 2, 1, 5, 5))
        x = np.repeat(plane, 4, axis=2)
        out = blocks.view_conv(x, AXIAL, _random_weights(rng, 2, 2, (1, 3, 3)))
        for z in range(1, 4):
            self.assertTrue(np.allclose(out[:, :, 0], out[:, :, z], rtol=0, atol=1e-12))

    def test_gradient_matches_finite_differences(self):
        errors = gradcheck.check_view_conv(np.random.default_rng(4))
        self.assertEqual(3 * 3, len(errors))
        self.assertLess(max(errors.values()), gradcheck.PRIMITIVE_TOLERANCE)


class BlockTestCase(TestCase):
    def test_zero_weights_identity(self):
        x = np.random.default_rng(5).normal(size=(1, 4, 3, 3, 3)).astype(np.float32)
        self.assertTrue(np.array_equal(x, blocks.hyperdense_block(x, blocks.BlockParams.zeros(HYPERDENSE, 4, 2))))
        self.assertTrue(np.array_equal(x, blocks.baseline_block(x, blocks.BlockParams.zeros(BASELINE, 4, 2))))

    def test_channel_plan(self):
        hyper = blocks.BlockParams.zeros(HYPERDENSE, 8, 4)
        base = blocks.BlockParams.zeros(BASELINE, 8, 4)
        self.assertEqual(12, hyper.stage2_in)
        self.assertEqual(4, base.stage2_in)
        self.assertEqual(20, blocks.BlockParams.zeros(HYPERDENSE, 8, 4, include_input=True).stage2_in)
        for view in blocks.VIEWS:
            self.assertEqual(12, hyper.stage2[view].c_in)
            self.assertEqual(4, base.stage2[view].c_in)
        self.assertEqual((8, 12, 1, 1, 1), hyper.proj.w.shape)

    def test_parameter_difference(self):
        def size(p):
            return sum(k.size for _, k in p.named_weights())
        for c_b in (1, 2, 4):
            delta = size(blocks.BlockParams.zeros(HYPERDENSE, 8, c_b)) - size(blocks.BlockParams.zeros(BASELINE, 8, c_b))
            self.assertEqual(variant_delta(c_b), delta)
            self.assertEqual(54 * c_b * c_b, delta)

    def test_plan_violation(self):
        p = blocks.BlockParams.zeros(HYPERDENSE, 4, 2)
        p.stage2[AXIAL] = ConvWeights.zeros(2, 2, (1, 3, 3))
        with self.assertRaises(ConfigurationError):
            p.validate()
        with self.assertRaises(ConfigurationError):
            blocks.hyperdense_block(np.zeros((1, 4, 2, 2, 2), dtype=np.float32), p)

    def test_variant_mismatch(self):
        x = np.zeros((1, 4, 2, 2, 2), dtype=np.float32)
        with self.assertRaises(IllegalArgumentError):
            blocks.hyperdense_block(x, blocks.BlockParams.zeros(BASELINE, 4, 2))
        with self.assertRaises(IllegalArgumentError):
            blocks.baseline_block(x, blocks.BlockParams.zeros(HYPERDENSE, 4, 2))

    def test_input_channel_mismatch(self):
        with self.assertRaises(ShapeError):
            blocks.hyperdense_block(np.zeros((1, 3, 2, 2, 2), dtype=np.float32),
                                    blocks.BlockParams.zeros(HYPERDENSE, 4, 2))

    def _stage2_after_perturbation(self, variant):
        rng = np.random.default_rng(6)
        p = _random_block(rng, variant)
        x = rng.normal(size=(1, 4, 4, 4, 4))
        _, before = blocks.block_forward(x, p)
        p.stage1[AXIAL].w[0, 0, 0, 1, 1] += 0.5
        _, after = blocks.block_forward(x, p)
        return dict((view, not np.array_equal(b, a))
                    for view, b, a in zip(blocks.VIEWS, before.stage2_pre, after.stage2_pre))

    def test_hyperdense_views_see_each_other(self):
        changed = self._stage2_after_perturbation(HYPERDENSE)
        self.assertEqual({AXIAL: True, CORONAL: True, SAGITTAL: True}, changed)

    def test_baseline_views_stay_separate(self):
        changed = self._stage2_after_perturbation(BASELINE)
        self.assertEqual({AXIAL: True, CORONAL: False, SAGITTAL: False}, changed)

    def test_gradient_matches_finite_differences(self):
        for variant in (HYPERDENSE, BASELINE):
            errors = gradcheck.check_block(np.random.default_rng(7), variant)
            self.assertLess(max(errors.values()), gradcheck.PRIMITIVE_TOLERANCE, variant)

    def test_include_input_gradient(self):
        rng = np.random.default_rng(8)
        p = _random_block(rng, HYPERDENSE, c_in=2, c_b=1, include_input=True)
        x = rng.normal(size=(1, 2, 3, 3, 3))
        out, cache = blocks.block_forward(x, p)
        self.assertEqual(x.shape, out.shape)
        dy = rng.normal(size=out.shape)
        dx, grads = blocks.block_backward(p, cache, dy)

        def objective():
            return float(np.sum(dy * blocks.block_forward(x, p)[0]))
        self.assertLess(gradcheck.relative_error(dx.ravel(), gradcheck.numeric_gradient(objective, x)), 1e-6)
        k = p.stage2[CORONAL]
        self.assertLess(gradcheck.relative_error(grads['stage2.coronal'].w.ravel(),
                                                 gradcheck.numeric_gradient(objective, k.w)), 1e-6)


class TransitionTestCase(TestCase):
    def test_down_transition_shapes(self):
        rng = np.random.default_rng(9)
        k = _random_weights(rng, 8, 4, (3, 3, 3), stride=2)
        self.assertEqual((1, 8, 4, 4, 4), blocks.down_transition(rng.normal(size=(1, 4, 8, 8, 8)), k).shape)
        self.assertEqual((1, 8, 3, 3, 3), blocks.down_transition(rng.normal(size=(1, 4, 5, 5, 5)), k).shape)
        with self.assertRaises(ShapeError):
            blocks.down_transition(rng.normal(size=(1, 4, 1, 4, 4)), k)
        with self.assertRaises(ShapeError):
            blocks.down_transition(rng.normal(size=(1, 4, 4, 4, 4)), _random_weights(rng, 8, 4, (3, 3, 3)))

    def test_up_transition_shapes(self):
        rng = np.random.default_rng(10)
        k = _random_weights(rng, 8, 16, (1, 1, 1))
        out = blocks.up_transition(rng.normal(size=(1, 16, 2, 2, 2)), rng.normal(size=(1, 8, 4, 4, 4)), k)
        self.assertEqual((1, 16, 4, 4, 4), out.shape)
        with self.assertRaises(ShapeError) as ctx:
            blocks.up_transition(rng.normal(size=(1, 16, 2, 2, 2)), rng.normal(size=(1, 8, 6, 6, 6)), k)
        self.assertIn('(1, 8, 6, 6, 6)', str(ctx.exception))

    def test_up_transition_bias_field(self):
        rng = np.random.default_rng(11)
        k = _random_weights(rng, 3, 2, (1, 1, 1))
        skip = rng.normal(size=(1, 1, 4, 4, 4))
        out = blocks.up_transition(np.zeros((1, 2, 2, 2, 2)), skip, k)
        for c in range(3):
            self.assertTrue(np.all(out[0, c] == max(k.b[c], 0.0)))
        self.assertTrue(np.array_equal(skip, out[:, 3:]))

    def test_gradients_match_finite_differences(self):
        for check in (gradcheck.check_down_transition, gradcheck.check_up_transition):
            errors = check(np.random.default_rng(12))
            self.assertLess(max(errors.values()), gradcheck.PRIMITIVE_TOLERANCE, check.__name__)
