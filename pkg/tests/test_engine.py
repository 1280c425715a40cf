"""Autodiff engine: per-op gradients against finite differences, plus the
stop-gradient and convolution contracts."""

import numpy as np
import pytest

from vidfactor.engine import Tensor, no_grad, ops


def fd_grads(build_scalar, tensors, step=1e-6):
    """Central finite differences of a scalar builder w.r.t. each tensor."""
    grads = []
    for t in tensors:
        flat = t.data.reshape(-1)
        g = np.zeros_like(flat)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + step
            f_plus = build_scalar().item()
            flat[i] = saved - step
            f_minus = build_scalar().item()
            flat[i] = saved
            g[i] = (f_plus - f_minus) / (2 * step)
        grads.append(g.reshape(t.data.shape))
    return grads


def check_op(build_scalar, tensors, tol=1e-6):
    for t in tensors:
        t.zero_grad()
    loss = build_scalar()
    loss.backward()
    for t, fd in zip(tensors, fd_grads(build_scalar, tensors)):
        analytic = np.zeros_like(t.data) if t.grad is None else t.grad
        np.testing.assert_allclose(analytic, fd, rtol=tol, atol=tol)


def leaf(rng, shape, scale=1.0):
    return Tensor(rng.normal(size=shape) * scale, requires_grad=True)


class TestElementwiseGrads:
    def test_add_mul_broadcast(self, rng):
        a, b = leaf(rng, (3, 4)), leaf(rng, (4,))
        check_op(lambda: ops.reduce_sum(ops.mul(ops.add(a, b), a)), [a, b])

    def test_sub_div(self, rng):
        a, b = leaf(rng, (5,)), Tensor(rng.uniform(1.0, 2.0, size=(5,)), requires_grad=True)
        check_op(lambda: ops.reduce_mean(ops.div(ops.sub(a, b), b)), [a, b])

    def test_abs_square_tanh_relu(self, rng):
        a = leaf(rng, (4, 4))
        check_op(lambda: ops.reduce_sum(ops.absolute(a)), [a])
        check_op(lambda: ops.reduce_sum(ops.square(a)), [a])
        check_op(lambda: ops.reduce_sum(ops.tanh(a)), [a])
        check_op(lambda: ops.reduce_sum(ops.relu(a)), [a])

    def test_abs_subgradient_zero_at_zero(self):
        a = Tensor(np.zeros(3), requires_grad=True)
        ops.reduce_sum(ops.absolute(a)).backward()
        assert np.array_equal(a.grad, np.zeros(3))

    def test_maximum(self, rng):
        a, b = leaf(rng, (6,)), leaf(rng, (6,))
        check_op(lambda: ops.reduce_sum(ops.maximum(a, b)), [a, b])

    def test_reductions_with_axes(self, rng):
        a = leaf(rng, (2, 3, 4))
        check_op(lambda: ops.reduce_sum(ops.reduce_mean(a, axis=(1, 2))), [a])
        check_op(lambda: ops.reduce_sum(ops.reduce_sum(a, axis=0, keepdims=True)), [a])


class TestShapeOpGrads:
    def test_reshape_slice_concat_select(self, rng):
        a = leaf(rng, (2, 3, 4, 4, 6))

        def build():
            fg = ops.slice_channels(a, 0, 2)
            bg = ops.slice_channels(a, 2, 4)
            cat = ops.concat_channels([fg, bg])
            first = ops.select_time(cat, 0)
            return ops.reduce_sum(ops.mul(ops.reshape(first, (2, -1)), 0.5))

        check_op(build, [a])

    def test_matmul(self, rng):
        x, w = leaf(rng, (3, 5)), leaf(rng, (5, 2))
        check_op(lambda: ops.reduce_sum(ops.square(ops.matmul(x, w))), [x, w])


class TestConvGrads:
    def test_conv3d(self, rng):
        x = leaf(rng, (2, 3, 4, 4, 2))
        w = leaf(rng, (3, 3, 3, 2, 3), scale=0.5)
        b = leaf(rng, (3,))
        check_op(lambda: ops.reduce_mean(ops.absolute(ops.conv3d(x, w, b))), [x, w, b], tol=1e-5)

    def test_conv2d(self, rng):
        x = leaf(rng, (2, 5, 5, 3))
        w = leaf(rng, (3, 3, 3, 4), scale=0.5)
        b = leaf(rng, (4,))
        check_op(lambda: ops.reduce_mean(ops.square(ops.conv2d(x, w, b))), [x, w, b], tol=1e-5)

    def test_maxpool3d(self, rng):
        x = leaf(rng, (2, 4, 4, 4, 3))
        check_op(lambda: ops.reduce_sum(ops.maxpool3d(x, (2, 2, 2))), [x])

    def test_upsample(self, rng):
        x = leaf(rng, (2, 2, 3, 3, 2))
        check_op(lambda: ops.reduce_mean(ops.square(ops.upsample3d(x, (2, 2, 2)))), [x])
        f = leaf(rng, (2, 3, 3, 2))
        check_op(lambda: ops.reduce_mean(ops.square(ops.upsample2d(f, 2))), [f])

    def test_cross_conv2d(self, rng):
        x = leaf(rng, (2, 5, 5, 3))
        k = leaf(rng, (2, 3, 3, 3), scale=0.5)
        check_op(lambda: ops.reduce_mean(ops.square(ops.cross_conv2d(x, k))), [x, k], tol=1e-5)

    def test_softmax_cross_entropy(self, rng):
        logits = leaf(rng, (4, 5))
        labels = np.array([0, 2, 4, 1])
        check_op(lambda: ops.softmax_cross_entropy(logits, labels), [logits])


def naive_conv3d(x, w, b):
    kt, kh, kw, cin, cout = w.shape
    n, t, h, wd, _ = x.shape
    xp = np.pad(x, ((0, 0), (kt // 2, kt // 2), (kh // 2, kh // 2), (kw // 2, kw // 2), (0, 0)))
    out = np.zeros((n, t, h, wd, cout))
    for bi in range(n):
        for i in range(t):
            for j in range(h):
                for l in range(wd):
                    patch = xp[bi, i : i + kt, j : j + kh, l : l + kw, :]
                    for co in range(cout):
                        out[bi, i, j, l, co] = (patch * w[..., co]).sum() + b[co]
    return out


def test_conv3d_matches_naive(rng):
    x = rng.normal(size=(2, 3, 4, 5, 2))
    w = rng.normal(size=(3, 3, 3, 2, 4))
    b = rng.normal(size=(4,))
    got = ops.conv3d(Tensor(x), Tensor(w), Tensor(b)).data
    np.testing.assert_allclose(got, naive_conv3d(x, w, b), atol=1e-12)


def test_conv3d_channel_mismatch_raises(rng):
    x = Tensor(rng.normal(size=(1, 2, 4, 4, 3)))
    w = Tensor(rng.normal(size=(3, 3, 3, 2, 4)))
    with pytest.raises(ValueError, match="channel mismatch"):
        ops.conv3d(x, w, Tensor(np.zeros(4)))


class TestCrossConvSemantics:
    def test_identity_delta(self, rng):
        x = rng.normal(size=(2, 8, 8, 4)).astype(np.float32)
        k = np.zeros((2, 4, 5, 5), dtype=np.float32)
        k[:, :, 2, 2] = 1.0
        out = ops.cross_conv2d(Tensor(x), Tensor(k)).data
        assert np.array_equal(out, x)

    def test_shifted_delta_moves_content(self):
        # Hand-verified 3x3 case: mass one column right of center pushes the
        # map one column right, zero-filled on the left edge.
        x = np.arange(9, dtype=np.float64).reshape(1, 3, 3, 1)
        k = np.zeros((1, 1, 3, 3))
        k[0, 0, 1, 2] = 1.0
        out = ops.cross_conv2d(Tensor(x), Tensor(k)).data[0, :, :, 0]
        expected = np.array([[0.0, 0.0, 1.0], [0.0, 3.0, 4.0], [0.0, 6.0, 7.0]])
        assert np.array_equal(out, expected)

    def test_uniform_kernel_constant_interior(self):
        x = np.full((1, 7, 7, 2), 1.5)
        k = np.full((1, 2, 3, 3), 1.0 / 9.0)
        out = ops.cross_conv2d(Tensor(x), Tensor(k)).data
        np.testing.assert_allclose(out[0, 1:-1, 1:-1, :], 1.5, atol=1e-12)

    def test_no_cross_channel_mixing(self, rng):
        x = np.zeros((1, 6, 6, 2))
        x[..., 0] = rng.normal(size=(1, 6, 6))
        k = rng.normal(size=(1, 2, 3, 3))
        out = ops.cross_conv2d(Tensor(x), Tensor(k)).data
        assert np.array_equal(out[..., 1], np.zeros((1, 6, 6)))

    def test_channel_mismatch_raises(self, rng):
        with pytest.raises(ValueError, match="mismatch"):
            ops.cross_conv2d(Tensor(np.zeros((1, 4, 4, 3))), Tensor(np.zeros((1, 2, 3, 3))))


class TestStopGradient:
    def test_forward_identity_bit_exact(self, rng):
        a = Tensor(rng.normal(size=(3, 3)), requires_grad=True)
        out = ops.stop_gradient(a)
        assert np.array_equal(out.data, a.data)

    def test_blocked_path_gets_no_gradient(self, rng):
        a = Tensor(rng.normal(size=(4,)), requires_grad=True)
        ops.reduce_sum(ops.stop_gradient(a)).backward()
        assert a.grad is None

    def test_open_path_still_flows(self, rng):
        a = Tensor(rng.normal(size=(4,)), requires_grad=True)
        ops.reduce_sum(ops.add(a, ops.stop_gradient(a))).backward()
        assert np.array_equal(a.grad, np.ones(4))


class TestGraphMechanics:
    def test_no_grad_same_values_no_graph(self, rng):
        a = Tensor(rng.normal(size=(2, 3, 4, 4, 2)), requires_grad=True)
        w = Tensor(rng.normal(size=(3, 3, 3, 2, 2)), requires_grad=True)
        b = Tensor(np.zeros(2), requires_grad=True)
        y1 = ops.conv3d(a, w, b)
        with no_grad():
            y2 = ops.conv3d(a, w, b)
        assert np.array_equal(y1.data, y2.data)
        assert y2._parents == () and not y2.requires_grad

    def test_repeated_use_accumulates(self, rng):
        a = Tensor(rng.normal(size=(3,)), requires_grad=True)
        ops.reduce_sum(ops.add(a, a)).backward()
        assert np.array_equal(a.grad, 2 * np.ones(3))

    def test_forward_deterministic(self, rng):
        x = Tensor(rng.normal(size=(1, 4, 8, 8, 3)).astype(np.float32))
        w = Tensor((rng.normal(size=(3, 3, 3, 3, 4)) * 0.1).astype(np.float32))
        b = Tensor(np.zeros(4, np.float32))
        y1 = ops.maxpool3d(ops.relu(ops.conv3d(x, w, b)), (2, 2, 2)).data
        y2 = ops.maxpool3d(ops.relu(ops.conv3d(x, w, b)), (2, 2, 2)).data
        assert np.array_equal(y1, y2)

    def test_dtype_preserved(self, rng):
        for dtype in (np.float32, np.float64):
            x = Tensor(rng.normal(size=(1, 2, 4, 4, 2)).astype(dtype), requires_grad=True)
            w = Tensor(rng.normal(size=(3, 3, 3, 2, 2)).astype(dtype), requires_grad=True)
            b = Tensor(np.zeros(2, dtype), requires_grad=True)
            y = ops.reduce_mean(ops.absolute(ops.conv3d(x, w, b)))
            assert y.dtype == dtype
            y.backward()
            assert x.grad.dtype == dtype and w.grad.dtype == dtype
