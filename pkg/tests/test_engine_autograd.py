"""Finite-difference validation of every differentiable op and full nets."""
import numpy as np
import pytest

from conftest import check_gradients, rel_err

from odsr.engine import ops
from odsr.engine.tensor import Tape, Tensor, backward
from odsr.models import builders
from odsr.models.networks import Network


def rnd(*shape, seed=0, lo=-1.0, hi=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=shape)


def away_from_kinks(*shape, seed=0, margin=0.1):
    """Uniform samples with |x| >= margin (keeps relu/abs differentiable)."""
    x = rnd(*shape, seed=seed)
    return np.where(np.abs(x) < margin, np.sign(x) * margin + x, x)


class TestElementwiseGrads:
    def test_add_sub_broadcast(self):
        a, b = rnd(2, 3, 2, 2, seed=1), rnd(1, 3, 1, 1, seed=2)
        check_gradients(lambda x, y: ops.add(x, y), [a, b])
        check_gradients(lambda x, y: ops.sub(x, y), [a, b])

    def test_mul_div(self):
        a = rnd(3, 4, seed=3)
        b = rnd(3, 4, seed=4) + 2.0
        check_gradients(lambda x, y: ops.mul(x, y), [a, b])
        check_gradients(lambda x, y: ops.div(x, y), [a, b])
        check_gradients(lambda x: ops.div(1.0, x), [b])

    def test_unary(self):
        a = np.abs(rnd(3, 5, seed=5)) + 0.3
        check_gradients(ops.neg, [a])
        check_gradients(ops.square, [a])
        check_gradients(ops.sqrt, [a])
        check_gradients(ops.exp, [a])
        check_gradients(ops.absolute, [away_from_kinks(3, 5, seed=6)])

    def test_reductions(self):
        a = rnd(2, 3, 4, 4, seed=7)
        check_gradients(lambda x: ops.tsum(x, axis=(2, 3)), [a])
        check_gradients(lambda x: ops.tmean(x, axis=1, keepdims=True), [a])
        check_gradients(ops.tmean, [a])

    def test_activations(self):
        a = away_from_kinks(4, 6, seed=8)
        check_gradients(ops.relu, [a])
        check_gradients(lambda x: ops.leaky_relu(x, 0.1), [a])
        check_gradients(ops.gelu, [rnd(4, 6, seed=9)])


class TestConvGrads:
    def test_conv2d_all_inputs(self):
        x = rnd(2, 3, 5, 6, seed=10)
        w = rnd(4, 3, 3, 3, seed=11)
        b = rnd(4, seed=12)

        def fn(xt, wt, bt):
            p = ops.ConvParams(weight=wt, bias=bt, stride=1, padding=1,
                               groups=1)
            return ops.conv2d(xt, p)

        check_gradients(fn, [x, w, b])

    def test_conv2d_strided_grouped(self):
        x = rnd(1, 4, 6, 6, seed=13)
        w = rnd(4, 2, 3, 3, seed=14)

        def fn(xt, wt):
            p = ops.ConvParams(weight=wt, bias=None, stride=2, padding=1,
                               groups=2)
            return ops.conv2d(xt, p)

        check_gradients(fn, [x, w])

    def test_conv2d_depthwise(self):
        x = rnd(1, 3, 5, 5, seed=15)
        w = rnd(3, 1, 3, 3, seed=16)

        def fn(xt, wt):
            p = ops.ConvParams(weight=wt, bias=None, stride=1, padding=1,
                               groups=3)
            return ops.conv2d(xt, p)

        check_gradients(fn, [x, w])

    def test_conv_transpose_all_inputs(self):
        x = rnd(1, 2, 4, 4, seed=17)
        w = rnd(2, 3, 4, 4, seed=18)
        b = rnd(3, seed=19)

        def fn(xt, wt, bt):
            return ops.conv_transpose2d(xt, wt, bt, stride=2, padding=1,
                                        output_padding=1)

        check_gradients(fn, [x, w, b])


class TestShapeGrads:
    def test_pixel_shuffle_unshuffle(self):
        x = rnd(1, 8, 3, 4, seed=20)
        check_gradients(lambda t: ops.pixel_shuffle(t, 2), [x])
        y = rnd(1, 2, 6, 8, seed=21)
        check_gradients(lambda t: ops.pixel_unshuffle(t, 2), [y])

    def test_adaptive_max_pool(self):
        # distinct values keep the argmax stable under FD nudges
        rng = np.random.default_rng(22)
        x = rng.permutation(7 * 9 * 2).reshape(1, 2, 7, 9) * 0.01
        check_gradients(lambda t: ops.adaptive_max_pool(t, (3, 4)), [x])

    def test_upsample_nearest(self):
        x = rnd(1, 2, 3, 4, seed=23)
        check_gradients(lambda t: ops.upsample_nearest(t, (7, 9)), [x])

    def test_channel_ops(self):
        a, b = rnd(1, 2, 3, 3, seed=24), rnd(1, 3, 3, 3, seed=25)
        check_gradients(lambda x, y: ops.concat_channels([x, y]), [a, b])
        check_gradients(lambda x: ops.slice_channels(x, 1, 3), [b])
        check_gradients(lambda x: ops.repeat_channels(x, 3), [a])


class TestSpectralGrads:
    def test_fft2_rc(self):
        x = rnd(1, 2, 4, 4, seed=26)
        check_gradients(ops.fft2_rc, [x])

    def test_ifft2_rc(self):
        z = rnd(1, 4, 4, 4, seed=27)
        check_gradients(ops.ifft2_rc, [z])

    def test_fft_weighted_composition(self):
        x = rnd(1, 1, 4, 4, seed=28)
        r = rnd(1, 2, 4, 4, seed=29)

        def fn(t):
            return ops.mul(ops.fft2_rc(t), Tensor(r))

        check_gradients(fn, [x])

    def test_grn(self):
        x = rnd(2, 3, 4, 4, seed=30)
        gamma = rnd(1, 3, 1, 1, seed=31)
        beta = rnd(1, 3, 1, 1, seed=32)
        check_gradients(lambda a, g, b: ops.grn(a, g, b), [x, gamma, beta])


class TestFullNetworks:
    """Sampled finite differences through each complete architecture."""

    NAMES = ("ffcir", "cspsr", "vacv", "athena", "fsrcnn")

    @pytest.mark.parametrize("name", NAMES)
    def test_sampled_fd(self, name):
        scale = 2
        net = Network.init(builders.build(name, scale), seed=0,
                           dtype=np.float64)
        rng = np.random.default_rng(41)
        x = rng.uniform(0.0, 1.0, size=(1, 3, 16, 16))
        cot = rng.standard_normal((1, 3, 32, 32))

        def loss_value():
            y = net(Tensor(x))
            return float((y.data * cot).sum())

        with Tape() as tape:
            y = net(Tensor(x))
            loss = ops.tsum(ops.mul(y, Tensor(cot)))
        grads = backward(tape, loss)

        def central_diff(flat, k, step):
            orig = flat[k]
            flat[k] = orig + step
            hi = loss_value()
            flat[k] = orig - step
            lo = loss_value()
            flat[k] = orig
            return (hi - lo) / (2.0 * step)

        names = sorted(net.params)
        picks = [names[int(i)] for i in
                 np.linspace(0, len(names) - 1, 6).round()]
        for pname in picks:
            t = net.params[pname]
            flat = t.data.reshape(-1)
            gflat = grads[t].data.reshape(-1)
            # floor the relative error by the parameter's gradient scale so
            # FD roundoff on a near-zero coordinate cannot dominate
            floor = max(1e-3 * float(np.abs(gflat).max()), 1e-8)
            for k in (int(np.abs(gflat).argmax()),
                      int(rng.integers(flat.size))):
                ad = float(gflat[k])
                # walk the step ladder: large steps beat roundoff on
                # tiny-gradient coordinates, small steps clear relu kinks;
                # a wrong VJP disagrees at every step
                best = np.inf
                for step in (1e-4, 1e-5, 1e-6, 1e-7, 1e-8):
                    fd = central_diff(flat, k, step)
                    best = min(best,
                               abs(fd - ad) / max(abs(fd), abs(ad), floor))
                    if best < 1e-4:
                        break
                assert best < 1e-4, (
                    f"{name}.{pname}[{k}]: autograd {ad:.8g} never matched "
                    f"FD (best rel {best:.3g})")

    def test_input_gradient_full_net(self):
        net = Network.init(builders.build("athena", 2), seed=1,
                           dtype=np.float64)
        rng = np.random.default_rng(42)
        x = rng.uniform(0.2, 0.8, size=(1, 3, 8, 8))
        xt = Tensor(x.copy())
        with Tape() as tape:
            loss = ops.tsum(ops.square(net(xt)))
        g = backward(tape, loss)[xt].data
        for _ in range(4):
            i = tuple(int(v) for v in (0, rng.integers(3),
                                       rng.integers(8), rng.integers(8)))
            orig = x[i]
            x[i] = orig + 1e-6
            hi = float(np.sum(net(Tensor(x)).data ** 2))
            x[i] = orig - 1e-6
            lo = float(np.sum(net(Tensor(x)).data ** 2))
            x[i] = orig
            fd = (hi - lo) / 2e-6
            err = abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-6)
            assert err < 1e-4

    def test_no_dead_parameters_any_architecture(self):
        for name in self.NAMES:
            net = Network.init(builders.build(name, 2), seed=3,
                               dtype=np.float64)
            rng = np.random.default_rng(7)
            x = Tensor(rng.uniform(0.0, 1.0, size=(1, 3, 12, 12)))
            with Tape() as tape:
                loss = ops.tsum(ops.square(net(x)))
            grads = backward(tape, loss)
            for pname, t in net.params.items():
                assert t in grads, f"{name}.{pname} missing from grads"
                assert float(np.abs(grads[t].data).max()) > 0.0, \
                    f"{name}.{pname} gradient identically zero"
