"""Randomized property suites: inverses, scale contracts, FFT identities."""
import numpy as np
from hypothesis import given, settings, strategies as st

from odsr.engine import ops
from odsr.engine.tensor import Tensor
from odsr.models import builders, networks

CASES = settings(max_examples=200, deadline=None)


def rand_nchw(seed, n, c, h, w, dtype=np.float32):
    return np.random.default_rng(seed).standard_normal(
        (n, c, h, w)).astype(dtype)


class TestShuffleInverses:
    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           n=st.integers(1, 3),
           c_out=st.integers(1, 4),
           r=st.integers(2, 4),
           h=st.integers(1, 6),
           w=st.integers(1, 6))
    def test_unshuffle_inverts_shuffle(self, seed, n, c_out, r, h, w):
        x = rand_nchw(seed, n, c_out * r * r, h, w)
        y = ops.pixel_unshuffle(ops.pixel_shuffle(Tensor(x), r), r)
        np.testing.assert_array_equal(y.data, x)

    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           n=st.integers(1, 3),
           c=st.integers(1, 4),
           r=st.integers(2, 4),
           h=st.integers(1, 5),
           w=st.integers(1, 5))
    def test_shuffle_inverts_unshuffle(self, seed, n, c, r, h, w):
        x = rand_nchw(seed, n, c, h * r, w * r)
        y = ops.pixel_shuffle(ops.pixel_unshuffle(Tensor(x), r), r)
        np.testing.assert_array_equal(y.data, x)

    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           r=st.integers(2, 4),
           h=st.integers(1, 5),
           w=st.integers(1, 5))
    def test_shuffle_preserves_values(self, seed, r, h, w):
        # rearrangement only: same multiset of values, same sum
        x = rand_nchw(seed, 1, r * r, h, w)
        y = ops.pixel_shuffle(Tensor(x), r).data
        assert y.shape == (1, 1, h * r, w * r)
        np.testing.assert_array_equal(np.sort(y.ravel()),
                                      np.sort(x.ravel()))


NAMES = sorted(builders.BUILDERS)
_NET_CACHE = {}


def cached_net(name, scale):
    key = (name, scale)
    if key not in _NET_CACHE:
        _NET_CACHE[key] = networks.Network.init(builders.build(name, scale),
                                                seed=0)
    return _NET_CACHE[key]


class TestBuilderScaleContract:
    @CASES
    @given(idx=st.integers(0, len(NAMES) - 1),
           scale=st.sampled_from((2, 4)),
           h=st.integers(8, 14),
           w=st.integers(8, 14),
           n=st.integers(1, 2),
           seed=st.integers(0, 2**32 - 1))
    def test_output_is_scale_times_input(self, idx, scale, h, w, n, seed):
        net = cached_net(NAMES[idx], scale)
        m = net.spec.hw_multiple
        h, w = max(h, net.spec.min_hw), max(w, net.spec.min_hw)
        h, w = h - h % m, w - w % m
        x = rand_nchw(seed, n, 3, h, w)
        y = net(Tensor(x))
        assert y.shape == (n, 3, scale * h, scale * w)
        assert y.dtype == np.float32
        assert np.isfinite(y.data).all()

    @CASES
    @given(idx=st.integers(0, len(NAMES) - 1),
           scale=st.sampled_from((2, 4)),
           seed=st.integers(0, 2**32 - 1))
    def test_constraint_violations_raise_not_misshape(self, idx, scale,
                                                      seed):
        net = cached_net(NAMES[idx], scale)
        if net.spec.min_hw > 1:
            small = net.spec.min_hw - 1
            with np.testing.assert_raises(ValueError):
                net(Tensor(rand_nchw(seed, 1, 3, small, small)))
        if net.spec.hw_multiple > 1:
            odd = net.spec.hw_multiple * 4 + 1
            with np.testing.assert_raises(ValueError):
                net(Tensor(rand_nchw(seed, 1, 3, odd, odd)))


class TestFft:
    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           n=st.integers(1, 2),
           c=st.integers(1, 3),
           h=st.integers(1, 12),
           w=st.integers(1, 12))
    def test_roundtrip(self, seed, n, c, h, w):
        x = rand_nchw(seed, n, c, h, w, dtype=np.float64)
        back = ops.ifft2_rc(ops.fft2_rc(Tensor(x)))
        np.testing.assert_allclose(back.data, x, atol=1e-10)

    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           c=st.integers(1, 3),
           h=st.integers(1, 12),
           w=st.integers(1, 12))
    def test_parseval(self, seed, c, h, w):
        x = rand_nchw(seed, 1, c, h, w, dtype=np.float64)
        z = ops.fft2_rc(Tensor(x)).data
        spec_energy = float((z ** 2).sum())  # |Re|^2 + |Im|^2 over all bins
        space_energy = float((x ** 2).sum())
        np.testing.assert_allclose(spec_energy, space_energy * h * w,
                                   rtol=1e-10)

    @CASES
    @given(seed=st.integers(0, 2**32 - 1),
           h=st.integers(2, 10),
           w=st.integers(2, 10))
    def test_linearity(self, seed, h, w):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((1, 1, h, w))
        b = rng.standard_normal((1, 1, h, w))
        alpha = float(rng.uniform(-2, 2))
        lhs = ops.fft2_rc(Tensor(a + alpha * b)).data
        rhs = ops.fft2_rc(Tensor(a)).data + alpha * ops.fft2_rc(
            Tensor(b)).data
        np.testing.assert_allclose(lhs, rhs, atol=1e-9)
