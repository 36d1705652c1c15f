"""Differentiable operations over :class:`~odsr.engine.tensor.Tensor`.

Every op computes eagerly with numpy and, when a tape is active, records a
VJP closure.  Broadcasting follows numpy rules for the elementwise ops;
convolution and friends are NCHW.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import erf

from .tensor import Tensor, active_tape

# im2col buffers larger than this many elements are processed in row bands.
_COL_BUDGET = 1 << 24

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def _pair(a, b) -> tuple[Tensor, Tensor]:
    """Coerce the non-Tensor operand, keeping the Tensor operand's dtype.

    Keeps python-scalar constants from upcasting float32 graphs to float64.
    """
    if isinstance(a, Tensor):
        if isinstance(b, Tensor):
            return a, b
        return a, Tensor(np.asarray(b, dtype=a.data.dtype))
    return Tensor(np.asarray(a, dtype=b.data.dtype)), b


def _record(inputs: tuple[Tensor, ...], out: Tensor, vjp) -> Tensor:
    tape = active_tape()
    if tape is not None:
        tape.record(inputs, out, vjp)
    return out


def _unbroadcast(g: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum ``g`` down to ``shape`` (inverse of numpy broadcasting)."""
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


# -- elementwise arithmetic -----------------------------------------------

def add(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data + b.data)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return _record((a, b), out, vjp)


def sub(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data - b.data)

    def vjp(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return _record((a, b), out, vjp)


def mul(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data * b.data)

    def vjp(g):
        return (_unbroadcast(g * b.data, a.shape),
                _unbroadcast(g * a.data, b.shape))

    return _record((a, b), out, vjp)


def div(a, b) -> Tensor:
    a, b = _pair(a, b)
    out = Tensor(a.data / b.data)

    def vjp(g):
        return (_unbroadcast(g / b.data, a.shape),
                _unbroadcast(-g * a.data / (b.data * b.data), b.shape))

    return _record((a, b), out, vjp)


def neg(a: Tensor) -> Tensor:
    out = Tensor(-a.data)
    return _record((a,), out, lambda g: (-g,))


def square(a: Tensor) -> Tensor:
    out = Tensor(a.data * a.data)
    return _record((a,), out, lambda g: (g * (2.0 * a.data),))


def sqrt(a: Tensor) -> Tensor:
    root = np.sqrt(a.data)
    out = Tensor(root)
    return _record((a,), out, lambda g: (g * (0.5 / root),))


def absolute(a: Tensor) -> Tensor:
    out = Tensor(np.abs(a.data))
    return _record((a,), out, lambda g: (g * np.sign(a.data),))


def exp(a: Tensor) -> Tensor:
    val = np.exp(a.data)
    out = Tensor(val)
    return _record((a,), out, lambda g: (g * val,))


# -- reductions -----------------------------------------------------------

def _restore_axes(g: np.ndarray, shape, axis, keepdims) -> np.ndarray:
    if axis is None:
        return np.broadcast_to(g, shape)
    axes = (axis,) if isinstance(axis, int) else tuple(axis)
    axes = tuple(a % len(shape) for a in axes)
    if not keepdims:
        expanded = list(g.shape)
        for a in sorted(axes):
            expanded.insert(a, 1)
        g = g.reshape(expanded)
    return np.broadcast_to(g, shape)


def tsum(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.sum(axis=axis, keepdims=keepdims))

    def vjp(g):
        return (_restore_axes(g, a.shape, axis, keepdims).astype(
            a.data.dtype, copy=False),)

    return _record((a,), out, vjp)


def tmean(a: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    out = Tensor(a.data.mean(axis=axis, keepdims=keepdims))
    count = a.size / out.size

    def vjp(g):
        full = _restore_axes(g, a.shape, axis, keepdims)
        return ((full / count).astype(a.data.dtype, copy=False),)

    return _record((a,), out, vjp)


# -- activations ----------------------------------------------------------

def relu(a: Tensor) -> Tensor:
    out = Tensor(np.maximum(a.data, 0))
    return _record((a,), out, lambda g: (g * (a.data > 0),))


def leaky_relu(a: Tensor, slope: float = 0.1) -> Tensor:
    out = Tensor(np.where(a.data > 0, a.data, slope * a.data))

    def vjp(g):
        return (g * np.where(a.data > 0, 1.0, slope).astype(g.dtype),)

    return _record((a,), out, vjp)


def gelu(a: Tensor) -> Tensor:
    """Exact-erf GELU: x * Phi(x)."""
    x = a.data
    phi = 0.5 * (1.0 + erf(x * _INV_SQRT2))
    out = Tensor((x * phi).astype(x.dtype, copy=False))

    def vjp(g):
        dens = np.exp(-0.5 * x * x) * _INV_SQRT2PI
        return ((g * (phi + x * dens)).astype(x.dtype, copy=False),)

    return _record((a,), out, vjp)


# -- convolution ----------------------------------------------------------

@dataclass(frozen=True)
class ConvParams:
    """Bundled convolution parameters (weights [out_ch, in_ch/g, kh, kw])."""

    weight: Tensor
    bias: Tensor | None = None
    stride: int = 1
    padding: int = 0
    groups: int = 1

    def __post_init__(self):
        if self.weight.ndim != 4:
            raise ValueError(f"weight must be 4-D, got {self.weight.shape}")
        oc = self.weight.shape[0]
        if self.groups < 1 or oc % self.groups:
            raise ValueError(f"out_ch {oc} not divisible by groups {self.groups}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1, got {self.stride}")
        if self.padding < 0:
            raise ValueError(f"padding must be >= 0, got {self.padding}")
        if self.bias is not None and self.bias.shape != (oc,):
            raise ValueError(
                f"bias shape {self.bias.shape} does not match out_ch {oc}")

    @property
    def out_ch(self) -> int:
        return self.weight.shape[0]

    @property
    def in_ch(self) -> int:
        return self.weight.shape[1] * self.groups

    @property
    def kernel(self) -> tuple[int, int]:
        return self.weight.shape[2], self.weight.shape[3]


def _corr2d(x: np.ndarray, w: np.ndarray, stride: int, padding: int,
            groups: int) -> np.ndarray:
    """Grouped strided cross-correlation, NCHW x [oc, ic/g, kh, kw]."""
    n, ci, h, wd = x.shape
    co, cig, kh, kw = w.shape
    s, p, g = stride, padding, groups
    oh = (h + 2 * p - kh) // s + 1
    ow = (wd + 2 * p - kw) // s + 1
    if oh < 1 or ow < 1:
        raise ValueError(
            f"kernel {kh}x{kw} does not fit input {h}x{wd} with padding {p}")
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    out = np.empty((n, co, oh, ow), dtype=x.dtype)
    band = max(1, min(oh, _COL_BUDGET // max(1, n * ow * ci * kh * kw)))
    wm = w.reshape(g, co // g, cig * kh * kw)
    for r0 in range(0, oh, band):
        r1 = min(r0 + band, oh)
        rows = xp[:, :, r0 * s:(r1 - 1) * s + kh, :]
        win = sliding_window_view(rows, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
        win = win.reshape(n, g, cig, r1 - r0, ow, kh, kw)
        cols = win.transpose(1, 0, 3, 4, 2, 5, 6).reshape(
            g, n * (r1 - r0) * ow, cig * kh * kw)
        prod = cols @ wm.transpose(0, 2, 1)
        out[:, :, r0:r1, :] = prod.reshape(
            g, n, r1 - r0, ow, co // g).transpose(1, 0, 4, 2, 3).reshape(
            n, co, r1 - r0, ow)
    return out


def _corr2d_wgrad(x: np.ndarray, gout: np.ndarray, kh: int, kw: int,
                  stride: int, padding: int, groups: int) -> np.ndarray:
    n, ci, h, wd = x.shape
    _, co, oh, ow = gout.shape
    s, p, g = stride, padding, groups
    cig = ci // g
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
    xp = xp[:, :, :(oh - 1) * s + kh, :(ow - 1) * s + kw]
    win = sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
    win = win.reshape(n, g, cig, oh, ow, kh, kw)
    cols = win.transpose(1, 0, 3, 4, 2, 5, 6).reshape(
        g, n * oh * ow, cig * kh * kw)
    gm = gout.reshape(n, g, co // g, oh, ow).transpose(1, 0, 3, 4, 2).reshape(
        g, n * oh * ow, co // g)
    wg = gm.transpose(0, 2, 1) @ cols
    return np.ascontiguousarray(wg.reshape(co, cig, kh, kw))


def _swap_flip(w: np.ndarray, groups: int) -> np.ndarray:
    """Per-group swap of in/out channel roles plus spatial flip."""
    co, cig, kh, kw = w.shape
    g = groups
    wg = w.reshape(g, co // g, cig, kh, kw)
    return np.ascontiguousarray(
        wg.transpose(0, 2, 1, 3, 4).reshape(g * cig, co // g, kh, kw)
        [:, :, ::-1, ::-1])


def _corr2d_xgrad(gout: np.ndarray, w: np.ndarray, stride: int, padding: int,
                  in_hw: tuple[int, int], groups: int) -> np.ndarray:
    n, co, oh, ow = gout.shape
    h, wd = in_hw
    _, cig, kh, kw = w.shape
    s, p = stride, padding
    if kh - 1 - p < 0 or kw - 1 - p < 0:
        raise ValueError(f"padding {p} larger than kernel-1 is unsupported")
    if s > 1:
        gd = np.zeros((n, co, (oh - 1) * s + 1, (ow - 1) * s + 1),
                      dtype=gout.dtype)
        gd[:, :, ::s, ::s] = gout
    else:
        gd = gout
    extra_h = h + 2 * p - kh - (oh - 1) * s
    extra_w = wd + 2 * p - kw - (ow - 1) * s
    gp = np.pad(gd, ((0, 0), (0, 0),
                     (kh - 1 - p, kh - 1 - p + extra_h),
                     (kw - 1 - p, kw - 1 - p + extra_w)))
    return _corr2d(gp, _swap_flip(w, groups), stride=1, padding=0,
                   groups=groups)


def conv2d(x: Tensor, p: ConvParams) -> Tensor:
    """2-D grouped convolution (cross-correlation convention)."""
    if x.ndim != 4:
        raise ValueError(f"conv2d input must be NCHW, got shape {x.shape}")
    if x.shape[1] != p.in_ch:
        raise ValueError(
            f"input has {x.shape[1]} channels, ConvParams expects {p.in_ch}")
    w, b = p.weight, p.bias
    val = _corr2d(x.data, w.data, p.stride, p.padding, p.groups)
    if b is not None:
        val = val + b.data[None, :, None, None]
    out = Tensor(val)
    inputs = (x, w) if b is None else (x, w, b)

    def vjp(g):
        gx = _corr2d_xgrad(g, w.data, p.stride, p.padding, x.shape[2:],
                           p.groups)
        gw = _corr2d_wgrad(x.data, g, w.shape[2], w.shape[3], p.stride,
                           p.padding, p.groups)
        if b is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2, 3))

    return _record(inputs, out, vjp)


def conv_transpose2d(x: Tensor, weight: Tensor, bias: Tensor | None = None,
                     stride: int = 1, padding: int = 0,
                     output_padding: int = 0) -> Tensor:
    """2-D transposed convolution, weights [in_ch, out_ch, kh, kw].

    Adjoint of conv2d with the same stride/padding; ``output_padding``
    resolves the output-size ambiguity for stride > 1 (must be < stride).
    groups are not supported.
    """
    if x.ndim != 4:
        raise ValueError(f"input must be NCHW, got shape {x.shape}")
    ci, co, kh, kw = weight.shape
    if x.shape[1] != ci:
        raise ValueError(
            f"input has {x.shape[1]} channels, weight expects {ci}")
    s, p, op = stride, padding, output_padding
    if not 0 <= op < max(s, 1):
        raise ValueError(f"output_padding {op} must be in [0, stride)")
    n, _, h, wd = x.shape
    if (h - 1) * s - 2 * p + kh + op < 1 or (wd - 1) * s - 2 * p + kw + op < 1:
        raise ValueError("transposed conv output would be empty")
    if kh - 1 - p < 0 or kw - 1 - p < 0:
        raise ValueError(f"padding {p} larger than kernel-1 is unsupported")
    if s > 1:
        xd = np.zeros((n, ci, (h - 1) * s + 1, (wd - 1) * s + 1),
                      dtype=x.data.dtype)
        xd[:, :, ::s, ::s] = x.data
    else:
        xd = x.data
    xp = np.pad(xd, ((0, 0), (0, 0),
                     (kh - 1 - p, kh - 1 - p + op),
                     (kw - 1 - p, kw - 1 - p + op)))
    wf = np.ascontiguousarray(
        weight.data.transpose(1, 0, 2, 3)[:, :, ::-1, ::-1])
    val = _corr2d(xp, wf, stride=1, padding=0, groups=1)
    if bias is not None:
        val = val + bias.data[None, :, None, None]
    out = Tensor(val)
    inputs = (x, weight) if bias is None else (x, weight, bias)

    def vjp(g):
        gp = np.pad(g, ((0, 0), (0, 0), (p, p), (p, p))) if p else g
        gx = _corr2d(gp, weight.data, stride=s, padding=0, groups=1)
        gx = gx[:, :, :h, :wd]
        gw = _corr2d_wgrad(gp, x.data, kh, kw, stride=s, padding=0, groups=1)
        gw = gw.reshape(ci, co, kh, kw)
        if bias is None:
            return gx, gw
        return gx, gw, g.sum(axis=(0, 2, 3))

    return _record(inputs, out, vjp)


# -- pixel shuffle --------------------------------------------------------

def pixel_shuffle(x: Tensor, r: int) -> Tensor:
    """Rearrange [n, c*r^2, h, w] -> [n, c, h*r, w*r].

    out(n, c, y, x) = in(n, c*r^2 + (y mod r)*r + (x mod r), y//r, x//r).
    """
    n, c, h, w = x.shape
    if r < 1 or c % (r * r):
        raise ValueError(f"channels {c} not divisible by r^2 = {r * r}")
    c2 = c // (r * r)
    val = x.data.reshape(n, c2, r, r, h, w).transpose(
        0, 1, 4, 2, 5, 3).reshape(n, c2, h * r, w * r)
    out = Tensor(np.ascontiguousarray(val))

    def vjp(g):
        return (_unshuffle_array(g, r),)

    return _record((x,), out, vjp)


def _unshuffle_array(x: np.ndarray, r: int) -> np.ndarray:
    n, c, h, w = x.shape
    val = x.reshape(n, c, h // r, r, w // r, r).transpose(
        0, 1, 3, 5, 2, 4).reshape(n, c * r * r, h // r, w // r)
    return np.ascontiguousarray(val)


def pixel_unshuffle(x: Tensor, r: int) -> Tensor:
    """Inverse of :func:`pixel_shuffle`: [n, c, h*r, w*r] -> [n, c*r^2, h, w]."""
    n, c, h, w = x.shape
    if r < 1 or h % r or w % r:
        raise ValueError(f"spatial dims {h}x{w} not divisible by r = {r}")
    out = Tensor(_unshuffle_array(x.data, r))

    def vjp(g):
        c2 = c * r * r
        val = g.reshape(n, c, r, r, h // r, w // r).transpose(
            0, 1, 4, 2, 5, 3).reshape(n, c2 // (r * r), h, w)
        return (np.ascontiguousarray(val),)

    return _record((x,), out, vjp)


# -- pooling and resampling -----------------------------------------------

def _pool_gather_indices(size: int, out_size: int):
    """floor/ceil adaptive window edges, padded to equal length by clipping."""
    i = np.arange(out_size)
    starts = (i * size) // out_size
    ends = -((-(i + 1) * size) // out_size)  # ceil
    length = int((ends - starts).max())
    idx = starts[:, None] + np.arange(length)[None, :]
    return np.minimum(idx, (ends - 1)[:, None]), starts, ends


def adaptive_max_pool(x: Tensor, out_hw: tuple[int, int]) -> Tensor:
    """Adaptive max pooling with floor/ceil window edges per output cell."""
    n, c, h, w = x.shape
    oh, ow = out_hw
    if not (1 <= oh <= h and 1 <= ow <= w):
        raise ValueError(f"output {oh}x{ow} invalid for input {h}x{w}")
    idx_h, _, _ = _pool_gather_indices(h, oh)
    idx_w, _, _ = _pool_gather_indices(w, ow)
    rows = x.data[:, :, idx_h, :]              # n c oh Lh w
    rowmax = rows.max(axis=3)                  # n c oh w
    gath = rowmax[:, :, :, idx_w]              # n c oh ow Lw
    out = Tensor(np.ascontiguousarray(gath.max(axis=4)))

    if active_tape() is None:
        return out

    arg_w = gath.argmax(axis=4)                              # n c oh ow
    src_w = idx_w[np.arange(ow)[None, None, None, :], arg_w]  # abs col
    rows_at = rows[
        np.arange(n)[:, None, None, None],
        np.arange(c)[None, :, None, None],
        np.arange(oh)[None, None, :, None], :,
        src_w]                                               # n c oh ow Lh
    arg_h = rows_at.argmax(axis=4)
    src_h = idx_h[np.arange(oh)[None, None, :, None], arg_h]

    def vjp(g):
        gx = np.zeros_like(x.data)
        ni = np.broadcast_to(np.arange(n)[:, None, None, None], g.shape)
        ci = np.broadcast_to(np.arange(c)[None, :, None, None], g.shape)
        np.add.at(gx, (ni, ci, src_h, src_w), g)
        return (gx,)

    return _record((x,), out, vjp)


def upsample_nearest(x: Tensor, out_hw: tuple[int, int]) -> Tensor:
    """Nearest-neighbour resize: out(y, x) = in(y*h//th, x*w//tw)."""
    n, c, h, w = x.shape
    th, tw = out_hw
    if th < 1 or tw < 1:
        raise ValueError(f"target size {th}x{tw} must be positive")
    iy = (np.arange(th) * h) // th
    ix = (np.arange(tw) * w) // tw
    out = Tensor(np.ascontiguousarray(x.data[:, :, iy][:, :, :, ix]))

    def vjp(g):
        gx = np.zeros_like(x.data)
        yy = np.broadcast_to(iy[None, None, :, None], g.shape)
        xx = np.broadcast_to(ix[None, None, None, :], g.shape)
        ni = np.broadcast_to(np.arange(n)[:, None, None, None], g.shape)
        ci = np.broadcast_to(np.arange(c)[None, :, None, None], g.shape)
        np.add.at(gx, (ni, ci, yy, xx), g)
        return (gx,)

    return _record((x,), out, vjp)


# -- channel plumbing -----------------------------------------------------

def concat_channels(parts: list[Tensor]) -> Tensor:
    if not parts:
        raise ValueError("concat_channels needs at least one tensor")
    out = Tensor(np.concatenate([t.data for t in parts], axis=1))
    sizes = [t.shape[1] for t in parts]
    bounds = np.cumsum([0] + sizes)

    def vjp(g):
        return tuple(np.ascontiguousarray(g[:, a:b])
                     for a, b in zip(bounds[:-1], bounds[1:]))

    return _record(tuple(parts), out, vjp)


def slice_channels(x: Tensor, start: int, stop: int) -> Tensor:
    c = x.shape[1]
    if not 0 <= start < stop <= c:
        raise ValueError(f"slice [{start}:{stop}] invalid for {c} channels")
    out = Tensor(np.ascontiguousarray(x.data[:, start:stop]))

    def vjp(g):
        gx = np.zeros_like(x.data)
        gx[:, start:stop] = g
        return (gx,)

    return _record((x,), out, vjp)


def repeat_channels(x: Tensor, times: int) -> Tensor:
    """Repeat each channel ``times`` consecutively (interleaved repeat)."""
    if times < 1:
        raise ValueError(f"times must be >= 1, got {times}")
    n, c, h, w = x.shape
    out = Tensor(np.ascontiguousarray(np.repeat(x.data, times, axis=1)))

    def vjp(g):
        return (g.reshape(n, c, times, h, w).sum(axis=2),)

    return _record((x,), out, vjp)


# -- spectral ops ---------------------------------------------------------

def fft2_rc(x: Tensor) -> Tensor:
    """2-D FFT of each channel plane, packed as [n, 2c, h, w] = Re || Im."""
    if x.ndim != 4:
        raise ValueError(f"input must be NCHW, got shape {x.shape}")
    n, c, h, w = x.shape
    spec = np.fft.fft2(x.data, axes=(2, 3))
    val = np.concatenate([spec.real, spec.imag], axis=1).astype(
        x.data.dtype, copy=False)
    out = Tensor(val)

    def vjp(g):
        gc = g[:, :c] + 1j * g[:, c:]
        gx = np.fft.ifft2(gc, axes=(2, 3)).real * (h * w)
        return (gx.astype(x.data.dtype, copy=False),)

    return _record((x,), out, vjp)


def ifft2_rc(z: Tensor) -> Tensor:
    """Real part of the normalized inverse FFT of a packed Re || Im tensor."""
    if z.ndim != 4 or z.shape[1] % 2:
        raise ValueError(f"input must be [n, 2c, h, w], got shape {z.shape}")
    n, c2, h, w = z.shape
    c = c2 // 2
    zc = z.data[:, :c] + 1j * z.data[:, c:]
    val = np.fft.ifft2(zc, axes=(2, 3)).real.astype(z.data.dtype, copy=False)
    out = Tensor(val)

    def vjp(g):
        spec = np.fft.fft2(g, axes=(2, 3)) / (h * w)
        gz = np.concatenate([spec.real, spec.imag], axis=1)
        return (gz.astype(z.data.dtype, copy=False),)

    return _record((z,), out, vjp)


# -- composite: global response normalization -----------------------------

def grn(x: Tensor, gamma: Tensor, beta: Tensor, eps: float = 1e-6) -> Tensor:
    """Global response normalization: x * gamma * (g / mean_c(g)) + beta + x.

    g is the per-channel spatial L2 norm. gamma/beta are [1, c, 1, 1] and
    initialize to zero so the layer starts as identity.
    """
    gnorm = sqrt(tsum(square(x), axis=(2, 3), keepdims=True))
    denom = add(tmean(gnorm, axis=1, keepdims=True), eps)
    nx = div(gnorm, denom)
    return add(add(mul(gamma, mul(x, nx)), beta), x)


# Arithmetic dunders route through the ops so tapes see them.
Tensor.__add__ = add
Tensor.__radd__ = lambda self, other: add(other, self)
Tensor.__sub__ = sub
Tensor.__rsub__ = lambda self, other: sub(other, self)
Tensor.__mul__ = mul
Tensor.__rmul__ = lambda self, other: mul(other, self)
Tensor.__truediv__ = div
Tensor.__rtruediv__ = lambda self, other: div(other, self)
Tensor.__neg__ = neg
Tensor.__abs__ = absolute
