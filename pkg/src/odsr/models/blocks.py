"""Layer descriptors for the SR networks.

A network is a tuple of descriptors applied in order.  Descriptors are
frozen dataclasses that know three things: their parameter table
(:meth:`param_specs`), their forward computation against a flat parameter
dict, and their FLOP cost.  Channel bookkeeping is validated as the specs
are walked, so a mis-wired builder fails at construction time rather than
mid-forward.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

from ..engine import ops
from ..engine.tensor import Tensor


class ParamSpec(NamedTuple):
    name: str
    shape: tuple[int, ...]
    fan_in: int | None  # None means zero-init


class Shape(NamedTuple):
    c: int
    h: int
    w: int


def _conv_specs(path: str, c_in: int, c_out: int, k: int, groups: int = 1,
                bias: bool = True) -> list[ParamSpec]:
    fan = (c_in // groups) * k * k
    specs = [ParamSpec(f"{path}.w", (c_out, c_in // groups, k, k), fan)]
    if bias:
        specs.append(ParamSpec(f"{path}.b", (c_out,), None))
    return specs


def _conv(x: Tensor, P: dict[str, Tensor], path: str, stride: int = 1,
          padding: int = 0, groups: int = 1) -> Tensor:
    return ops.conv2d(x, ops.ConvParams(
        P[f"{path}.w"], P.get(f"{path}.b"), stride, padding, groups))


def _act(x: Tensor, kind: str, slope: float) -> Tensor:
    if kind == "gelu":
        return ops.gelu(x)
    if kind == "lrelu":
        return ops.leaky_relu(x, slope)
    if kind == "relu":
        return ops.relu(x)
    raise ValueError(f"unknown activation kind {kind!r}")


def run_layers(layers, x: Tensor, P: dict[str, Tensor], path: str) -> Tensor:
    for i, layer in enumerate(layers):
        x = layer.forward(x, P, f"{path}.{i}")
    return x


def _layers_specs(layers, c: int, path: str) -> tuple[list[ParamSpec], int]:
    specs: list[ParamSpec] = []
    for i, layer in enumerate(layers):
        specs.extend(layer.param_specs(c, f"{path}.{i}"))
        c = layer.out_channels(c)
    return specs, c


def _layers_flops(layers, s: Shape, path_unused: str = "") -> tuple[int, Shape]:
    total = 0
    for layer in layers:
        f, s = layer.flops(s)
        total += f
    return total, s


@dataclass(frozen=True)
class Conv:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    padding: int = 0
    groups: int = 1
    bias: bool = True

    def out_channels(self, c_in: int) -> int:
        if c_in != self.in_ch:
            raise ValueError(f"Conv expects {self.in_ch} channels, got {c_in}")
        return self.out_ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        return _conv_specs(path, self.in_ch, self.out_ch, self.kernel,
                           self.groups, self.bias)

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return _conv(x, P, path, self.stride, self.padding, self.groups)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        oh = (s.h + 2 * self.padding - self.kernel) // self.stride + 1
        ow = (s.w + 2 * self.padding - self.kernel) // self.stride + 1
        macs = (self.in_ch // self.groups) * self.kernel ** 2 \
            * self.out_ch * oh * ow
        return 2 * macs, Shape(self.out_ch, oh, ow)


@dataclass(frozen=True)
class ConvTranspose:
    in_ch: int
    out_ch: int
    kernel: int
    stride: int = 1
    padding: int = 0
    output_padding: int = 0

    def out_channels(self, c_in: int) -> int:
        if c_in != self.in_ch:
            raise ValueError(
                f"ConvTranspose expects {self.in_ch} channels, got {c_in}")
        return self.out_ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        fan = self.out_ch * self.kernel ** 2  # fan-in of the adjoint conv
        return [
            ParamSpec(f"{path}.w",
                      (self.in_ch, self.out_ch, self.kernel, self.kernel),
                      fan),
            ParamSpec(f"{path}.b", (self.out_ch,), None),
        ]

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return ops.conv_transpose2d(
            x, P[f"{path}.w"], P[f"{path}.b"], self.stride, self.padding,
            self.output_padding)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        oh = (s.h - 1) * self.stride - 2 * self.padding + self.kernel \
            + self.output_padding
        ow = (s.w - 1) * self.stride - 2 * self.padding + self.kernel \
            + self.output_padding
        macs = self.in_ch * self.out_ch * self.kernel ** 2 * s.h * s.w
        return 2 * macs, Shape(self.out_ch, oh, ow)


@dataclass(frozen=True)
class Act:
    kind: str = "gelu"
    slope: float = 0.1

    def out_channels(self, c_in: int) -> int:
        return c_in

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        return []

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return _act(x, self.kind, self.slope)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        return s.c * s.h * s.w, s


@dataclass(frozen=True)
class PixelShuffle:
    r: int

    def out_channels(self, c_in: int) -> int:
        if c_in % (self.r * self.r):
            raise ValueError(
                f"PixelShuffle({self.r}) needs channels divisible by "
                f"{self.r * self.r}, got {c_in}")
        return c_in // (self.r * self.r)

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        return []

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return ops.pixel_shuffle(x, self.r)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        return 0, Shape(s.c // (self.r * self.r), s.h * self.r, s.w * self.r)


@dataclass(frozen=True)
class RepeatChannels:
    times: int

    def out_channels(self, c_in: int) -> int:
        return c_in * self.times

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        return []

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return ops.repeat_channels(x, self.times)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        return 0, Shape(s.c * self.times, s.h, s.w)


@dataclass(frozen=True)
class Grn:
    ch: int
    is_norm: bool = field(default=True, init=False)

    def out_channels(self, c_in: int) -> int:
        if c_in != self.ch:
            raise ValueError(f"Grn expects {self.ch} channels, got {c_in}")
        return self.ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        return [ParamSpec(f"{path}.gamma", (1, self.ch, 1, 1), None),
                ParamSpec(f"{path}.beta", (1, self.ch, 1, 1), None)]

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return ops.grn(x, P[f"{path}.gamma"], P[f"{path}.beta"])

    def flops(self, s: Shape) -> tuple[int, Shape]:
        return 5 * s.c * s.h * s.w, s


@dataclass(frozen=True)
class Safm:
    """Spatially-adaptive feature modulation: multi-scale depthwise pyramid
    aggregated by a 1x1 conv, GELU-gated against the block input."""

    ch: int
    levels: int = 4

    def __post_init__(self):
        if self.ch % self.levels:
            raise ValueError(
                f"Safm channels {self.ch} not divisible by {self.levels}")

    def out_channels(self, c_in: int) -> int:
        if c_in != self.ch:
            raise ValueError(f"Safm expects {self.ch} channels, got {c_in}")
        return self.ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        g = self.ch // self.levels
        specs: list[ParamSpec] = []
        for i in range(self.levels):
            specs.extend(_conv_specs(f"{path}.dw{i}", g, g, 3, groups=g))
        specs.extend(_conv_specs(f"{path}.aggr", self.ch, self.ch, 1))
        return specs

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        g = self.ch // self.levels
        h, w = x.shape[2], x.shape[3]
        outs = []
        for i in range(self.levels):
            part = ops.slice_channels(x, i * g, (i + 1) * g)
            if i == 0:
                y = _conv(part, P, f"{path}.dw0", padding=1, groups=g)
            else:
                pooled = ops.adaptive_max_pool(
                    part, (h // 2 ** i, w // 2 ** i))
                y = _conv(pooled, P, f"{path}.dw{i}", padding=1, groups=g)
                y = ops.upsample_nearest(y, (h, w))
            outs.append(y)
        aggr = _conv(ops.concat_channels(outs), P, f"{path}.aggr")
        return ops.mul(ops.gelu(aggr), x)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        g = s.c // self.levels
        total = 0
        for i in range(self.levels):
            hh, ww = s.h // 2 ** i, s.w // 2 ** i
            total += 2 * 9 * g * hh * ww  # depthwise conv
            if i:
                total += g * (hh * ww + s.h * s.w)  # pool + upsample
        total += 2 * s.c * s.c * s.h * s.w  # 1x1 aggregation
        total += 2 * s.c * s.h * s.w  # gate: gelu + multiply
        return total, s


@dataclass(frozen=True)
class Ccm:
    """Convolutional channel mixer: 3x3 expand (2x), GELU, 1x1 project."""

    ch: int
    expand: int = 2

    def out_channels(self, c_in: int) -> int:
        if c_in != self.ch:
            raise ValueError(f"Ccm expects {self.ch} channels, got {c_in}")
        return self.ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        hidden = self.ch * self.expand
        return (_conv_specs(f"{path}.expand", self.ch, hidden, 3)
                + _conv_specs(f"{path}.project", hidden, self.ch, 1))

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        y = ops.gelu(_conv(x, P, f"{path}.expand", padding=1))
        return _conv(y, P, f"{path}.project")

    def flops(self, s: Shape) -> tuple[int, Shape]:
        hidden = self.ch * self.expand
        total = 2 * 9 * self.ch * hidden * s.h * s.w
        total += hidden * s.h * s.w
        total += 2 * hidden * self.ch * s.h * s.w
        return total, s


@dataclass(frozen=True)
class Ffc:
    """Fourier unit summed with a full-width spatial 3x3 convolution.

    Spectral path: fft2 per channel, stack Re/Im (2c), 1x1 conv + GELU in
    the frequency domain, inverse transform's real part.
    """

    ch: int

    def out_channels(self, c_in: int) -> int:
        if c_in != self.ch:
            raise ValueError(f"Ffc expects {self.ch} channels, got {c_in}")
        return self.ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        return (_conv_specs(f"{path}.spatial", self.ch, self.ch, 3)
                + _conv_specs(f"{path}.freq", 2 * self.ch, 2 * self.ch, 1))

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        spatial = _conv(x, P, f"{path}.spatial", padding=1)
        z = ops.fft2_rc(x)
        z = ops.gelu(_conv(z, P, f"{path}.freq"))
        return ops.add(spatial, ops.ifft2_rc(z))

    def flops(self, s: Shape) -> tuple[int, Shape]:
        import math
        total = 2 * 9 * self.ch * self.ch * s.h * s.w
        fft_plane = 5 * s.h * s.w * math.log2(max(2, s.h * s.w))
        total += int(2 * self.ch * fft_plane)  # forward + inverse transforms
        c2 = 2 * self.ch
        total += 2 * c2 * c2 * s.h * s.w + c2 * s.h * s.w
        total += self.ch * s.h * s.w  # sum of paths
        return total, s


@dataclass(frozen=True)
class CspBlock:
    """Cross-stage-partial block: half the channels bypass, half are
    processed by two 3x3 convs, then a 1x1 transition fuses the stages."""

    ch: int
    slope: float = 0.1

    def __post_init__(self):
        if self.ch % 2:
            raise ValueError(f"CspBlock needs even channels, got {self.ch}")

    def out_channels(self, c_in: int) -> int:
        if c_in != self.ch:
            raise ValueError(f"CspBlock expects {self.ch} channels, got {c_in}")
        return self.ch

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        half = self.ch // 2
        return (_conv_specs(f"{path}.conv1", half, half, 3)
                + _conv_specs(f"{path}.conv2", half, half, 3)
                + _conv_specs(f"{path}.transition", self.ch, self.ch, 1))

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        half = self.ch // 2
        keep = ops.slice_channels(x, 0, half)
        y = ops.slice_channels(x, half, self.ch)
        y = ops.leaky_relu(_conv(y, P, f"{path}.conv1", padding=1), self.slope)
        y = ops.leaky_relu(_conv(y, P, f"{path}.conv2", padding=1), self.slope)
        merged = ops.concat_channels([keep, y])
        return ops.leaky_relu(
            _conv(merged, P, f"{path}.transition"), self.slope)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        half = self.ch // 2
        total = 2 * (2 * 9 * half * half * s.h * s.w)
        total += 2 * self.ch * self.ch * s.h * s.w
        total += 3 * self.ch * s.h * s.w  # activations (approx)
        return total, s


@dataclass(frozen=True)
class DownscaleHead:
    """Parallel strided convolutions (one per kernel size) concatenated.

    Each path halves the spatial resolution, so the tail must upscale by
    2 * scale to compensate.
    """

    in_ch: int
    width: int
    kernels: tuple[int, ...] = (3, 5, 7)
    slope: float = 0.1

    def out_channels(self, c_in: int) -> int:
        if c_in != self.in_ch:
            raise ValueError(
                f"DownscaleHead expects {self.in_ch} channels, got {c_in}")
        return self.width * len(self.kernels)

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        self.out_channels(c_in)
        specs: list[ParamSpec] = []
        for k in self.kernels:
            specs.extend(_conv_specs(f"{path}.k{k}", self.in_ch, self.width, k))
        return specs

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        outs = []
        for k in self.kernels:
            y = _conv(x, P, f"{path}.k{k}", stride=2, padding=k // 2)
            outs.append(ops.leaky_relu(y, self.slope))
        return ops.concat_channels(outs)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        total = 0
        out_s = s
        for k in self.kernels:
            p = k // 2
            oh = (s.h + 2 * p - k) // 2 + 1
            ow = (s.w + 2 * p - k) // 2 + 1
            total += 2 * self.in_ch * k * k * self.width * oh * ow
            total += self.width * oh * ow
            out_s = Shape(self.width * len(self.kernels), oh, ow)
        return total, out_s


@dataclass(frozen=True)
class Residual:
    """y = x + body(x); the body must preserve the channel count."""

    body: tuple

    def out_channels(self, c_in: int) -> int:
        _, c_out = _layers_specs(self.body, c_in, "probe")
        if c_out != c_in:
            raise ValueError(
                f"Residual body maps {c_in} -> {c_out} channels")
        return c_in

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        specs, c_out = _layers_specs(self.body, c_in, path)
        if c_out != c_in:
            raise ValueError(
                f"Residual body maps {c_in} -> {c_out} channels")
        return specs

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        return ops.add(run_layers(self.body, x, P, path), x)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        total, out_s = _layers_flops(self.body, s)
        return total + out_s.c * out_s.h * out_s.w, out_s


@dataclass(frozen=True)
class ParallelConcat:
    """Apply each branch to the same input and concatenate the outputs."""

    branches: tuple

    def out_channels(self, c_in: int) -> int:
        return sum(_layers_specs(b, c_in, "probe")[1] for b in self.branches)

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        specs: list[ParamSpec] = []
        for j, branch in enumerate(self.branches):
            s, _ = _layers_specs(branch, c_in, f"{path}.b{j}")
            specs.extend(s)
        return specs

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        outs = [run_layers(b, x, P, f"{path}.b{j}")
                for j, b in enumerate(self.branches)]
        return ops.concat_channels(outs)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        total = 0
        c_out = 0
        last = s
        for branch in self.branches:
            f, bs = _layers_flops(branch, s)
            total += f
            c_out += bs.c
            last = bs
        return total, Shape(c_out, last.h, last.w)


@dataclass(frozen=True)
class UpsampleAddSkip:
    """y = body(x) + nearest_upsample(x, scale); the global SR residual."""

    scale: int
    body: tuple

    def out_channels(self, c_in: int) -> int:
        _, c_out = _layers_specs(self.body, c_in, "probe")
        if c_out != c_in:
            raise ValueError(
                f"UpsampleAddSkip body maps {c_in} -> {c_out} channels")
        return c_in

    def param_specs(self, c_in: int, path: str) -> list[ParamSpec]:
        specs, c_out = _layers_specs(self.body, c_in, path)
        if c_out != c_in:
            raise ValueError(
                f"UpsampleAddSkip body maps {c_in} -> {c_out} channels")
        return specs

    def forward(self, x: Tensor, P, path: str) -> Tensor:
        h, w = x.shape[2], x.shape[3]
        up = ops.upsample_nearest(x, (h * self.scale, w * self.scale))
        return ops.add(run_layers(self.body, x, P, path), up)

    def flops(self, s: Shape) -> tuple[int, Shape]:
        total, out_s = _layers_flops(self.body, s)
        total += 2 * out_s.c * out_s.h * out_s.w  # upsample + add
        return total, out_s


def iter_descriptors(layers, path: str = "net") -> Iterable[tuple[str, object]]:
    """Depth-first walk over every descriptor, including nested bodies."""
    for i, layer in enumerate(layers):
        here = f"{path}.{i}"
        yield here, layer
        if isinstance(layer, (Residual, UpsampleAddSkip)):
            yield from iter_descriptors(layer.body, here)
        elif isinstance(layer, ParallelConcat):
            for j, branch in enumerate(layer.branches):
                yield from iter_descriptors(branch, f"{here}.b{j}")
