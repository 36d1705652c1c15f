"""Benchmark harness: run models over sequences, time them, score them.

A "model" here is any callable mapping a [1, 3, h, w] float tensor in
[0, 1] to its [1, 3, scale*h, scale*w] counterpart, carrying ``.scale`` and
``.name`` attributes.  The harness owns everything around that call: frame
decoding, color conversion, metric evaluation, runtime measurement (which
deliberately excludes I/O and conversions), and leaderboard emission.
"""
from __future__ import annotations

import csv
import io
import math
import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator

import numpy as np

from . import metrics as qm
from .engine.tensor import Tensor
from .media import FrameBuffer, rgb_to_yuv420, yuv420_to_rgb
from .models import builders, checkpoint, networks, resample
from .score import ScoreParams, q_score

# -- models -----------------------------------------------------------------


class InterpModel:
    """Classical resampler behind the model interface (no weights)."""

    def __init__(self, kernel: str, scale: int, name: str | None = None):
        if scale < 1:
            raise ValueError(f"scale must be >= 1, got {scale}")
        self.kernel = kernel
        self.scale = scale
        self.name = name or kernel

    def __call__(self, x: Tensor) -> Tensor:
        arr = x.data
        n, c, h, w = arr.shape
        out_hw = (h * self.scale, w * self.scale)
        out = np.empty((n, c) + out_hw, dtype=arr.dtype)
        for i in range(n):
            for j in range(c):
                out[i, j] = resample.resize_plane(
                    arr[i, j].astype(np.float64), out_hw, self.kernel)
        return Tensor(np.clip(out, 0.0, 1.0))


_BASELINES = {
    "bicubic": "cubic",
    "lanczos4": "lanczos4",
}


def make_model(name: str, scale: int, checkpoint_path=None, seed: int = 0):
    """Build a ready-to-run model: a network (fresh or from a checkpoint)
    or a classical baseline."""
    if name in _BASELINES:
        return InterpModel(_BASELINES[name], scale, name)
    spec = builders.build(name, scale)
    if checkpoint_path is not None:
        return checkpoint.load_checkpoint(checkpoint_path, spec)
    return networks.Network.init(spec, seed=seed)


def model_names() -> list[str]:
    return sorted(builders.BUILDERS) + sorted(_BASELINES)


# -- frame <-> tensor -------------------------------------------------------

def frame_to_tensor(frame: FrameBuffer) -> Tensor:
    """Decode any frame layout to a [1, 3, h, w] float32 tensor in [0, 1]."""
    if frame.layout == "yuv420":
        frame = yuv420_to_rgb(frame)
    if frame.layout == "rgb8":
        arr = frame.rgb()
    else:  # y8: replicate the gray plane
        arr = np.repeat(frame.y()[:, :, None], 3, axis=2)
    chw = arr.astype(np.float32).transpose(2, 0, 1) / np.float32(255.0)
    return Tensor(chw[None])


def tensor_to_frame(t: Tensor, layout: str) -> FrameBuffer:
    """Encode a [1, 3, h, w] tensor in [0, 1] back to the given layout."""
    arr = t.data[0].transpose(1, 2, 0)
    u8 = np.clip(np.floor(arr * 255.0 + 0.5), 0, 255).astype(np.uint8)
    if layout == "rgb8":
        return FrameBuffer.from_rgb(u8)
    if layout == "yuv420":
        return rgb_to_yuv420(FrameBuffer.from_rgb(u8))
    if layout == "y8":
        return FrameBuffer.from_y(
            np.clip(np.floor(arr.mean(axis=2) * 255.0 + 0.5),
                    0, 255).astype(np.uint8))
    raise ValueError(f"unknown layout {layout!r}")


def run_sequence(model, frames: Iterable[FrameBuffer]
                 ) -> Iterator[FrameBuffer]:
    """Lazily upscale a stream of frames (memory stays O(one frame))."""
    for frame in frames:
        x = frame_to_tensor(frame)
        y = model(x)
        yield tensor_to_frame(y, frame.layout)


# -- runtime ----------------------------------------------------------------

@dataclass(frozen=True)
class RuntimeSample:
    """Per-repetition forward seconds plus summary statistics."""

    seconds: tuple[float, ...]
    lr_hw: tuple[int, int]
    out_hw: tuple[int, int]

    @property
    def median(self) -> float:
        return statistics.median(self.seconds)

    @property
    def cv(self) -> float:
        mean = statistics.fmean(self.seconds)
        if mean == 0.0:
            return 0.0
        return statistics.stdev(self.seconds) / mean \
            if len(self.seconds) > 1 else 0.0


def summarize_runtime(seconds) -> tuple[float, float]:
    """(median, coefficient of variation) of raw timing samples."""
    seconds = tuple(float(s) for s in seconds)
    if not seconds:
        raise ValueError("no timing samples")
    sample = RuntimeSample(seconds, (0, 0), (0, 0))
    return sample.median, sample.cv


def measure_runtime(model, frame, warmup: int = 5,
                    reps: int = 30, seed: int = 0,
                    clock: Callable[[], float] = time.perf_counter
                    ) -> RuntimeSample:
    """Time ``model``; excludes I/O, conversion, and weight loading.

    ``frame`` is either a FrameBuffer or an (h, w) pair, in which case a
    fixed random input is synthesized.  The same tensor is reused across
    warmup and timed repetitions, so only the forward pass sits between
    the clock reads.
    """
    if reps < 3:
        raise ValueError(f"reps must be >= 3, got {reps}")
    if isinstance(frame, FrameBuffer):
        x = frame_to_tensor(frame)
        h, w = frame.height, frame.width
    else:
        h, w = frame
        rng = np.random.default_rng(seed)
        x = Tensor(rng.random((1, 3, h, w), dtype=np.float32))
    out_hw = (h, w)
    for _ in range(warmup):
        out = model(x)
        out_hw = out.shape[2:]
    seconds = []
    for _ in range(reps):
        t0 = clock()
        out = model(x)
        t1 = clock()
        out_hw = out.shape[2:]
        seconds.append(t1 - t0)
    return RuntimeSample(tuple(seconds), (h, w), tuple(out_hw))


# -- metric evaluation -------------------------------------------------------

@dataclass
class MetricReport:
    """Per-frame and aggregate quality metrics for a sequence pair."""

    plane: str
    ws_psnr: list[float]
    ws_ssim: list[float]
    psnr: list[float]
    ssim: list[float]

    @staticmethod
    def _mean_db(values: list[float]) -> float:
        if all(math.isinf(v) for v in values):
            return math.inf
        return statistics.fmean(min(v, 100.0) for v in values)

    @property
    def mean_ws_psnr(self) -> float:
        return self._mean_db(self.ws_psnr)

    @property
    def mean_psnr(self) -> float:
        return self._mean_db(self.psnr)

    @property
    def mean_ws_ssim(self) -> float:
        return statistics.fmean(self.ws_ssim)

    @property
    def mean_ssim(self) -> float:
        return statistics.fmean(self.ssim)


def _frame_planes(frame: FrameBuffer, plane: str) -> list[np.ndarray]:
    if plane == "y":
        return [frame.y().astype(np.float64)]
    if plane == "rgb-mean":
        if frame.layout == "yuv420":
            frame = yuv420_to_rgb(frame)
        if frame.layout == "y8":
            return [frame.y().astype(np.float64)]
        rgb = frame.rgb().astype(np.float64)
        return [rgb[..., i] for i in range(3)]
    raise ValueError(f"unknown metric plane {plane!r} (y or rgb-mean)")


def _pair_metrics(ref: FrameBuffer, test: FrameBuffer,
                  plane: str) -> tuple[float, float, float, float]:
    refs = _frame_planes(ref, plane)
    tests = _frame_planes(test, plane)
    # PSNR pools the (weighted) MSE across planes before the dB conversion;
    # SSIM values average directly.
    ws = statistics.fmean(qm.ws_mse(r, t) for r, t in zip(refs, tests))
    plain = statistics.fmean(qm.mse(r, t) for r, t in zip(refs, tests))
    return (
        qm.mse_to_db(ws),
        statistics.fmean(qm.ws_ssim(r, t) for r, t in zip(refs, tests)),
        qm.mse_to_db(plain),
        statistics.fmean(qm.ssim(r, t) for r, t in zip(refs, tests)),
    )


def evaluate_pair(ref_frames, test_frames, plane: str = "y",
                  workers: int | None = None) -> MetricReport:
    """Frame-aligned metrics between a reference and a test sequence."""
    refs = list(ref_frames)
    tests = list(test_frames)
    if len(refs) != len(tests):
        raise ValueError(
            f"sequence length mismatch: {len(refs)} vs {len(tests)}")
    if not refs:
        raise ValueError("empty sequences")
    for i, (r, t) in enumerate(zip(refs, tests)):
        if (r.width, r.height) != (t.width, t.height):
            raise ValueError(
                f"frame {i} size mismatch: ref {r.width}x{r.height} vs "
                f"test {t.width}x{t.height}")
    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(
                lambda pair: _pair_metrics(pair[0], pair[1], plane),
                zip(refs, tests)))
    else:
        rows = [_pair_metrics(r, t, plane) for r, t in zip(refs, tests)]
    return MetricReport(
        plane=plane,
        ws_psnr=[r[0] for r in rows],
        ws_ssim=[r[1] for r in rows],
        psnr=[r[2] for r in rows],
        ssim=[r[3] for r in rows],
    )


# -- leaderboard --------------------------------------------------------------

_LB_FIELDS = ("team", "scale", "ws_psnr", "ws_ssim", "runtime_s",
              "bd_br_pct", "g_flops", "params_k")


@dataclass(frozen=True)
class LeaderboardEntry:
    """One measured leaderboard row.  Q is never stored; it is recomputed
    from (ws_psnr, runtime_s) with the active score parameters."""

    team: str
    scale: int
    ws_psnr: float
    ws_ssim: float | None = None
    runtime_s: float | None = None
    bd_br_pct: float | None = None
    g_flops: float | None = None
    params_k: float | None = None

    def q(self, params: ScoreParams) -> float | None:
        if self.runtime_s is None:
            return None
        return q_score(self.ws_psnr, self.runtime_s, params)


def entries_from_published(scale: int) -> list[LeaderboardEntry]:
    from .score import published_results

    return [LeaderboardEntry(r.team, r.scale, r.ws_psnr, r.ws_ssim,
                             r.runtime_s, r.bd_br_pct, r.g_flops, r.params_k)
            for r in published_results(scale)]


def rank_entries(entries, params: ScoreParams) -> list[LeaderboardEntry]:
    """Q descending; ties break toward lower runtime; unscored rows last."""
    entries = list(entries)
    scales = {e.scale for e in entries}
    if len(scales) > 1:
        raise ValueError(f"mixed scales in one leaderboard: {sorted(scales)}")

    def key(e: LeaderboardEntry):
        q = e.q(params)
        if q is None:
            return (1, 0.0, -e.ws_psnr)
        return (0, -q, e.runtime_s)

    return sorted(entries, key=key)


def _fmt(x, digits=4) -> str:
    if x is None:
        return ""
    if isinstance(x, int):
        return str(x)
    return f"{x:.{digits}f}".rstrip("0").rstrip(".")


def emit_leaderboard_markdown(entries, params: ScoreParams) -> str:
    ranked = rank_entries(entries, params)
    lines = [
        "| Rank | Method | Scale | WS-PSNR (dB) | WS-SSIM | Runtime (s) | "
        "Score Q | BD-BR vs anchor (%) | G-FLOPs | Params (K) |",
        "|------|--------|-------|--------------|---------|-------------|"
        "---------|---------------------|---------|------------|",
    ]
    for i, e in enumerate(ranked):
        q = e.q(params)
        team = f"**{e.team}** (winner)" if i == 0 and q is not None else e.team
        lines.append(
            f"| {i + 1} | {team} | x{e.scale} | {e.ws_psnr:.3f} | "
            f"{_fmt(e.ws_ssim)} | {_fmt(e.runtime_s)} | "
            f"{'' if q is None else f'{q:.2f}'} | {_fmt(e.bd_br_pct, 2)} | "
            f"{_fmt(e.g_flops, 3)} | {_fmt(e.params_k, 3)} |")
    return "\n".join(lines) + "\n"


def emit_leaderboard_csv(entries, params: ScoreParams) -> str:
    ranked = rank_entries(entries, params)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(_LB_FIELDS + ("q",))
    for e in ranked:
        q = e.q(params)
        writer.writerow([
            e.team, e.scale, repr(e.ws_psnr),
            "" if e.ws_ssim is None else repr(e.ws_ssim),
            "" if e.runtime_s is None else repr(e.runtime_s),
            "" if e.bd_br_pct is None else repr(e.bd_br_pct),
            "" if e.g_flops is None else repr(e.g_flops),
            "" if e.params_k is None else repr(e.params_k),
            "" if q is None else f"{q:.6f}",
        ])
    return out.getvalue()


def parse_leaderboard_csv(text: str) -> list[LeaderboardEntry]:
    """Inverse of :func:`emit_leaderboard_csv` (the q column is derived,
    so it is ignored on input)."""
    reader = csv.DictReader(io.StringIO(text))
    need = set(_LB_FIELDS)
    have = set(reader.fieldnames or ())
    if not need <= have:
        raise ValueError(f"leaderboard CSV missing columns "
                         f"{sorted(need - have)}")
    entries = []
    for row in reader:
        def opt(key):
            val = row[key].strip()
            return None if val == "" else float(val)

        entries.append(LeaderboardEntry(
            team=row["team"], scale=int(row["scale"]),
            ws_psnr=float(row["ws_psnr"]), ws_ssim=opt("ws_ssim"),
            runtime_s=opt("runtime_s"), bd_br_pct=opt("bd_br_pct"),
            g_flops=opt("g_flops"), params_k=opt("params_k")))
    return entries
