"""Composite challenge score Q combining quality and runtime.

    q_hat = (ws_psnr - psnr_min) / (psnr_max - psnr_min)        (unclamped)
    c     = 1                         if runtime <= threshold
            exp(rate * (threshold - runtime))   otherwise
    Q     = (beta * q_hat + (1 - beta) * c) * 100

Defaults follow the 2024 360-degree video SR challenge: beta = 0.5,
rate = 30/s, threshold = 0.016 s (60 fps on a 2K frame), psnr_max 31 dB for
the x2 track and 30 dB for x4, psnr_min = the bicubic baseline of the
track.  q_hat is deliberately not clamped: the published x4 scores only
reproduce with sub-minimum entries allowed to go negative and runtimes
credited multiplicatively.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class ScoreParams:
    psnr_min: float
    psnr_max: float
    beta: float = 0.5
    penalty_rate: float = 30.0
    rt_threshold: float = 0.016

    def __post_init__(self):
        if not self.psnr_max > self.psnr_min:
            raise ValueError(
                f"psnr_max {self.psnr_max} must exceed psnr_min "
                f"{self.psnr_min}")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [0, 1], got {self.beta}")
        if self.rt_threshold <= 0:
            raise ValueError(
                f"rt_threshold must be positive, got {self.rt_threshold}")
        if self.penalty_rate < 0:
            raise ValueError(
                f"penalty_rate must be >= 0, got {self.penalty_rate}")

    @classmethod
    def for_scale(cls, scale: int) -> "ScoreParams":
        """Track defaults: x2 -> (28.8, 31) dB, x4 -> (27.790, 30) dB."""
        if scale == 2:
            return cls(psnr_min=28.8, psnr_max=31.0)
        if scale == 4:
            return cls(psnr_min=27.790, psnr_max=30.0)
        raise ValueError(f"no track defaults for scale {scale}")


def q_hat(ws_psnr: float, params: ScoreParams) -> float:
    """Normalized quality score (can exceed [0, 1] by design)."""
    return (ws_psnr - params.psnr_min) / (params.psnr_max - params.psnr_min)


def runtime_score(runtime_s: float, params: ScoreParams) -> float:
    """Runtime credit: full up to the threshold, exponential decay past it."""
    if runtime_s < 0:
        raise ValueError(f"runtime must be >= 0, got {runtime_s}")
    if runtime_s <= params.rt_threshold:
        return 1.0
    return math.exp(params.penalty_rate * (params.rt_threshold - runtime_s))


def q_score(ws_psnr: float, runtime_s: float, params: ScoreParams) -> float:
    """The composite score on the 0-100 scale (unclamped)."""
    return (params.beta * q_hat(ws_psnr, params)
            + (1.0 - params.beta) * runtime_score(runtime_s, params)) * 100.0


def score_surface(params: ScoreParams, psnr_values, runtime_values
                  ) -> list[tuple[float, float, float]]:
    """Grid of (ws_psnr, runtime, Q) rows, psnr-major order."""
    rows = []
    for p in psnr_values:
        for t in runtime_values:
            rows.append((float(p), float(t), q_score(p, t, params)))
    return rows


def score_surface_csv(params: ScoreParams, psnr_values,
                      runtime_values) -> str:
    lines = ["ws_psnr,runtime_s,q"]
    for p, t, q in score_surface(params, psnr_values, runtime_values):
        lines.append(f"{p:.6g},{t:.6g},{q:.6f}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class PublishedResult:
    """One row of the published challenge test-set leaderboard."""

    team: str
    scale: int
    ws_psnr: float
    ws_ssim: float
    runtime_s: float | None
    q_printed: float | None
    bd_br_pct: float | None
    g_flops: float | None
    params_k: float | None


CHALLENGE_RESULTS: tuple[PublishedResult, ...] = (
    PublishedResult("VACV", 2, 29.589, 0.8217, 0.0057, 81.25, -15.32, 45.641, 315.120),
    PublishedResult("ATHENA", 2, 29.422, 0.8177, 0.0009, 79.03, -14.62, 15.340, 105.216),
    PublishedResult("IVCL", 2, 29.645, 0.8219, 0.0298, 58.26, -16.91, 122.297, 212.652),
    PublishedResult("FFCIR", 2, 29.761, 0.8224, 0.0420, 45.61, -17.85, 216.608, 383.124),
    PublishedResult("FSRCNN", 2, 29.280, 0.8149, 0.0042, 77.14, -9.88, 38.102, 24.683),
    PublishedResult("RT4KSR", 2, 29.367, 0.8192, 0.0046, 78.29, -14.11, 22.423, 151.992),
    PublishedResult("SwinIR", 2, 29.761, 0.8250, 1.5232, 13.53, -18.01, 544.667, 910.152),
    PublishedResult("Lanczos", 2, 28.797, 0.8110, None, None, -1.04, None, None),
    PublishedResult("Bicubic", 2, 28.743, 0.8117, None, None, 0.0, None, None),
    PublishedResult("FFCIR", 4, 29.083, 0.8090, 0.0120, 79.25, -42.82, 55.857, 394.824),
    PublishedResult("IVCL", 4, 28.920, 0.8061, 0.0050, 75.57, -38.78, 33.409, 232.128),
    PublishedResult("VACV", 4, 28.918, 0.8047, 0.0058, 75.52, -38.76, 45.641, 315.120),
    PublishedResult("ATHENA", 4, 28.425, 0.7960, 0.0004, 64.37, -26.77, 6.858, 188.160),
    PublishedResult("FSRCNN", 4, 28.317, 0.7912, 0.0010, 61.92, -12.51, 33.334, 24.683),
    PublishedResult("RT4KSR", 4, 28.602, 0.7991, 0.0032, 68.37, -32.97, 6.739, 183.240),
    PublishedResult("SwinIR", 4, 29.065, 0.8099, 0.4458, 28.85, -41.12, 136.167, 929.628),
    PublishedResult("Lanczos", 4, 27.795, 0.7814, None, None, -3.96, None, None),
    PublishedResult("Bicubic", 4, 27.790, 0.7831, None, None, 0.0, None, None),
)


def published_results(scale: int | None = None) -> list[PublishedResult]:
    rows = [r for r in CHALLENGE_RESULTS
            if scale is None or r.scale == scale]
    if not rows:
        raise ValueError(f"no published results for scale {scale}")
    return rows


def _fit_two_point(p1: PublishedResult,
                   p2: PublishedResult) -> tuple[float, float]:
    """Solve (psnr_min, psnr_max) from two sub-threshold rows with C = 1."""
    qh1 = p1.q_printed / 100.0 * 2.0 - 1.0
    qh2 = p2.q_printed / 100.0 * 2.0 - 1.0
    span = (p1.ws_psnr - p2.ws_psnr) / (qh1 - qh2)
    pmin = p1.ws_psnr - qh1 * span
    return pmin, pmin + span


def q_discrepancy_note() -> str:
    """Markdown reconciliation of the published Q columns with the formula.

    The x4 column reproduces exactly from the published constants; the x2
    column does not, and this note pins down how far off it is and what
    constants the sub-threshold x2 rows actually fit.
    """
    lines = [
        "# Reproducing the published Q scores",
        "",
        "The composite score is Q = (beta * q_hat + (1-beta) * C) * 100 with",
        "beta = 0.5, q_hat = (ws_psnr - min)/(max - min), and C = 1 for",
        "runtimes at or under 0.016 s, else exp(30 * (0.016 - runtime)).",
        "",
        "## x4 track: exact",
        "",
        "With min = 27.790 dB (the bicubic x4 baseline) and max = 30 dB,",
        "every published x4 Q value reproduces to the printed 2 decimals:",
        "",
        "| team | ws_psnr | runtime | published Q | computed Q |",
        "|------|---------|---------|-------------|------------|",
    ]
    p4 = ScoreParams.for_scale(4)
    for r in published_results(4):
        if r.runtime_s is None:
            continue
        q = q_score(r.ws_psnr, r.runtime_s, p4)
        lines.append(f"| {r.team} | {r.ws_psnr:.3f} | {r.runtime_s:.4f} | "
                     f"{r.q_printed:.2f} | {q:.2f} |")
    p2 = ScoreParams.for_scale(2)
    lines += [
        "",
        "## x2 track: not reproducible from the published constants",
        "",
        "The x2 scoring constants given alongside the formula are",
        f"min = {p2.psnr_min} dB, max = {p2.psnr_max} dB.  Under them the",
        "published x2 Q column does not reproduce; e.g. the winning row:",
        "",
    ]
    vacv = next(r for r in published_results(2) if r.team == "VACV")
    q_vacv = q_score(vacv.ws_psnr, vacv.runtime_s, p2)
    lines += [
        f"- VACV (29.589 dB, 0.0057 s): computed Q = {q_vacv:.2f}, "
        f"published 81.25 (gap {81.25 - q_vacv:+.2f}).",
        "",
        "Solving min/max from the two leading sub-threshold rows instead",
        "(VACV 81.25 and ATHENA 79.03, both with full runtime credit):",
        "",
    ]
    sub = [r for r in published_results(2)
           if r.runtime_s is not None and r.runtime_s <= p2.rt_threshold]
    pmin, pmax = _fit_two_point(sub[0], sub[1])
    fit = ScoreParams(psnr_min=pmin, psnr_max=pmax)
    lines += [
        f"- best fit: min = {pmin:.3f} dB, max = {pmax:.3f} dB.",
        "",
        "That pair reproduces *every* sub-threshold x2 row:",
        "",
        "| team | published Q | Q with fitted (min, max) |",
        "|------|-------------|--------------------------|",
    ]
    for r in sub:
        lines.append(f"| {r.team} | {r.q_printed:.2f} | "
                     f"{q_score(r.ws_psnr, r.runtime_s, fit):.2f} |")
    lines += [
        "",
        "but fails for the over-threshold rows, which imply mutually",
        "inconsistent penalty rates when solved per row:",
        "",
        "| team | runtime | published Q | implied penalty rate (per s) |",
        "|------|---------|-------------|------------------------------|",
    ]
    for r in published_results(2):
        if r.runtime_s is None or r.runtime_s <= p2.rt_threshold:
            continue
        qh = q_hat(r.ws_psnr, fit)
        c = r.q_printed / 100.0 * 2.0 - qh
        if c > 0:
            rate = math.log(c) / (p2.rt_threshold - r.runtime_s)
            rate_txt = f"{rate:.1f}"
        else:
            rate_txt = ("impossible (needs negative runtime credit "
                        f"C = {c:.3f})")
        lines.append(f"| {r.team} | {r.runtime_s:.4f} | {r.q_printed:.2f} | "
                     f"{rate_txt} |")
    lines += [
        "",
        "Conclusion: the x4 Q column follows the published formula exactly;",
        "the x2 column was produced with an unpublished psnr_min near",
        f"{pmin:.3f} dB (not the track's bicubic baseline of 28.743 dB, nor",
        "the 28.8 dB used in the score-surface figure) and, for rows past",
        "the real-time threshold, penalty rates that cannot all equal the",
        "documented 30/s.  This package therefore scores with the published",
        "constants and treats the x2 column as unreproducible.",
        "",
    ]
    return "\n".join(lines)
