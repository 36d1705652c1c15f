"""Spherically weighted quality metrics for equirectangular frames.

An ERP frame oversamples the poles, so per-pixel errors are weighted by the
cosine of latitude: w(i, j) = cos((i + 0.5 - h/2) * pi / h) for row i of an
h-row frame.  WS-PSNR replaces the MSE with the weighted mean, WS-SSIM
weights the valid-window SSIM map at each window center.  Plain PSNR/SSIM
are included for comparison.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d


@dataclass(frozen=True)
class WeightMap:
    """Latitude cosine weights for an h x w equirectangular frame.

    Weights are constant along each row; ``rows`` holds one value per row.
    """

    height: int
    width: int
    rows: np.ndarray

    @classmethod
    def for_frame(cls, height: int, width: int) -> "WeightMap":
        if height < 1 or width < 1:
            raise ValueError(f"frame dims must be positive, got "
                             f"{height}x{width}")
        i = np.arange(height, dtype=np.float64)
        rows = np.cos((i + 0.5 - height / 2.0) * np.pi / height)
        return cls(height, width, rows)

    def as_array(self) -> np.ndarray:
        """Full (h, w) weight array (a broadcast view, do not mutate)."""
        return np.broadcast_to(self.rows[:, None], (self.height, self.width))

    def total(self) -> float:
        return float(self.rows.sum() * self.width)


def _as_plane(x) -> np.ndarray:
    arr = np.asarray(x)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"expected a non-empty 2-D plane, got {arr.shape}")
    return arr.astype(np.float64)


def _resolve_weights(weights, h: int, w: int) -> np.ndarray:
    if weights is None:
        return WeightMap.for_frame(h, w).as_array()
    if isinstance(weights, WeightMap):
        if (weights.height, weights.width) != (h, w):
            raise ValueError(
                f"weight map is {weights.height}x{weights.width}, "
                f"frame is {h}x{w}")
        return weights.as_array()
    arr = np.asarray(weights, dtype=np.float64)
    if arr.shape != (h, w):
        raise ValueError(f"weights shape {arr.shape} != frame {h}x{w}")
    return arr


def ws_mse(ref, test, weights=None) -> float:
    """Latitude-weighted mean squared error of one plane."""
    r = _as_plane(ref)
    t = _as_plane(test)
    if r.shape != t.shape:
        raise ValueError(f"shape mismatch: ref {r.shape} vs test {t.shape}")
    w = _resolve_weights(weights, *r.shape)
    diff = r - t
    return float((w * diff * diff).sum() / w.sum())


def mse(ref, test) -> float:
    """Plain mean squared error of one plane."""
    r = _as_plane(ref)
    t = _as_plane(test)
    if r.shape != t.shape:
        raise ValueError(f"shape mismatch: ref {r.shape} vs test {t.shape}")
    return float(np.mean((r - t) ** 2))


def mse_to_db(value: float, peak: float = 255.0) -> float:
    """10*log10(peak^2 / mse); +inf when the error is exactly zero."""
    if peak <= 0:
        raise ValueError(f"peak must be positive, got {peak}")
    if value < 0:
        raise ValueError(f"mse must be non-negative, got {value}")
    if value == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / value)


def ws_psnr(ref, test, peak: float = 255.0, weights=None) -> float:
    """Weighted-to-spherically-uniform PSNR in dB (+inf for identical)."""
    return mse_to_db(ws_mse(ref, test, weights), peak)


def psnr(ref, test, peak: float = 255.0) -> float:
    """Plain PSNR in dB (+inf for identical)."""
    return mse_to_db(mse(ref, test), peak)


_WIN = 11
_RADIUS = _WIN // 2


def _gaussian_taps(sigma: float = 1.5) -> np.ndarray:
    x = np.arange(_WIN, dtype=np.float64) - _RADIUS
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return g / g.sum()


def ssim_map(ref, test, peak: float = 255.0) -> np.ndarray:
    """Valid-mode SSIM map: shape (h-10, w-10), 11x11 Gaussian sigma 1.5."""
    r = _as_plane(ref)
    t = _as_plane(test)
    if r.shape != t.shape:
        raise ValueError(f"shape mismatch: ref {r.shape} vs test {t.shape}")
    if min(r.shape) < _WIN:
        raise ValueError(
            f"frame {r.shape} smaller than the {_WIN}x{_WIN} SSIM window")
    taps = _gaussian_taps()

    def smooth(img):
        tmp = correlate1d(img, taps, axis=0, mode="nearest")
        return correlate1d(tmp, taps, axis=1, mode="nearest")

    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    mu1 = smooth(r)
    mu2 = smooth(t)
    mu1_sq = mu1 * mu1
    mu2_sq = mu2 * mu2
    mu12 = mu1 * mu2
    s1 = smooth(r * r) - mu1_sq
    s2 = smooth(t * t) - mu2_sq
    s12 = smooth(r * t) - mu12
    full = ((2 * mu12 + c1) * (2 * s12 + c2)) / \
        ((mu1_sq + mu2_sq + c1) * (s1 + s2 + c2))
    return full[_RADIUS:-_RADIUS, _RADIUS:-_RADIUS]


def ws_ssim(ref, test, peak: float = 255.0, weights=None) -> float:
    """SSIM map weighted by latitude cosines at the window centers."""
    smap = ssim_map(ref, test, peak)
    h, w = np.asarray(ref).shape
    wfull = _resolve_weights(weights, h, w)
    wmap = wfull[_RADIUS:-_RADIUS, _RADIUS:-_RADIUS]
    return float((smap * wmap).sum() / wmap.sum())


def ssim(ref, test, peak: float = 255.0) -> float:
    """Plain mean of the valid-mode SSIM map."""
    return float(ssim_map(ref, test, peak).mean())
