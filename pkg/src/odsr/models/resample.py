"""Classical separable resamplers: Catmull-Rom bicubic and Lanczos-4.

Planes are 2-D float arrays (or HxWxC stacks resized per channel).  Output
pixel centers map to source coordinates via the center-aligned convention
src = (dst + 0.5) / scale - 0.5.  Rows of the resize matrix are normalized
so constants are reproduced exactly; downscaling stretches the kernel for
antialiasing.
"""
from __future__ import annotations

import numpy as np


def cubic_kernel(t: np.ndarray) -> np.ndarray:
    """Catmull-Rom cubic (a = -0.5), support 2."""
    a = -0.5
    t = np.abs(t)
    out = np.zeros_like(t)
    near = t <= 1.0
    far = (t > 1.0) & (t < 2.0)
    tn = t[near]
    tf = t[far]
    out[near] = (a + 2.0) * tn ** 3 - (a + 3.0) * tn ** 2 + 1.0
    out[far] = a * tf ** 3 - 5.0 * a * tf ** 2 + 8.0 * a * tf - 4.0 * a
    return out


def lanczos_kernel(t: np.ndarray, taps: int = 4) -> np.ndarray:
    """Lanczos windowed sinc, support ``taps``."""
    t = np.asarray(t, dtype=np.float64)
    out = np.sinc(t) * np.sinc(t / taps)
    return np.where(np.abs(t) < taps, out, 0.0)


_KERNELS = {
    "cubic": (cubic_kernel, 2.0),
    "lanczos4": (lambda t: lanczos_kernel(t, 4), 4.0),
}


def resize_matrix(src: int, dst: int, kernel: str = "cubic",
                  antialias: bool = True) -> np.ndarray:
    """(dst, src) row-stochastic sampling matrix along one axis."""
    if src < 1 or dst < 1:
        raise ValueError(f"sizes must be positive, got {src} -> {dst}")
    try:
        kfun, support = _KERNELS[kernel]
    except KeyError:
        raise ValueError(
            f"unknown kernel {kernel!r}; choices: {sorted(_KERNELS)}"
        ) from None
    scale = dst / src
    stretch = max(1.0, 1.0 / scale) if antialias else 1.0
    reach = support * stretch
    mat = np.zeros((dst, src), dtype=np.float64)
    for i in range(dst):
        center = (i + 0.5) / scale - 0.5
        lo = int(np.floor(center - reach)) + 1
        hi = int(np.ceil(center + reach))
        taps = np.arange(lo, hi + 1)
        w = kfun((taps - center) / stretch)
        total = w.sum()
        if total == 0.0:
            raise ValueError(f"degenerate kernel row at output {i}")
        w = w / total
        np.add.at(mat[i], np.clip(taps, 0, src - 1), w)
    return mat


def resize_plane(plane: np.ndarray, out_hw: tuple[int, int],
                 kernel: str = "cubic", antialias: bool = True) -> np.ndarray:
    """Separable resize of a 2-D plane (float64 output)."""
    if plane.ndim != 2:
        raise ValueError(f"expected 2-D plane, got shape {plane.shape}")
    oh, ow = out_hw
    mh = resize_matrix(plane.shape[0], oh, kernel, antialias)
    mw = resize_matrix(plane.shape[1], ow, kernel, antialias)
    return mh @ plane.astype(np.float64) @ mw.T


def resize_image(img: np.ndarray, out_hw: tuple[int, int],
                 kernel: str = "cubic", antialias: bool = True) -> np.ndarray:
    """Resize HxW or HxWxC.  uint8 input returns clipped/rounded uint8."""
    if img.ndim == 2:
        out = resize_plane(img, out_hw, kernel, antialias)
    elif img.ndim == 3:
        out = np.stack([resize_plane(img[..., c], out_hw, kernel, antialias)
                        for c in range(img.shape[2])], axis=-1)
    else:
        raise ValueError(f"expected HxW or HxWxC image, got {img.shape}")
    if img.dtype == np.uint8:
        return np.floor(np.clip(out, 0, 255) + 0.5).astype(np.uint8)
    return out


def bicubic_upscale(img: np.ndarray, scale: int) -> np.ndarray:
    """Catmull-Rom upscale by an integer factor."""
    oh, ow = img.shape[0] * scale, img.shape[1] * scale
    return resize_image(img, (oh, ow), "cubic")


def bicubic_downscale(img: np.ndarray, scale: int) -> np.ndarray:
    """Antialiased Catmull-Rom downscale by an integer factor."""
    if img.shape[0] % scale or img.shape[1] % scale:
        raise ValueError(
            f"image {img.shape[:2]} not divisible by scale {scale}")
    oh, ow = img.shape[0] // scale, img.shape[1] // scale
    return resize_image(img, (oh, ow), "cubic")


def lanczos_upscale(img: np.ndarray, scale: int) -> np.ndarray:
    """Lanczos-4 upscale by an integer factor."""
    oh, ow = img.shape[0] * scale, img.shape[1] * scale
    return resize_image(img, (oh, ow), "lanczos4")
