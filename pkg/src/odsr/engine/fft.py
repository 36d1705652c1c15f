"""Plane-level FFT helpers with the engine's normalization contract.

Forward transform is unnormalized; the inverse divides by H*W, so
``ifft2(fft2(x))`` recovers ``x`` to machine precision and Parseval reads
``sum |x|^2 == sum |X|^2 / (H*W)``.  Arbitrary plane sizes are supported.
"""
from __future__ import annotations

import numpy as np


def fft2(plane: np.ndarray) -> np.ndarray:
    """Unnormalized 2-D DFT of a real or complex plane."""
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {plane.shape}")
    return np.fft.fft2(plane)


def ifft2(spectrum: np.ndarray) -> np.ndarray:
    """Inverse 2-D DFT with 1/(H*W) normalization."""
    if spectrum.ndim != 2:
        raise ValueError(f"expected a 2-D plane, got shape {spectrum.shape}")
    return np.fft.ifft2(spectrum)
