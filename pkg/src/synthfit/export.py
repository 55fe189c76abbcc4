"""Spectrogram export for offline inspection: CSV and plain-text PGM."""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .features import STFT_BINS, STFT_FRAMES


def _check(spec: np.ndarray) -> np.ndarray:
    spec = np.asarray(spec, dtype=np.float64)
    if spec.shape != (STFT_BINS, STFT_FRAMES):
        raise InputError(f"expected a ({STFT_BINS}, {STFT_FRAMES}) grid, got {spec.shape}")
    return spec


def spectrogram_csv(spec: np.ndarray) -> str:
    """One row per frequency bin, one column per frame."""
    spec = _check(spec)
    return "\n".join(",".join(f"{v:.6g}" for v in row) for row in spec) + "\n"


def spectrogram_pgm(spec: np.ndarray) -> str:
    """ASCII PGM, min mapped to 0 and max to 255; flat input maps to 0."""
    spec = _check(spec)
    lo, hi = spec.min(), spec.max()
    if hi > lo:
        grid = np.rint((spec - lo) / (hi - lo) * 255).astype(int)
    else:
        grid = np.zeros(spec.shape, dtype=int)
    lines = ["P2", f"{STFT_FRAMES} {STFT_BINS}", "255"]
    for row in grid:
        lines.append(" ".join(str(v) for v in row))
    return "\n".join(lines) + "\n"
