"""Audio front-ends: log-magnitude STFT, full-signal FT magnitude, and the
bag-of-words featurization (PCA over spectrogram frames, then K-means
vector quantization and a normalized assignment histogram).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InputError
from .synth import NUM_SAMPLES

STFT_WINDOW = 512
STFT_HOP = 256
STFT_BINS = STFT_WINDOW // 2 + 1   # 257
STFT_FRAMES = 64                   # needs a 256-sample tail pad, see stft_logmag
STFT_EPS = 1e-7
FT_BINS = NUM_SAMPLES // 2 + 1     # 8193
PCA_DIM = 64


def stft_logmag(samples, eps: float = STFT_EPS) -> np.ndarray:
    """Log-magnitude spectrogram, shape (257, 64): frequency bins x frames.

    Hann window of 512 samples, hop 256.  The last window would run 256
    samples past the buffer, so the tail is zero-padded to yield exactly
    64 frames.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.shape != (NUM_SAMPLES,):
        raise InputError(f"expected {NUM_SAMPLES} samples, got shape {x.shape}")
    padded = np.concatenate([x, np.zeros(STFT_HOP)])
    frames = sliding_window_view(padded, STFT_WINDOW)[::STFT_HOP]
    mag = np.abs(np.fft.rfft(frames * np.hanning(STFT_WINDOW), axis=1))
    return np.log(mag + eps).T


def ft_mag(samples) -> np.ndarray:
    """Magnitude of the full-length Fourier transform, non-redundant half
    (8193 bins, 1 Hz apart for the renderer's native format)."""
    x = np.asarray(samples, dtype=np.float64)
    if x.shape != (NUM_SAMPLES,):
        raise InputError(f"expected {NUM_SAMPLES} samples, got shape {x.shape}")
    return np.abs(np.fft.rfft(x))


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray            # (257,)
    projection: np.ndarray      # (257, dim), orthonormal columns
    retained_variance: float    # fraction of total variance in the kept subspace
    effective_dim: int          # directions with nonzero variance among the kept ones


def pca_fit(frames, target_dim: int = PCA_DIM) -> PcaModel:
    """Principal directions of a frame collection, shape (n, 257) -> leading
    ``target_dim`` eigenvectors of the covariance."""
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim != 2:
        raise InputError("expected a 2-D (n, dim) frame matrix")
    n, d = x.shape
    if n < 2:
        raise InputError("need at least two frames to fit")
    if not 1 <= target_dim <= d:
        raise InputError(f"target_dim must lie in 1..{d}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = (xc.T @ xc) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)       # ascending
    order = np.argsort(evals)[::-1][:target_dim]
    top = np.clip(evals[order], 0.0, None)
    proj = evecs[:, order]
    # fix the eigenvector sign ambiguity for reproducible models
    flip = np.sign(proj[np.abs(proj).argmax(axis=0), np.arange(proj.shape[1])])
    flip[flip == 0] = 1.0
    proj = proj * flip
    total = np.clip(evals, 0.0, None).sum()
    retained = float(top.sum() / total) if total > 0 else 1.0
    tol = max(top.max(initial=0.0) * 1e-12, 1e-18)
    return PcaModel(mean, proj, retained, int((top > tol).sum()))


def pca_transform(model: PcaModel, frames) -> np.ndarray:
    """Center and project; accepts one frame (257,) or a stack (n, 257)."""
    x = np.asarray(frames, dtype=np.float64)
    if x.shape[-1] != model.mean.shape[0]:
        raise InputError("frame dimensionality does not match the model")
    return (x - model.mean) @ model.projection


@dataclass(frozen=True)
class KmeansCodebook:
    centroids: np.ndarray   # (K, dim)
    inertia: float          # final within-cluster sum of squares
    n_iter: int

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


def _nearest(x, centroids):
    # squared euclidean via the expansion trick; argmin over centroids
    d2 = (
        (x * x).sum(axis=1)[:, None]
        - 2.0 * x @ centroids.T
        + (centroids * centroids).sum(axis=1)[None, :]
    )
    np.clip(d2, 0.0, None, out=d2)  # expansion trick can go microscopically negative
    return d2.argmin(axis=1), d2


def kmeans_fit(vectors, k: int, rng: np.random.Generator, max_iters: int = 100) -> KmeansCodebook:
    """Lloyd's algorithm.  Initial centroids are sampled without replacement;
    a cluster that empties is re-seeded from the point farthest from its
    current centroid."""
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise InputError("expected a 2-D (n, dim) vector matrix")
    n = x.shape[0]
    distinct = np.unique(x, axis=0)
    if k > distinct.shape[0]:
        raise InputError(f"k={k} exceeds the {distinct.shape[0]} distinct vectors")
    centroids = x[rng.choice(n, size=k, replace=False)].copy()
    assign = np.full(n, -1)
    it = 0
    for it in range(1, max_iters + 1):
        new_assign, d2 = _nearest(x, centroids)
        if np.array_equal(new_assign, assign):
            break
        assign = new_assign
        own = d2[np.arange(n), assign]
        for j in range(k):
            members = assign == j
            if members.any():
                centroids[j] = x[members].mean(axis=0)
            else:
                far = own.argmax()
                centroids[j] = x[far]
                own[far] = 0.0  # keep a second empty cluster from grabbing the same point
    _, d2 = _nearest(x, centroids)
    inertia = float(d2.min(axis=1).sum())
    return KmeansCodebook(centroids, inertia, it)


def bow_encode(codebook: KmeansCodebook, frames) -> np.ndarray:
    """Histogram of nearest-centroid assignments, normalized to probabilities.
    ``frames`` is (n_frames, dim) in the codebook's space."""
    x = np.asarray(frames, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != codebook.centroids.shape[1]:
        raise InputError("frames must be 2-D and match the codebook dimension")
    if x.shape[0] == 0:
        raise InputError("cannot encode an empty frame set")
    assign, _ = _nearest(x, codebook.centroids)
    counts = np.bincount(assign, minlength=codebook.k).astype(np.float64)
    return counts / counts.sum()
