"""Glue from corpus files to trained checkpoints.

Picks the right feature preparation for each architecture family:
spectrogram models train on normalized log-spectrograms, end-to-end
models on raw samples, bag-of-words models on histograms built through a
projection and codebook fitted here on the training corpus.
"""

from __future__ import annotations

import numpy as np

from .checkpoint import Checkpoint
from .dataset import load, read_manifest
from .errors import InputError
from .features import (
    PCA_DIM,
    KmeansCodebook,
    PcaModel,
    bow_encode,
    kmeans_fit,
    pca_fit,
    pca_transform,
)
from .nn import TrainConfig, build_model, train

DEFAULT_BOW_K = 1000
FRONTEND_FIT_FRAMES = 65536

CORPUS_KIND_FOR_INPUT = {"spectrogram": "stft", "raw_audio": "raw", "bow": "stft"}


def fit_bow_frontend(
    specs: np.ndarray,
    k: int,
    seed: int,
    pca_dim: int = PCA_DIM,
    max_frames: int = FRONTEND_FIT_FRAMES,
) -> tuple[PcaModel, KmeansCodebook]:
    """Fit the projection and codebook on frames drawn from ``specs``.

    specs: (N, 257, 64) log-spectrograms.  Frames are subsampled without
    replacement to bound the eigen/kmeans cost on large corpora.
    """
    n, bins, width = specs.shape
    frames = specs.transpose(0, 2, 1).reshape(n * width, bins).astype(np.float64)
    rng = np.random.default_rng(seed)
    if len(frames) > max_frames:
        pick = rng.choice(len(frames), size=max_frames, replace=False)
        pick.sort()
        frames = frames[pick]
    pca = pca_fit(frames, target_dim=pca_dim)
    codebook = kmeans_fit(pca_transform(pca, frames), k=k, rng=rng)
    return pca, codebook


def bow_histograms(specs: np.ndarray, pca: PcaModel, codebook: KmeansCodebook) -> np.ndarray:
    out = np.empty((len(specs), codebook.k), dtype=np.float32)
    for i, spec in enumerate(specs):
        out[i] = bow_encode(codebook, pca_transform(pca, spec.astype(np.float64).T))
    return out


def train_from_corpus(
    dataset_path,
    model_name: str,
    width_scale: float = 1.0,
    cfg: TrainConfig = TrainConfig(),
    bow_k: int = DEFAULT_BOW_K,
    log=None,
) -> Checkpoint:
    """Load a corpus, prepare features for ``model_name`` and fit it.

    Spectrogram and bag-of-words models expect a stft corpus; the
    end-to-end model expects a raw corpus.  The returned checkpoint
    carries everything needed to score fresh audio later.
    """
    manifest = read_manifest(dataset_path)
    probe = build_model(model_name, width_scale, bow_dim=bow_k)
    needed = CORPUS_KIND_FOR_INPUT[probe.input_kind]
    if manifest["kind"] != needed:
        raise InputError(
            f"{model_name} trains on a {needed} corpus, got kind {manifest['kind']!r}"
        )

    feats, labels = load(dataset_path)
    pca = None
    codebook = None
    if probe.input_kind == "spectrogram":
        # in-place float32 normalization; corpora run to hundreds of MB
        norm = manifest["norm"]
        feats -= np.float32(norm["mean"])
        feats /= np.float32(norm["std"] if norm["std"] > 0 else 1.0)
    elif probe.input_kind == "bow":
        pca, codebook = fit_bow_frontend(feats, k=bow_k, seed=cfg.seed)
        feats = bow_histograms(feats, pca, codebook)

    result = train(feats, labels, probe, cfg, log=log)
    return Checkpoint(
        model=probe,
        network=result.network,
        train_config=cfg,
        train_curve=result.train_curve,
        val_curve=result.val_curve,
        best_epoch=result.best_epoch,
        stopped_epoch=result.stopped_epoch,
        dataset_manifest=manifest,
        pca=pca,
        codebook=codebook,
    )
