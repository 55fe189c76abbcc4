"""Apply a trained checkpoint to audio: featurize, score, decode, re-render.

The front-end is chosen by the checkpoint's input kind: spectrogram models
see normalized log-spectrograms (stats from the training corpus manifest),
end-to-end models see raw samples, bag-of-words models see codebook
histograms built through the stored projection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .checkpoint import Checkpoint
from .errors import InputError, ManifestMismatchError
from .features import bow_encode, ft_mag, pca_transform, stft_logmag
from .metrics import frobenius_delta, pcc
from .nn import prepare_input
from .params import (
    NUM_CLASSES,
    NUM_PARAMS,
    PatchClasses,
    decode_scores,
    dequantize_patch,
    param_table_manifest,
)
from .synth import NUM_SAMPLES, RenderConfig, render_patch


def normalize_spectrogram(spec: np.ndarray, norm: dict) -> np.ndarray:
    std = norm.get("std", 1.0)
    return (spec - norm.get("mean", 0.0)) / (std if std > 0 else 1.0)


def frontend_batch(ckpt: Checkpoint, audio: np.ndarray) -> np.ndarray:
    """(B, 16384) float audio -> naturally shaped feature batch."""
    audio = np.asarray(audio)
    if audio.ndim != 2 or audio.shape[1] != NUM_SAMPLES:
        raise InputError(f"expected (batch, {NUM_SAMPLES}) audio, got {audio.shape}")
    kind = ckpt.model.input_kind
    if kind == "raw_audio":
        return audio.astype(np.float32)
    specs = np.stack([stft_logmag(row) for row in audio])
    if kind == "spectrogram":
        return normalize_spectrogram(specs, ckpt.norm).astype(np.float32)
    if kind == "bow":
        if ckpt.pca is None or ckpt.codebook is None:
            raise InputError("checkpoint lacks the projection/codebook needed for bow input")
        out = np.empty((len(audio), ckpt.codebook.k), dtype=np.float32)
        for i, spec in enumerate(specs):
            frames = pca_transform(ckpt.pca, spec.T)
            out[i] = bow_encode(ckpt.codebook, frames)
        return out
    raise InputError(f"unknown input kind {kind!r}")


def check_param_table(ckpt: Checkpoint) -> None:
    """Scores only decode correctly under the quantization grid the
    checkpoint was trained with; refuse anything else."""
    trained = ckpt.dataset_manifest.get("param_table")
    if trained is not None and trained != param_table_manifest():
        raise ManifestMismatchError(
            "checkpoint was trained under a different parameter table"
        )


def predict_scores(ckpt: Checkpoint, audio: np.ndarray) -> np.ndarray:
    """(B, 16384) audio -> (B, 368) sigmoid scores."""
    check_param_table(ckpt)
    feats = frontend_batch(ckpt, audio)
    x = prepare_input(ckpt.model.input_kind, feats)
    return np.asarray(ckpt.network.forward(x, train=False), dtype=np.float64)


def infer_patch(ckpt: Checkpoint, audio: np.ndarray) -> tuple[PatchClasses, np.ndarray]:
    """One second of audio -> decoded patch plus its raw scores."""
    scores = predict_scores(ckpt, np.asarray(audio)[None, :])[0]
    return decode_scores(scores), scores


@dataclass
class Reconstruction:
    patch_classes: PatchClasses
    scores: np.ndarray
    audio_out: np.ndarray          # float32, same length as the input
    fdelta: float
    pcc_stft: float | None
    pcc_ft: float | None


def reconstruct(ckpt: Checkpoint, audio: np.ndarray,
                render_cfg: RenderConfig | None = None) -> Reconstruction:
    """Infer a patch from audio, re-render it and compare the spectra."""
    audio = np.asarray(audio, dtype=np.float32)
    pc, scores = infer_patch(ckpt, audio)
    out = render_audio(pc, render_cfg)
    spec_in = stft_logmag(audio)
    spec_out = stft_logmag(out)
    return Reconstruction(
        patch_classes=pc,
        scores=scores,
        audio_out=out,
        fdelta=frobenius_delta(spec_in, spec_out),
        pcc_stft=pcc(spec_in, spec_out),
        pcc_ft=pcc(ft_mag(audio), ft_mag(out)),
    )


def render_audio(pc: PatchClasses, render_cfg: RenderConfig | None = None) -> np.ndarray:
    """Decode class indices to values and render, as float32 samples."""
    cfg = render_cfg or RenderConfig()
    return np.asarray(render_patch(dequantize_patch(pc), cfg), dtype=np.float32)


def scores_as_blocks(scores: np.ndarray) -> np.ndarray:
    """(..., 368) -> (..., 23, 16) per-parameter class blocks."""
    scores = np.asarray(scores)
    if scores.shape[-1] != NUM_PARAMS * NUM_CLASSES:
        raise InputError(f"score vectors must have {NUM_PARAMS * NUM_CLASSES} entries")
    return scores.reshape(scores.shape[:-1] + (NUM_PARAMS, NUM_CLASSES))
