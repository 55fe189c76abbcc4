"""Corpus-level evaluation: rank every parameter, re-render every
prediction, and fold the spectral comparisons into one report.

Evaluation always runs from a raw-audio corpus so the input spectra are
computed here, through the same code path the re-rendered outputs take.
Predictors receive the reference label next to each batch; honest
predictors ignore it, while :class:`OraclePredictor` returns it verbatim
to verify the generate/encode/decode/render/metric plumbing end to end.
"""

from __future__ import annotations

import numpy as np

from .checkpoint import Checkpoint
from .dataset import read_header, read_manifest, stream
from .errors import InputError, ManifestMismatchError
from .features import ft_mag, stft_logmag
from .inference import predict_scores, render_audio, scores_as_blocks
from .metrics import EvalReport, frobenius_delta, pcc, ranking_report, spectral_summary
from .params import decode, decode_scores
from .synth import RenderConfig

EVAL_BATCH = 64


class CheckpointPredictor:
    """Scores audio through a trained checkpoint's front-end and network."""

    def __init__(self, ckpt: Checkpoint):
        self.ckpt = ckpt
        self.name = ckpt.model.name
        self.config_hash = ckpt.config_hash

    def predict_batch(self, audio: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return predict_scores(self.ckpt, audio)


class OraclePredictor:
    """Plumbing check: echoes the reference labels as scores.

    A perfect report from this predictor means dataset generation, label
    codecs, rendering and the metrics all agree with each other; it says
    nothing about any trained model.
    """

    def __init__(self, manifest: dict):
        self.name = "oracle"
        self.config_hash = manifest["config_hash"]

    def predict_batch(self, audio: np.ndarray, labels: np.ndarray) -> np.ndarray:
        return np.asarray(labels, dtype=np.float64)


def evaluate(
    predictor,
    dataset_path,
    tie_seed=0,
    limit: int | None = None,
    render_cfg: RenderConfig | None = None,
    progress=None,
) -> EvalReport:
    """Score a raw-audio corpus and assemble the full report.

    ``predictor`` needs ``name``, ``config_hash`` and
    ``predict_batch(audio, labels) -> scores``.  The corpus manifest must
    hash to the same configuration the predictor was built from.
    """
    kind, n, _ = read_header(dataset_path)
    if kind != "raw":
        raise InputError(f"evaluation needs a raw-audio corpus, got kind {kind!r}")
    manifest = read_manifest(dataset_path)
    if predictor.config_hash != manifest["config_hash"]:
        raise ManifestMismatchError(
            f"predictor built for config {predictor.config_hash} "
            f"but corpus has {manifest['config_hash']}"
        )
    total = n if limit is None else min(n, limit)
    if total < 1:
        raise InputError("nothing to evaluate")
    cfg = render_cfg or RenderConfig()

    all_scores = []
    true_classes = []
    fdeltas = []
    pccs_stft = []
    pccs_ft = []
    done = 0
    batch_audio: list[np.ndarray] = []
    batch_labels: list[np.ndarray] = []

    def flush():
        nonlocal done
        if not batch_audio:
            return
        audio = np.stack(batch_audio)
        labels = np.stack(batch_labels)
        scores = np.asarray(predictor.predict_batch(audio, labels), dtype=np.float64)
        for row_audio, row_label, row_scores in zip(audio, labels, scores):
            true_classes.append(decode(row_label).classes)
            out = render_audio(decode_scores(row_scores), cfg)
            spec_in = stft_logmag(row_audio)
            spec_out = stft_logmag(out)
            fdeltas.append(frobenius_delta(spec_in, spec_out))
            pccs_stft.append(pcc(spec_in, spec_out))
            pccs_ft.append(pcc(ft_mag(row_audio), ft_mag(out)))
            done += 1
            if progress is not None:
                progress(done, total)
        all_scores.append(scores)
        batch_audio.clear()
        batch_labels.clear()

    for i, (audio, label) in enumerate(stream(dataset_path)):
        if i >= total:
            break
        batch_audio.append(audio)
        batch_labels.append(label)
        if len(batch_audio) == EVAL_BATCH:
            flush()
    flush()

    blocks = scores_as_blocks(np.concatenate(all_scores, axis=0))
    report = ranking_report(predictor.name, blocks, np.asarray(true_classes), tie_seed=tie_seed)
    report.spectral, report.degenerate_pcc = spectral_summary(fdeltas, pccs_stft, pccs_ft)
    return report
