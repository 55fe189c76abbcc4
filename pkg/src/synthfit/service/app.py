"""FastAPI application exposing the whole pipeline.

Every domain error carries a ``kind`` that maps onto an HTTP status here
and onto a process exit code in the command-line client: input problems
are 400, malformed containers 422, train/eval configuration clashes 409.
"""

from __future__ import annotations

import base64

import numpy as np
from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse

from .. import __version__
from ..audio_io import parse_render_compatible, wav_bytes
from ..checkpoint import load_checkpoint, save_checkpoint
from ..dataset import generate, read_manifest
from ..errors import InputError, SynthfitError
from ..evaluation import CheckpointPredictor, OraclePredictor, evaluate
from ..export import spectrogram_csv, spectrogram_pgm
from ..features import stft_logmag
from ..inference import infer_patch, reconstruct, render_audio
from ..nn import ARCHITECTURE_NAMES, TrainConfig, build_model, layer_summaries, param_count
from ..params import (
    PARAMS,
    PatchClasses,
    dequantize,
    param_table_hash,
    param_table_manifest,
)
from ..pipeline import train_from_corpus
from ..profiles import get_profile
from . import schemas as S

_STATUS_FOR_KIND = {
    "input": 400,
    "format": 422,
    "manifest": 409,
    "diverged": 500,
    "internal": 500,
}


def _patch_entries(pc: PatchClasses) -> list[S.PatchEntry]:
    return [
        S.PatchEntry(
            id=p.id, class_index=k, value=float(dequantize(p, k)), unit=p.unit
        )
        for p, k in zip(PARAMS, pc.classes)
    ]


def _decode_wav(b64: str) -> np.ndarray:
    try:
        data = base64.b64decode(b64, validate=True)
    except Exception:
        raise InputError("wav_base64 is not valid base64") from None
    return parse_render_compatible(data)


def _encode_wav(samples: np.ndarray) -> str:
    return base64.b64encode(wav_bytes(samples)).decode()


def create_app() -> FastAPI:
    app = FastAPI(title="synthfit", version=__version__)

    @app.exception_handler(SynthfitError)
    async def _domain_error(request, exc: SynthfitError):
        status = _STATUS_FOR_KIND.get(exc.kind, 500)
        return JSONResponse(
            status_code=status,
            content={"error": {"kind": exc.kind, "message": str(exc)}},
        )

    @app.get("/health", response_model=S.HealthResponse)
    def health():
        return S.HealthResponse(status="ok", version=__version__)

    @app.get("/params/manifest", response_model=S.ParamTableResponse)
    def params_manifest():
        return S.ParamTableResponse(
            manifest=param_table_manifest(), table_hash=param_table_hash()
        )

    @app.get("/models", response_model=S.ModelListResponse)
    def models():
        return S.ModelListResponse(models=list(ARCHITECTURE_NAMES))

    @app.get("/models/{name}/audit", response_model=S.AuditResponse)
    def audit(name: str, width_scale: float = Query(default=1.0, gt=0)):
        spec = build_model(name, width_scale)
        return S.AuditResponse(
            model=name,
            width_scale=width_scale,
            layers=[S.LayerCount(**row) for row in layer_summaries(spec)],
            total=param_count(spec),
        )

    @app.post("/render", response_model=S.RenderResponse)
    def render(req: S.RenderRequest):
        if req.classes is not None:
            pc = PatchClasses(tuple(req.classes))
            seed = None
        elif req.seed is not None:
            profile = get_profile(req.profile)
            pc = profile.sample(np.random.default_rng(req.seed))
            seed = req.seed
        else:
            raise InputError("provide either explicit classes or a seed to sample")
        audio = render_audio(pc)
        return S.RenderResponse(
            wav_base64=_encode_wav(audio),
            patch=_patch_entries(pc),
            table_hash=param_table_hash(),
            seed=seed,
        )

    @app.post("/spectrogram", response_model=S.SpectrogramResponse)
    def spectrogram(req: S.SpectrogramRequest):
        spec = stft_logmag(_decode_wav(req.wav_base64))
        if req.format == "csv":
            return S.SpectrogramResponse(format="csv", content=spectrogram_csv(spec))
        if req.format == "pgm":
            return S.SpectrogramResponse(format="pgm", content=spectrogram_pgm(spec))
        return S.SpectrogramResponse(format="json", grid=spec.tolist())

    @app.post("/infer", response_model=S.InferResponse)
    def infer(req: S.InferRequest):
        audio = _decode_wav(req.wav_base64)
        ckpt = load_checkpoint(req.checkpoint_path)
        pc, _ = infer_patch(ckpt, audio)
        return S.InferResponse(
            model=ckpt.model.name,
            patch=_patch_entries(pc),
            table_hash=param_table_hash(),
            config_hash=ckpt.config_hash,
        )

    @app.post("/reconstruct", response_model=S.ReconstructResponse)
    def reconstruct_endpoint(req: S.ReconstructRequest):
        audio = _decode_wav(req.wav_base64)
        ckpt = load_checkpoint(req.checkpoint_path)
        rec = reconstruct(ckpt, audio)
        return S.ReconstructResponse(
            wav_base64=_encode_wav(rec.audio_out),
            patch=_patch_entries(rec.patch_classes),
            metrics=S.SpectralMetrics(
                fdelta=rec.fdelta, pcc_stft=rec.pcc_stft, pcc_ft=rec.pcc_ft
            ),
            config_hash=ckpt.config_hash,
        )

    @app.post("/datasets/generate", response_model=S.GenerateResponse)
    def gen_dataset(req: S.GenerateRequest):
        profile = get_profile(req.profile)
        paths = generate(req.stem, n=req.n, seed=req.seed, profile=profile)
        manifests = {k: read_manifest(p) for k, p in paths.items()}
        return S.GenerateResponse(
            raw_path=str(paths["raw"]),
            stft_path=str(paths["stft"]),
            content_hashes={k: m["content_hash"] for k, m in manifests.items()},
            config_hash=manifests["raw"]["config_hash"],
            seed=req.seed,
        )

    @app.post("/train", response_model=S.TrainResponse)
    def train_endpoint(req: S.TrainRequest):
        cfg = TrainConfig(
            lr=req.lr,
            batch_size=req.batch_size,
            max_epochs=req.max_epochs,
            patience=req.patience,
            seed=req.seed,
            val_fraction=req.val_fraction,
        )
        ckpt = train_from_corpus(
            req.dataset_path, req.model, width_scale=req.width_scale,
            cfg=cfg, bow_k=req.bow_k,
        )
        save_checkpoint(req.out_path, ckpt)
        return S.TrainResponse(
            checkpoint_path=req.out_path,
            model=req.model,
            train_curve=ckpt.train_curve,
            val_curve=ckpt.val_curve,
            best_epoch=ckpt.best_epoch,
            stopped_epoch=ckpt.stopped_epoch,
            config_hash=ckpt.config_hash,
            seed=req.seed,
        )

    @app.post("/evaluate", response_model=S.EvaluateResponse)
    def evaluate_endpoint(req: S.EvaluateRequest):
        if req.oracle:
            predictor = OraclePredictor(read_manifest(req.dataset_path))
        elif req.checkpoint_path:
            predictor = CheckpointPredictor(load_checkpoint(req.checkpoint_path))
        else:
            raise InputError("provide a checkpoint_path or set oracle=true")
        report = evaluate(
            predictor, req.dataset_path, tie_seed=req.tie_seed, limit=req.limit
        )
        return S.EvaluateResponse(
            report=report.to_dict(),
            text=report.render_text(),
            config_hash=predictor.config_hash,
            tie_seed=req.tie_seed,
        )

    return app


app = create_app()
