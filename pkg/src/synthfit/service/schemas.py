"""Request/response bodies for the HTTP endpoints.

Audio travels base64-encoded inside JSON; corpora and checkpoints are
referenced by server-local paths because they run to hundreds of MB.
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, Field

from ..params import NUM_PARAMS


class HealthResponse(BaseModel):
    status: str
    version: str


class ParamTableResponse(BaseModel):
    manifest: dict
    table_hash: str


class ModelListResponse(BaseModel):
    models: list[str]


class LayerCount(BaseModel):
    layer: str
    input_shape: list[int]
    params: int


class AuditResponse(BaseModel):
    model: str
    width_scale: float
    layers: list[LayerCount]
    total: int


class PatchEntry(BaseModel):
    id: str
    class_index: int = Field(ge=0, le=15)
    value: float
    unit: str


class RenderRequest(BaseModel):
    classes: list[int] | None = Field(default=None, min_length=NUM_PARAMS,
                                      max_length=NUM_PARAMS)
    seed: int | None = None
    profile: str = "full"


class RenderResponse(BaseModel):
    wav_base64: str
    patch: list[PatchEntry]
    table_hash: str
    seed: int | None


class SpectrogramRequest(BaseModel):
    wav_base64: str
    format: Literal["csv", "pgm", "json"] = "csv"


class SpectrogramResponse(BaseModel):
    format: str
    content: str | None = None
    grid: list[list[float]] | None = None


class InferRequest(BaseModel):
    wav_base64: str
    checkpoint_path: str


class InferResponse(BaseModel):
    model: str
    patch: list[PatchEntry]
    table_hash: str
    config_hash: str


class SpectralMetrics(BaseModel):
    fdelta: float
    pcc_stft: float | None
    pcc_ft: float | None


class ReconstructRequest(BaseModel):
    wav_base64: str
    checkpoint_path: str


class ReconstructResponse(BaseModel):
    wav_base64: str
    patch: list[PatchEntry]
    metrics: SpectralMetrics
    config_hash: str


class GenerateRequest(BaseModel):
    stem: str
    n: int = Field(gt=0)
    seed: int = 0
    profile: str = "desk"


class GenerateResponse(BaseModel):
    raw_path: str
    stft_path: str
    content_hashes: dict[str, str]
    config_hash: str
    seed: int


class TrainRequest(BaseModel):
    dataset_path: str
    out_path: str
    model: str
    width_scale: float = Field(default=1.0, gt=0)
    max_epochs: int = Field(default=100, ge=1)
    patience: int = Field(default=10, ge=1)
    batch_size: int = Field(default=16, ge=1)
    lr: float = Field(default=1e-3, gt=0)
    seed: int = 0
    val_fraction: float = Field(default=0.1, gt=0, lt=1)
    bow_k: int = Field(default=1000, ge=1)


class TrainResponse(BaseModel):
    checkpoint_path: str
    model: str
    train_curve: list[float]
    val_curve: list[float]
    best_epoch: int
    stopped_epoch: int
    config_hash: str
    seed: int


class EvaluateRequest(BaseModel):
    dataset_path: str
    checkpoint_path: str | None = None
    oracle: bool = False
    limit: int | None = Field(default=None, ge=1)
    tie_seed: int = 0


class EvaluateResponse(BaseModel):
    report: dict
    text: str
    config_hash: str
    tie_seed: int


class ErrorDetail(BaseModel):
    kind: str
    message: str


class ErrorResponse(BaseModel):
    error: ErrorDetail
