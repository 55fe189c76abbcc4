"""Trained-model container.

Layout: 4-byte magic ``IVSC``, u32 format version, u32 header length, a
UTF-8 JSON header, then tightly packed little-endian float32 blobs.  The
header records the model spec, training config, loss curves, the manifest
of the corpus the model was trained on, and a table of blob names, shapes
and offsets.  Weight blobs appear in network parameter order; bag-of-words
models additionally carry their projection and codebook arrays.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    FormatError,
    InputError,
    TruncatedFileError,
)
from .features import KmeansCodebook, PcaModel
from .nn import ModelSpec, Network, TrainConfig

MAGIC = b"IVSC"
FORMAT_VERSION = 1
_HEAD = struct.Struct("<4sII")


@dataclass
class Checkpoint:
    model: ModelSpec
    network: Network
    train_config: TrainConfig
    train_curve: list[float]
    val_curve: list[float]
    best_epoch: int
    stopped_epoch: int
    dataset_manifest: dict
    pca: PcaModel | None = None
    codebook: KmeansCodebook | None = None

    @property
    def config_hash(self) -> str:
        return self.dataset_manifest["config_hash"]

    @property
    def norm(self) -> dict:
        return self.dataset_manifest.get("norm") or {"mean": 0.0, "std": 1.0}


def _blob_list(ckpt: Checkpoint) -> list[tuple[str, np.ndarray, str]]:
    # weights are always float32; the front-end arrays keep full precision
    # so reloaded checkpoints score audio bit-identically
    blobs = [(f"param_{i}", p, "<f4") for i, p in enumerate(ckpt.network.params())]
    if ckpt.pca is not None:
        blobs.append(("pca.mean", ckpt.pca.mean, "<f8"))
        blobs.append(("pca.projection", ckpt.pca.projection, "<f8"))
    if ckpt.codebook is not None:
        blobs.append(("kmeans.centroids", ckpt.codebook.centroids, "<f8"))
    return blobs


def save_checkpoint(path: Path | str, ckpt: Checkpoint) -> Path:
    if "config_hash" not in ckpt.dataset_manifest:
        raise InputError("dataset manifest lacks a config_hash")
    needs_frontend = ckpt.model.input_kind == "bow" and ckpt.model.custom_input is None
    if needs_frontend and (ckpt.pca is None or ckpt.codebook is None):
        raise InputError("bag-of-words checkpoints must carry pca and codebook arrays")
    if not ckpt.val_curve or not 0 <= ckpt.best_epoch < len(ckpt.val_curve):
        raise InputError("best_epoch must index into the validation curve")

    blobs = _blob_list(ckpt)
    table = []
    offset = 0
    for name, arr, dt in blobs:
        nbytes = arr.size * np.dtype(dt).itemsize
        table.append(
            {
                "name": name,
                "shape": list(arr.shape),
                "dtype": dt,
                "offset": offset,
                "count": int(arr.size),
            }
        )
        offset += nbytes
    header = {
        "format_version": FORMAT_VERSION,
        "model": ckpt.model.to_dict(),
        "train": ckpt.train_config.to_dict(),
        "train_curve": [float(v) for v in ckpt.train_curve],
        "val_curve": [float(v) for v in ckpt.val_curve],
        "best_epoch": int(ckpt.best_epoch),
        "stopped_epoch": int(ckpt.stopped_epoch),
        "dataset_manifest": ckpt.dataset_manifest,
        "pca": None
        if ckpt.pca is None
        else {
            "retained_variance": float(ckpt.pca.retained_variance),
            "effective_dim": int(ckpt.pca.effective_dim),
        },
        "kmeans": None
        if ckpt.codebook is None
        else {"inertia": float(ckpt.codebook.inertia), "n_iter": int(ckpt.codebook.n_iter)},
        "blobs": table,
    }
    head_bytes = json.dumps(header, sort_keys=True).encode()

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as f:
        f.write(_HEAD.pack(MAGIC, FORMAT_VERSION, len(head_bytes)))
        f.write(head_bytes)
        for _, arr, dt in blobs:
            f.write(np.ascontiguousarray(arr, dtype=dt).tobytes())
    tmp.replace(path)
    return path


def load_checkpoint(path: Path | str) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such checkpoint: {path}")
    data = path.read_bytes()
    if len(data) < _HEAD.size:
        raise TruncatedFileError(f"{path}: shorter than the fixed header")
    magic, version, header_len = _HEAD.unpack_from(data)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"{path}: unsupported format version {version}")
    if len(data) < _HEAD.size + header_len:
        raise TruncatedFileError(f"{path}: header cut short")
    try:
        header = json.loads(data[_HEAD.size : _HEAD.size + header_len].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"{path}: header is not valid JSON ({e})") from None
    for key in ("model", "train", "val_curve", "best_epoch", "dataset_manifest", "blobs"):
        if key not in header:
            raise FormatError(f"{path}: header missing {key!r}")
    if "config_hash" not in header["dataset_manifest"]:
        raise FormatError(f"{path}: dataset manifest lacks a config_hash")

    table = header["blobs"]
    if any(b.get("dtype", "<f4") not in ("<f4", "<f8") for b in table):
        raise FormatError(f"{path}: unsupported blob dtype in table")
    total_bytes = sum(b["count"] * np.dtype(b.get("dtype", "<f4")).itemsize for b in table)
    blob_bytes = len(data) - _HEAD.size - header_len
    if blob_bytes < total_bytes:
        raise TruncatedFileError(f"{path}: weight blobs cut short")
    if blob_bytes > total_bytes:
        raise FormatError(f"{path}: {blob_bytes - total_bytes} trailing bytes")
    region = _HEAD.size + header_len

    arrays: dict[str, np.ndarray] = {}
    for b in table:
        dt = np.dtype(b.get("dtype", "<f4"))
        start = region + b["offset"]
        if start + b["count"] * dt.itemsize > len(data):
            raise FormatError(f"{path}: blob {b['name']!r} overruns the file")
        chunk = np.frombuffer(data, dtype=dt, count=b["count"], offset=start)
        try:
            arrays[b["name"]] = chunk.reshape(b["shape"]).copy()
        except ValueError:
            raise FormatError(
                f"{path}: blob {b['name']!r} count disagrees with its shape"
            ) from None

    try:
        model = ModelSpec.from_dict(header["model"])
        network = Network(model, np.random.default_rng(0))
        weights = [arrays[f"param_{i}"] for i in range(len(network.params()))]
        network.load_state(weights)
    except (KeyError, InputError) as e:
        raise FormatError(f"{path}: weight blobs do not fit the model spec ({e})") from None

    pca = None
    if header.get("pca") is not None:
        pca = PcaModel(
            mean=arrays["pca.mean"].astype(np.float64),
            projection=arrays["pca.projection"].astype(np.float64),
            retained_variance=header["pca"]["retained_variance"],
            effective_dim=header["pca"]["effective_dim"],
        )
    codebook = None
    if header.get("kmeans") is not None:
        codebook = KmeansCodebook(
            centroids=arrays["kmeans.centroids"].astype(np.float64),
            inertia=header["kmeans"]["inertia"],
            n_iter=header["kmeans"]["n_iter"],
        )

    return Checkpoint(
        model=model,
        network=network,
        train_config=TrainConfig(**header["train"]),
        train_curve=[float(v) for v in header.get("train_curve", [])],
        val_curve=[float(v) for v in header["val_curve"]],
        best_epoch=int(header["best_epoch"]),
        stopped_epoch=int(header.get("stopped_epoch", len(header["val_curve"]))),
        dataset_manifest=header["dataset_manifest"],
        pca=pca,
        codebook=codebook,
    )
