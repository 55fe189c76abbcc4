"""Binary dataset container plus deterministic corpus generation.

File layout (little-endian): 4-byte magic ``IVSD``, u32 format version,
u8 kind code, 3 reserved zero bytes, u64 record count, u32 floats per
record.  Each record is the feature payload as float32 followed by the
368-bit label packed into 46 bytes.  A JSON manifest sits next to every
file and carries the generating configuration, normalization stats and a
content hash.

Record k of a corpus is seeded with ``SeedSequence((seed, k))``, so the
bytes produced do not depend on batching or on how generation work is
partitioned.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import (
    BadMagicError,
    BadVersionError,
    FormatError,
    InputError,
    TruncatedFileError,
)
from .features import (
    STFT_BINS,
    STFT_EPS,
    STFT_FRAMES,
    STFT_HOP,
    STFT_WINDOW,
    KmeansCodebook,
    PcaModel,
    bow_encode,
    pca_transform,
    stft_logmag,
)
from .params import LABEL_DIM, dequantize_patch, encode, param_table_manifest
from .profiles import FULL_PROFILE, SamplingProfile
from .synth import NUM_SAMPLES, RenderConfig, render_patch

MAGIC = b"IVSD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIB3xQI")
LABEL_BYTES = LABEL_DIM // 8  # 368 bits pack into 46 bytes exactly

KIND_CODES = {"raw": 0, "stft": 1, "bow": 2}
KIND_NAMES = {v: k for k, v in KIND_CODES.items()}

RAW_FLOATS = NUM_SAMPLES
STFT_FLOATS = STFT_BINS * STFT_FRAMES


def record_shape(kind: str, record_floats: int) -> tuple[int, ...]:
    if kind == "stft":
        return (STFT_BINS, STFT_FRAMES)
    return (record_floats,)


def _expected_floats(kind: str, record_floats: int, err=FormatError) -> None:
    if kind == "raw" and record_floats != RAW_FLOATS:
        raise err(f"raw records must hold {RAW_FLOATS} floats, got {record_floats}")
    if kind == "stft" and record_floats != STFT_FLOATS:
        raise err(f"stft records must hold {STFT_FLOATS} floats, got {record_floats}")
    if record_floats <= 0:
        raise err("record float count must be positive")


def pack_label(bits: np.ndarray) -> bytes:
    bits = np.asarray(bits)
    if bits.shape != (LABEL_DIM,):
        raise InputError(f"label must have shape ({LABEL_DIM},)")
    return np.packbits((bits > 0.5).astype(np.uint8)).tobytes()


def unpack_label(raw: bytes | np.ndarray) -> np.ndarray:
    packed = np.frombuffer(raw, dtype=np.uint8) if isinstance(raw, bytes) else raw
    if packed.size != LABEL_BYTES:
        raise InputError(f"packed label must be {LABEL_BYTES} bytes")
    return np.unpackbits(packed).astype(np.float32)


class DatasetWriter:
    """Streams records to ``path`` via a temp file; atomic on close."""

    def __init__(self, path: Path | str, kind: str, n: int, record_floats: int):
        if kind not in KIND_CODES:
            raise InputError(f"unknown dataset kind {kind!r}")
        if n < 0:
            raise InputError("record count must be non-negative")
        _expected_floats(kind, record_floats, err=InputError)
        self.path = Path(path)
        self.kind = kind
        self.n = n
        self.record_floats = record_floats
        self._tmp = self.path.with_name(self.path.name + ".tmp")
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._f = open(self._tmp, "wb")
        self._f.write(_HEADER.pack(MAGIC, FORMAT_VERSION, KIND_CODES[kind], n, record_floats))
        self._sha = hashlib.sha256()
        self._count = 0
        self.content_hash: str | None = None

    def add(self, floats: np.ndarray, label_bits: np.ndarray) -> None:
        if self._count >= self.n:
            raise InputError(f"writer already holds the declared {self.n} records")
        arr = np.ascontiguousarray(floats, dtype="<f4")
        if arr.size != self.record_floats:
            raise InputError(f"record has {arr.size} floats, expected {self.record_floats}")
        payload = arr.tobytes() + pack_label(label_bits)
        self._sha.update(payload)
        self._f.write(payload)
        self._count += 1

    def close(self) -> str:
        if self._f.closed:
            raise InputError("writer already closed")
        if self._count != self.n:
            self.abort()
            raise InputError(f"wrote {self._count} of {self.n} declared records")
        self._f.close()
        os.replace(self._tmp, self.path)
        self.content_hash = self._sha.hexdigest()
        return self.content_hash

    def abort(self) -> None:
        if not self._f.closed:
            self._f.close()
        if self._tmp.exists():
            self._tmp.unlink()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self.abort()
        return False


def read_header(path: Path | str) -> tuple[str, int, int]:
    """Validate the fixed-size header, return (kind, n, record_floats)."""
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such dataset file: {path}")
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise TruncatedFileError(f"{path}: file shorter than the {_HEADER.size}-byte header")
    magic, version, kind_code, n, record_floats = _HEADER.unpack(head)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise BadVersionError(f"{path}: unsupported format version {version}")
    if kind_code not in KIND_NAMES:
        raise FormatError(f"{path}: unknown kind code {kind_code}")
    kind = KIND_NAMES[kind_code]
    _expected_floats(kind, record_floats)
    record_bytes = record_floats * 4 + LABEL_BYTES
    size = path.stat().st_size
    expected = _HEADER.size + n * record_bytes
    if size < expected:
        raise TruncatedFileError(
            f"{path}: holds {size} bytes but {expected} are needed for {n} records"
        )
    if size > expected:
        raise FormatError(f"{path}: {size - expected} trailing bytes after {n} records")
    return kind, n, record_floats


def stream(path: Path | str):
    """Yield (features, label) pairs without loading the whole file.

    Features come back float32 with the natural shape for the kind;
    labels are float32 vectors of length 368.
    """
    kind, n, record_floats = read_header(path)
    shape = record_shape(kind, record_floats)
    float_bytes = record_floats * 4
    with open(path, "rb") as f:
        f.seek(_HEADER.size)
        for _ in range(n):
            rec = f.read(float_bytes + LABEL_BYTES)
            if len(rec) < float_bytes + LABEL_BYTES:
                raise TruncatedFileError(f"{path}: record cut short")
            feats = np.frombuffer(rec, dtype="<f4", count=record_floats).reshape(shape)
            label = unpack_label(rec[float_bytes:])
            yield feats, label


def load(path: Path | str) -> tuple[np.ndarray, np.ndarray]:
    """Load every record at once: (features (n, ...), labels (n, 368))."""
    kind, n, record_floats = read_header(path)
    shape = record_shape(kind, record_floats)
    record_bytes = record_floats * 4 + LABEL_BYTES
    with open(path, "rb") as f:
        f.seek(_HEADER.size)
        payload = np.fromfile(f, dtype=np.uint8, count=n * record_bytes)
    if payload.size < n * record_bytes:
        raise TruncatedFileError(f"{path}: record cut short")
    payload = payload.reshape(n, record_bytes)
    feats = payload[:, : record_floats * 4].copy().view("<f4").reshape((n,) + shape)
    labels = np.unpackbits(payload[:, record_floats * 4 :], axis=1).astype(np.float32)
    return feats, labels


def manifest_path(path: Path | str) -> Path:
    return Path(str(path) + ".json")


def write_manifest(dataset_path: Path | str, manifest: dict) -> Path:
    out = manifest_path(dataset_path)
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out


def read_manifest(dataset_path: Path | str) -> dict:
    p = Path(str(dataset_path))
    if p.suffix == ".json" and p.exists():
        mp = p
    else:
        mp = manifest_path(p)
    if not mp.exists():
        raise InputError(f"missing manifest {mp}")
    try:
        manifest = json.loads(mp.read_text())
    except json.JSONDecodeError as e:
        raise FormatError(f"{mp}: manifest is not valid JSON ({e})") from None
    for key in ("format_version", "kind", "n", "seed", "config_hash"):
        if key not in manifest:
            raise FormatError(f"{mp}: manifest missing {key!r}")
    return manifest


def stft_settings() -> dict:
    return {"window": STFT_WINDOW, "hop": STFT_HOP, "frames": STFT_FRAMES, "eps": STFT_EPS}


def config_hash_of(param_table: dict, render: dict, stft: dict, sampling: dict) -> str:
    """Hash of everything that must agree between train and eval corpora.

    Count, seed, kind and content hashes are deliberately left out: two
    corpora drawn with different seeds from the same configuration are
    compatible.
    """
    core = {"param_table": param_table, "render": render, "stft": stft, "sampling": sampling}
    blob = json.dumps(core, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def build_manifest(
    kind: str,
    n: int,
    seed: int,
    record_floats: int,
    profile: SamplingProfile,
    render_cfg: RenderConfig,
    norm: dict,
    content_hash: str,
    extra: dict | None = None,
) -> dict:
    param_table = param_table_manifest()
    render = asdict(render_cfg)
    stft = stft_settings()
    sampling = profile.to_dict()
    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "n": n,
        "seed": seed,
        "record_floats": record_floats,
        "param_table": param_table,
        "render": render,
        "stft": stft,
        "sampling": sampling,
        "norm": norm,
        "content_hash": content_hash,
        "config_hash": config_hash_of(param_table, render, stft, sampling),
    }
    if extra:
        manifest.update(extra)
    return manifest


def record_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def generate(
    stem: Path | str,
    n: int,
    seed: int,
    profile: SamplingProfile = FULL_PROFILE,
    render_cfg: RenderConfig | None = None,
    progress=None,
) -> dict[str, Path]:
    """Render ``n`` patches and write paired raw and spectrogram corpora.

    Returns {"raw": path, "stft": path}.  Record k holds the float32 cast
    of the rendered audio and, in the paired file, the float32
    log-spectrogram of exactly that cast, so the two files can be checked
    against each other bit for bit.
    """
    if n <= 0:
        raise InputError("need at least one record")
    cfg = render_cfg or RenderConfig()
    if cfg.num_samples != NUM_SAMPLES:
        raise InputError("corpus generation expects the standard 1 s render length")
    stem = Path(stem)
    raw_path = stem.with_name(stem.name + ".raw.ivsd")
    stft_path = stem.with_name(stem.name + ".stft.ivsd")

    total = 0.0
    total_sq = 0.0
    count = 0
    raw_w = DatasetWriter(raw_path, "raw", n, RAW_FLOATS)
    stft_w = DatasetWriter(stft_path, "stft", n, STFT_FLOATS)
    try:
        for k in range(n):
            rng = record_rng(seed, k)
            pc = profile.sample(rng)
            label = encode(pc)
            audio = np.asarray(render_patch(dequantize_patch(pc), cfg), dtype=np.float32)
            spec = np.asarray(stft_logmag(audio), dtype=np.float32)
            raw_w.add(audio, label)
            stft_w.add(spec, label)
            spec64 = spec.astype(np.float64)
            total += float(spec64.sum())
            total_sq += float((spec64 * spec64).sum())
            count += spec64.size
            if progress is not None:
                progress(k + 1, n)
        raw_hash = raw_w.close()
        stft_hash = stft_w.close()
    except BaseException:
        raw_w.abort()
        stft_w.abort()
        raise

    mean = total / count
    var = max(total_sq / count - mean * mean, 0.0)
    norm = {"mean": mean, "std": float(np.sqrt(var))}
    write_manifest(
        raw_path,
        build_manifest("raw", n, seed, RAW_FLOATS, profile, cfg, norm, raw_hash),
    )
    write_manifest(
        stft_path,
        build_manifest("stft", n, seed, STFT_FLOATS, profile, cfg, norm, stft_hash),
    )
    return {"raw": raw_path, "stft": stft_path}


def derive_bow(
    stft_dataset: Path | str,
    out_path: Path | str,
    pca: PcaModel,
    codebook: KmeansCodebook,
) -> Path:
    """Re-encode a spectrogram corpus as bag-of-words histograms.

    Each spectrogram's 64 frames are projected through ``pca``, assigned
    to their nearest codebook centroid and the assignment counts
    normalized into a histogram.  Labels carry over record by record.
    """
    kind, n, _ = read_header(stft_dataset)
    if kind != "stft":
        raise InputError(f"bow derivation needs a stft corpus, got {kind!r}")
    src = read_manifest(stft_dataset)
    out_path = Path(out_path)
    k = codebook.k
    with DatasetWriter(out_path, "bow", n, k) as w:
        for spec, label in stream(stft_dataset):
            frames = pca_transform(pca, spec.astype(np.float64).T)
            w.add(bow_encode(codebook, frames).astype(np.float32), label)
    manifest = dict(src)
    manifest.update(
        {
            "kind": "bow",
            "record_floats": k,
            "content_hash": w.content_hash,
            "bow": {"k": k, "pca_dim": int(pca.projection.shape[1])},
            "source_content_hash": src["content_hash"],
        }
    )
    write_manifest(out_path, manifest)
    return out_path
