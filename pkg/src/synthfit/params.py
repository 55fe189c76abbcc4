"""The 23-parameter space of the synthesizer: quantization grid, sampling,
and the 368-bit one-hot label codec.

Every parameter is quantized to 16 classes.  Linear parameters map class k to
``lo + k * (hi - lo) / 15`` so the first and last classes sit exactly on the
range limits.  Carrier frequencies use a semitone grid anchored at 440 Hz:
class k maps to ``2**(k/12) * 440``, i.e. sixteen consecutive notes upward
from A4.

The canonical parameter order is frozen here and versioned; label-vector
block k always refers to ``PARAMS[k]``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .errors import InputError

NUM_CLASSES = 16
NUM_PARAMS = 23
LABEL_DIM = NUM_PARAMS * NUM_CLASSES  # 368

PARAM_TABLE_VERSION = 1

SEMITONE_BASE_HZ = 440.0

WAVEFORMS = ("saw", "sin", "sqr", "tri")


@dataclass(frozen=True)
class ParamSpec:
    """One synthesizer parameter: id, range, and quantization scale."""

    id: str
    lo: float
    hi: float
    scale: str  # "linear" | "semitone"
    unit: str

    def dequantize(self, k: int) -> float:
        return dequantize(self, k)


def _make_table() -> tuple[ParamSpec, ...]:
    specs = [
        ParamSpec("a", 0.001, 1.0, "linear", "s"),
        ParamSpec("d", 0.001, 1.0, "linear", "s"),
        ParamSpec("s", 0.001, 1.0, "linear", ""),
        ParamSpec("r", 0.001, 1.0, "linear", "s"),
        ParamSpec("f_gate", 0.5, 30.0, "linear", "Hz"),
        ParamSpec("f_cut", 200.0, 4000.0, "linear", "Hz"),
        ParamSpec("q", 0.01, 10.0, "linear", ""),
    ]
    for w in WAVEFORMS:
        specs += [
            ParamSpec(f"A_{w}", 0.001, 1.0, "linear", ""),
            ParamSpec(f"B_{w}", 0.0, 1500.0, "linear", "rad"),
            ParamSpec(f"v_{w}", 1.0, 30.0, "linear", "Hz"),
            ParamSpec(f"f_{w}", 440.0, 1046.502, "semitone", "Hz"),
        ]
    return tuple(specs)


PARAMS: tuple[ParamSpec, ...] = _make_table()
PARAM_IDS: tuple[str, ...] = tuple(p.id for p in PARAMS)
PARAM_INDEX: dict[str, int] = {p.id: i for i, p in enumerate(PARAMS)}

assert len(PARAMS) == NUM_PARAMS


def dequantize(spec: ParamSpec, k: int) -> float:
    """Map a class index 0..15 to a parameter value in natural units."""
    if not 0 <= k <= NUM_CLASSES - 1:
        raise InputError(f"class index {k} outside 0..{NUM_CLASSES - 1} for {spec.id}")
    if spec.scale == "semitone":
        return 2.0 ** (k / 12.0) * SEMITONE_BASE_HZ
    return spec.lo + k * (spec.hi - spec.lo) / (NUM_CLASSES - 1)


@dataclass(frozen=True)
class PatchClasses:
    """A discrete patch: one class index per parameter, canonical order."""

    classes: tuple[int, ...]

    def __post_init__(self):
        if len(self.classes) != NUM_PARAMS:
            raise InputError(f"expected {NUM_PARAMS} classes, got {len(self.classes)}")
        for i, k in enumerate(self.classes):
            if not 0 <= k <= NUM_CLASSES - 1:
                raise InputError(f"class {k} for {PARAM_IDS[i]} outside 0..15")

    def __getitem__(self, param_id: str) -> int:
        return self.classes[PARAM_INDEX[param_id]]


@dataclass(frozen=True)
class Patch:
    """A concrete patch: one value per parameter, canonical order."""

    values: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != NUM_PARAMS:
            raise InputError(f"expected {NUM_PARAMS} values, got {len(self.values)}")

    def __getitem__(self, param_id: str) -> float:
        return self.values[PARAM_INDEX[param_id]]


def dequantize_patch(pc: PatchClasses) -> Patch:
    return Patch(tuple(dequantize(PARAMS[i], k) for i, k in enumerate(pc.classes)))


def sample_patch(rng: np.random.Generator) -> PatchClasses:
    """Draw each class i.i.d. uniform over {0..15}."""
    return PatchClasses(tuple(int(k) for k in rng.integers(0, NUM_CLASSES, NUM_PARAMS)))


def encode(pc: PatchClasses) -> np.ndarray:
    """One-hot-per-block label vector, shape (368,), dtype float32."""
    bits = np.zeros(LABEL_DIM, dtype=np.float32)
    for i, k in enumerate(pc.classes):
        bits[i * NUM_CLASSES + k] = 1.0
    return bits


def decode(bits: np.ndarray) -> PatchClasses:
    """Inverse of :func:`encode`; requires exactly one set bit per block."""
    bits = np.asarray(bits)
    if bits.shape != (LABEL_DIM,):
        raise InputError(f"label vector must have shape ({LABEL_DIM},)")
    blocks = bits.reshape(NUM_PARAMS, NUM_CLASSES)
    if not np.array_equal(blocks.sum(axis=1), np.ones(NUM_PARAMS)):
        raise InputError("label vector is not one-hot per block")
    return PatchClasses(tuple(int(k) for k in blocks.argmax(axis=1)))


def decode_scores(scores: np.ndarray) -> PatchClasses:
    """Argmax readout per 16-wide block; ties resolve to the lowest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (LABEL_DIM,):
        raise InputError(f"score vector must have shape ({LABEL_DIM},)")
    blocks = scores.reshape(NUM_PARAMS, NUM_CLASSES)
    return PatchClasses(tuple(int(k) for k in blocks.argmax(axis=1)))


def param_table_manifest() -> dict:
    """Machine-readable description of the parameter grid, shipped with
    every dataset so labels stay interpretable."""
    return {
        "version": PARAM_TABLE_VERSION,
        "num_classes": NUM_CLASSES,
        "order": list(PARAM_IDS),
        "params": [
            {"id": p.id, "lo": p.lo, "hi": p.hi, "scale": p.scale, "unit": p.unit}
            for p in PARAMS
        ],
    }


def param_table_hash() -> str:
    blob = json.dumps(param_table_manifest(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]
