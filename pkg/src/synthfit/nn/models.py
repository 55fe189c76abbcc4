"""Model catalog and network assembly.

Twelve named architectures over three input kinds:

* spectrogram models Conv1..Conv6 and Conv6XL: stacks of strided 2-D
  convolutions over a (1, 64, 257) time-frequency image;
* ConvE2E: four stride-4 1-D convolutions turn 16384 raw samples into a
  257-channel, 64-step sequence, reshaped into the same (1, 64, 257) image
  and finished with the Conv6 stack;
* bag-of-words models FCLinear/FC1/FC2/FC3: dense stacks with dropout.

Every model ends with a 368-unit dense layer under a sigmoid, one
16-way score block per synthesizer parameter.  ``width_scale`` shrinks
hidden widths for desk-scale runs; the output layer never scales.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..params import LABEL_DIM
from . import layers as L

SPECTROGRAM_SHAPE = (1, 64, 257)   # channel, time frames, frequency bins
RAW_AUDIO_SHAPE = (1, 1, 16384)
DEFAULT_BOW_DIM = 1000
INPUT_KINDS = ("spectrogram", "raw_audio", "bow")


@dataclass(frozen=True)
class LayerSpec:
    kind: str                      # conv | fc | relu | sigmoid | dropout | flatten | to_image
    f: int | None = None
    k1: int | None = None
    k2: int | None = None
    s1: int | None = None
    s2: int | None = None
    out_dim: int | None = None
    p: float | None = None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        for name in ("f", "k1", "k2", "s1", "s2", "out_dim", "p"):
            v = getattr(self, name)
            if v is not None:
                d[name] = v
        return d

    @staticmethod
    def from_dict(d: dict) -> "LayerSpec":
        return LayerSpec(**d)


def conv(f, k1, k2, s1, s2):
    return LayerSpec("conv", f=f, k1=k1, k2=k2, s1=s1, s2=s2)


def fc(out_dim):
    return LayerSpec("fc", out_dim=out_dim)


def drop(p):
    return LayerSpec("dropout", p=p)


RELU = LayerSpec("relu")
SIGMOID = LayerSpec("sigmoid")
FLATTEN = LayerSpec("flatten")
TO_IMAGE = LayerSpec("to_image")

# (F, K1, K2, S1, S2) per layer, the 2-D stacks
_CONV_STACKS = {
    "Conv1": [(38, 13, 26, 13, 26)],
    "Conv2": [(35, 6, 7, 5, 6), (87, 6, 9, 5, 8)],
    "Conv3": [(32, 4, 5, 3, 4), (98, 4, 6, 3, 5), (128, 4, 6, 3, 5)],
    "Conv4": [(32, 3, 4, 2, 3), (65, 3, 4, 2, 3), (105, 3, 4, 2, 3), (128, 4, 5, 3, 4)],
    "Conv5": [
        (32, 3, 3, 2, 2), (98, 3, 3, 2, 2), (128, 3, 4, 2, 3),
        (128, 3, 5, 2, 4), (128, 3, 3, 2, 2),
    ],
    "Conv6": [
        (32, 3, 3, 2, 2), (71, 3, 3, 2, 2), (128, 3, 4, 2, 3),
        (128, 3, 3, 2, 2), (128, 3, 3, 2, 2), (128, 3, 3, 1, 2),
    ],
    "Conv6XL": [
        (64, 3, 3, 2, 2), (128, 3, 3, 2, 2), (128, 3, 4, 2, 3),
        (128, 3, 3, 2, 2), (256, 3, 3, 2, 2), (256, 3, 3, 1, 2),
    ],
}

# stride-4 1-D front end of the end-to-end model: 16384 -> 4096 -> 1024 -> 256 -> 64
_E2E_1D = [(96, 1, 64, 1, 4), (96, 1, 32, 1, 4), (128, 1, 16, 1, 4), (257, 1, 8, 1, 4)]

# (hidden dense sizes interleaved with dropout, relu_hidden) for bow models
_FC_STACKS = {
    "FCLinear": ([fc(869), drop(0.2)], False),
    "FC1": ([fc(868), drop(0.3)], True),
    "FC2": ([fc(603), drop(0.1), fc(602), drop(0.3)], True),
    "FC3": ([fc(560), fc(500), drop(0.2), fc(400), drop(0.4)], True),
}

ARCHITECTURE_NAMES = tuple(_FC_STACKS) + tuple(_CONV_STACKS) + ("ConvE2E",)


@dataclass(frozen=True)
class ModelSpec:
    name: str
    layers: tuple[LayerSpec, ...]
    input_kind: str
    width_scale: float = 1.0
    bow_dim: int = DEFAULT_BOW_DIM
    custom_input: tuple[int, ...] | None = None  # overrides the kind's shape (ad-hoc models)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input_kind": self.input_kind,
            "width_scale": self.width_scale,
            "bow_dim": self.bow_dim,
            "custom_input": list(self.custom_input) if self.custom_input else None,
            "layers": [ls.to_dict() for ls in self.layers],
        }

    @staticmethod
    def from_dict(d: dict) -> "ModelSpec":
        custom = d.get("custom_input")
        return ModelSpec(
            name=d["name"],
            layers=tuple(LayerSpec.from_dict(ld) for ld in d["layers"]),
            input_kind=d["input_kind"],
            width_scale=d["width_scale"],
            bow_dim=d["bow_dim"],
            custom_input=tuple(custom) if custom else None,
        )


def _scaled(width: int, scale: float) -> int:
    return max(1, math.ceil(width * scale))


def build_model(name: str, width_scale: float = 1.0, bow_dim: int = DEFAULT_BOW_DIM) -> ModelSpec:
    """Layer list for a named architecture.  Channel and hidden-unit counts
    are multiplied by ``width_scale`` (rounded up, at least 1); kernel sizes,
    strides, dropout rates, and the 368-unit output never scale."""
    if width_scale <= 0:
        raise InputError("width_scale must be positive")
    out: list[LayerSpec] = []
    if name in _CONV_STACKS or name == "ConvE2E":
        stacks = _E2E_1D + _CONV_STACKS["Conv6"] if name == "ConvE2E" else _CONV_STACKS[name]
        n_1d = len(_E2E_1D) if name == "ConvE2E" else 0
        for i, (f_, k1, k2, s1, s2) in enumerate(stacks):
            out.append(conv(_scaled(f_, width_scale), k1, k2, s1, s2))
            out.append(RELU)
            if name == "ConvE2E" and i == n_1d - 1:
                out.append(TO_IMAGE)
        out.append(FLATTEN)
        out.extend([fc(_scaled(512, width_scale)), RELU])
        kind = "raw_audio" if name == "ConvE2E" else "spectrogram"
    elif name in _FC_STACKS:
        stack, relu_hidden = _FC_STACKS[name]
        for ls in stack:
            if ls.kind == "fc":
                out.append(fc(_scaled(ls.out_dim, width_scale)))
                if relu_hidden:
                    out.append(RELU)
            else:
                out.append(ls)
        kind = "bow"
    else:
        raise InputError(f"unknown architecture {name!r}")
    out.extend([fc(LABEL_DIM), SIGMOID])
    return ModelSpec(name, tuple(out), kind, width_scale, bow_dim)


def input_shape(spec: ModelSpec) -> tuple[int, ...]:
    if spec.custom_input is not None:
        return spec.custom_input
    if spec.input_kind == "spectrogram":
        return SPECTROGRAM_SHAPE
    if spec.input_kind == "raw_audio":
        return RAW_AUDIO_SHAPE
    if spec.input_kind == "bow":
        return (spec.bow_dim,)
    raise InputError(f"unknown input kind {spec.input_kind!r}")


def prepare_input(kind: str, batch: np.ndarray) -> np.ndarray:
    """Convert naturally shaped data into network input tensors.

    spectrogram: (B, 257, 64) frequency x time -> (B, 1, 64, 257)
    raw_audio:   (B, 16384)                    -> (B, 1, 1, 16384)
    bow:         (B, K)                        -> unchanged
    """
    if kind == "spectrogram":
        if batch.ndim != 3 or batch.shape[1:] != (257, 64):
            raise InputError(f"expected (batch, 257, 64) spectrograms, got {batch.shape}")
        return np.ascontiguousarray(batch.transpose(0, 2, 1)[:, None, :, :])
    if kind == "raw_audio":
        if batch.ndim != 2 or batch.shape[1] != 16384:
            raise InputError(f"expected (batch, 16384) audio, got {batch.shape}")
        return batch[:, None, None, :]
    if kind == "bow":
        if batch.ndim != 2:
            raise InputError(f"expected (batch, K) vectors, got {batch.shape}")
        return batch
    raise InputError(f"unknown input kind {kind!r}")


def _walk_shapes(spec: ModelSpec):
    """Yield (layer_spec, in_shape) pairs; shapes exclude the batch axis.
    Conv shapes are (C, H, W); dense shapes are (dim,)."""
    shape = input_shape(spec)
    for ls in spec.layers:
        yield ls, shape
        if ls.kind == "conv":
            c, h, w = shape
            oh = -(-h // ls.s1)
            ow = -(-w // ls.s2)
            shape = (ls.f, oh, ow)
        elif ls.kind == "flatten":
            shape = (int(np.prod(shape)),)
        elif ls.kind == "to_image":
            c, h, w = shape
            shape = (1, w, c)
        elif ls.kind == "fc":
            if len(shape) != 1:
                raise InputError("dense layer needs flat input; add a flatten first")
            shape = (ls.out_dim,)
    return


def param_count(spec: ModelSpec) -> int:
    total = 0
    for ls, shape in _walk_shapes(spec):
        if ls.kind == "conv":
            total += ls.f * shape[0] * ls.k1 * ls.k2 + ls.f
        elif ls.kind == "fc":
            total += shape[0] * ls.out_dim + ls.out_dim
    return total


def _layer_label(ls: LayerSpec) -> str:
    if ls.kind == "conv":
        return f"conv f={ls.f} k={ls.k1}x{ls.k2} s={ls.s1}x{ls.s2}"
    if ls.kind == "fc":
        return f"fc {ls.out_dim}"
    if ls.kind == "dropout":
        return f"dropout p={ls.p}"
    return ls.kind


def layer_summaries(spec: ModelSpec) -> list[dict]:
    """Per-layer audit rows: label, incoming shape, weight count."""
    rows = []
    for ls, shape in _walk_shapes(spec):
        if ls.kind == "conv":
            n = ls.f * shape[0] * ls.k1 * ls.k2 + ls.f
        elif ls.kind == "fc":
            n = shape[0] * ls.out_dim + ls.out_dim
        else:
            n = 0
        rows.append({"layer": _layer_label(ls), "input_shape": list(shape), "params": n})
    return rows


class Network:
    """A ModelSpec instantiated with weights.

    ``forward`` runs the whole stack; ``backward`` takes the loss gradient
    at the scores and fills every layer's weight gradients while returning
    the input gradient.
    """

    def __init__(self, spec: ModelSpec, rng: np.random.Generator, dtype=np.float32):
        self.spec = spec
        self.dtype = np.dtype(dtype)
        self.layers: list[L.Layer] = []
        for ls, shape in _walk_shapes(spec):
            if ls.kind == "conv":
                self.layers.append(
                    L.Conv2D(shape[0], ls.f, ls.k1, ls.k2, ls.s1, ls.s2, rng, self.dtype)
                )
            elif ls.kind == "fc":
                self.layers.append(L.Dense(shape[0], ls.out_dim, rng, self.dtype))
            elif ls.kind == "relu":
                self.layers.append(L.ReLU())
            elif ls.kind == "sigmoid":
                self.layers.append(L.Sigmoid())
            elif ls.kind == "dropout":
                self.layers.append(L.Dropout(ls.p))
            elif ls.kind == "flatten":
                self.layers.append(L.Flatten())
            elif ls.kind == "to_image":
                self.layers.append(L.ToImage())
            else:
                raise InputError(f"unknown layer kind {ls.kind!r}")

    def forward(self, x, train=False, rng=None) -> np.ndarray:
        expected = input_shape(self.spec)
        if x.shape[1:] != expected:
            raise InputError(f"expected input (batch, {expected}), got {x.shape}")
        y = np.ascontiguousarray(x, dtype=self.dtype)
        for layer in self.layers:
            y = layer.forward(y, train=train, rng=rng)
        return y

    def backward(self, dscores) -> np.ndarray:
        dy = np.ascontiguousarray(dscores, dtype=self.dtype)
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.params())
        return out

    def grads(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend(layer.grads())
        return out

    def param_count(self) -> int:
        return sum(p.size for p in self.params())

    def state(self) -> list[np.ndarray]:
        return [p.copy() for p in self.params()]

    def load_state(self, arrays) -> None:
        params = self.params()
        if len(arrays) != len(params):
            raise InputError(f"expected {len(params)} weight arrays, got {len(arrays)}")
        for p, a in zip(params, arrays):
            if p.shape != a.shape:
                raise InputError(f"weight shape {a.shape} does not match {p.shape}")
            p[...] = a
