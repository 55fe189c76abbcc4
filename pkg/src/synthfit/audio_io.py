"""WAV input/output, for files and in-memory byte buffers.

Files are mono 16-bit PCM.  Floats are quantized with round-to-nearest at
full scale 32767 and clipped; reading scales back by the same constant, so
a write/read round trip is exact up to the 16-bit grid.
"""

from __future__ import annotations

import io
import wave
from pathlib import Path

import numpy as np

from .errors import FormatError, InputError
from .synth import NUM_SAMPLES, SAMPLE_RATE

PCM_SCALE = 32767


def wav_bytes(samples, sample_rate: int = SAMPLE_RATE) -> bytes:
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise InputError("expected a 1-D sample array")
    pcm = np.clip(np.rint(samples * PCM_SCALE), -32768, 32767).astype("<i2")
    buf = io.BytesIO()
    with wave.open(buf, "wb") as f:
        f.setnchannels(1)
        f.setsampwidth(2)
        f.setframerate(sample_rate)
        f.writeframes(pcm.tobytes())
    return buf.getvalue()


def write_wav(path, samples, sample_rate: int = SAMPLE_RATE) -> None:
    Path(path).write_bytes(wav_bytes(samples, sample_rate))


def parse_wav(data: bytes) -> tuple[np.ndarray, int]:
    """Decode mono 16-bit PCM WAV bytes; returns (float64 in [-1, 1], rate)."""
    try:
        with wave.open(io.BytesIO(data), "rb") as f:
            channels = f.getnchannels()
            width = f.getsampwidth()
            rate = f.getframerate()
            frames = f.readframes(f.getnframes())
    except (wave.Error, EOFError) as e:
        raise FormatError(f"not a readable WAV file: {e}") from e
    if channels != 1:
        raise FormatError(f"expected mono audio, got {channels} channels")
    if width != 2:
        raise FormatError(f"expected 16-bit samples, got {8 * width}-bit")
    pcm = np.frombuffer(frames, dtype="<i2")
    return pcm.astype(np.float64) / PCM_SCALE, rate


def read_wav(path) -> tuple[np.ndarray, int]:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    return parse_wav(path.read_bytes())


def require_render_compatible(samples: np.ndarray, rate: int) -> np.ndarray:
    """Require the renderer's native format: 16384 Hz mono, exactly one
    second.  No resampling is attempted."""
    if rate != SAMPLE_RATE:
        raise FormatError(f"expected {SAMPLE_RATE} Hz audio, got {rate} Hz")
    if len(samples) != NUM_SAMPLES:
        raise FormatError(f"expected exactly {NUM_SAMPLES} samples, got {len(samples)}")
    return samples


def read_render_compatible(path) -> np.ndarray:
    return require_render_compatible(*read_wav(path))


def parse_render_compatible(data: bytes) -> np.ndarray:
    return require_render_compatible(*parse_wav(data))
