"""Deterministic software synthesizer.

Signal chain: four frequency-modulated oscillators (sine, saw, square,
triangle) are summed, shaped by a linear ADSR envelope, passed through a
resonant low-pass biquad, and finally chopped by a square-wave gate.  The
result is hard-clipped to [-1, 1].

Rendering is a pure function of (patch, config): same inputs give
bit-identical buffers, which the dataset generator and the evaluation
pipeline both rely on.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import InputError
from .params import Patch

SAMPLE_RATE = 16384
DURATION_S = 1.0
NUM_SAMPLES = int(SAMPLE_RATE * DURATION_S)

# saw/tri series are truncated at the largest harmonic below Nyquist,
# capped to keep per-render cost bounded.
MAX_HARMONICS = 64


@dataclass(frozen=True)
class RenderConfig:
    sample_rate: int = SAMPLE_RATE
    duration: float = DURATION_S
    note_off_time: float = 0.5  # key release inside the clip; exercises all ADSR stages
    harmonic_limit: int = MAX_HARMONICS
    mix_norm: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.note_off_time <= self.duration:
            raise InputError("note_off_time must lie in (0, duration]")
        if self.harmonic_limit < 1:
            raise InputError("harmonic_limit must be >= 1")

    @property
    def num_samples(self) -> int:
        return int(round(self.sample_rate * self.duration))

    def time_base(self) -> np.ndarray:
        return np.arange(self.num_samples, dtype=np.float64) / self.sample_rate


def osc_wave(waveform: str, phase, harmonic_limit: int = MAX_HARMONICS):
    """Evaluate one oscillator waveform at the given phase (radians).

    sin:  sin(a)
    sqr:  sgn(sin(a))
    saw:  1/2 - (1/pi) * sum_{n=1..N} (-1)^n sin(n a) / n
    tri:  1/2 - (1/pi) * sum_{n=1..N} (-1)^n sin(n a) / n^2
    """
    a = np.asarray(phase, dtype=np.float64)
    if waveform == "sin":
        return np.sin(a)
    if waveform == "sqr":
        return np.sign(np.sin(a))
    if waveform in ("saw", "tri"):
        power = 1 if waveform == "saw" else 2
        n = np.arange(1, harmonic_limit + 1, dtype=np.float64)
        signs = np.where(n % 2 == 0, 1.0, -1.0) / n**power
        # sum over harmonics of sin(n*a); outer product keeps it vectorized
        acc = np.sin(np.multiply.outer(n, a))
        return 0.5 - (signs @ acc.reshape(len(n), -1)).reshape(a.shape) / np.pi
    raise InputError(f"unknown waveform {waveform!r}")


def harmonics_below_nyquist(carrier_hz: float, sample_rate: int, cap: int = MAX_HARMONICS) -> int:
    n = int((sample_rate / 2) // max(carrier_hz, 1e-9))
    return max(1, min(cap, n))


def render_oscillator(
    waveform: str,
    carrier_hz: float,
    mod_hz: float,
    amplitude: float,
    mod_amplitude: float,
    cfg: RenderConfig = RenderConfig(),
) -> np.ndarray:
    """One FM voice: amplitude * wave(2*pi*f*t + B*sin(2*pi*v*t))."""
    t = cfg.time_base()
    phase = 2.0 * np.pi * carrier_hz * t + mod_amplitude * np.sin(2.0 * np.pi * mod_hz * t)
    limit = harmonics_below_nyquist(carrier_hz, cfg.sample_rate, cfg.harmonic_limit)
    return amplitude * osc_wave(waveform, phase, limit)


def sum_oscillators(voices, mix_norm: float = 0.25) -> np.ndarray:
    lengths = {len(v) for v in voices}
    if len(lengths) != 1:
        raise InputError("oscillator outputs differ in length")
    out = np.zeros(lengths.pop(), dtype=np.float64)
    for v in voices:
        out += v
    return out * mix_norm


def adsr_envelope(attack, decay, sustain, release, note_off: float, t) -> np.ndarray:
    """Piecewise-linear gain at time(s) ``t``.

    0 -> 1 over the attack, 1 -> sustain over the decay, flat until note_off,
    then linear to 0 over the release.  If the key is released mid-attack or
    mid-decay the release ramps down from the envelope value at note_off.
    """
    t = np.asarray(t, dtype=np.float64)

    def held(tt):
        up = np.minimum(tt / attack, 1.0)
        down = 1.0 - np.clip((tt - attack) / decay, 0.0, 1.0) * (1.0 - sustain)
        return np.where(tt < attack, up, down)

    level_at_off = held(np.float64(note_off))
    releasing = level_at_off * np.clip(1.0 - (t - note_off) / release, 0.0, 1.0)
    return np.where(t < note_off, held(t), releasing)


def lowpass_coeffs(cutoff_hz: float, resonance: float, sample_rate: int):
    """Biquad low-pass (bilinear transform) with quality factor = resonance.

    Unit DC gain; a resonant peak grows near the cutoff as resonance rises.
    """
    q = min(max(resonance, 0.01), 10.0)
    w0 = 2.0 * np.pi * cutoff_hz / sample_rate
    alpha = np.sin(w0) / (2.0 * q)
    cosw = np.cos(w0)
    b = np.array([(1 - cosw) / 2, 1 - cosw, (1 - cosw) / 2])
    a = np.array([1 + alpha, -2 * cosw, 1 - alpha])
    return b / a[0], a / a[0]


def lowpass_resonant(x, cutoff_hz: float, resonance: float, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    b, a = lowpass_coeffs(cutoff_hz, resonance, sample_rate)
    return lfilter(b, a, np.asarray(x, dtype=np.float64))


def gate(x, gate_hz: float, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Square-wave amplitude gate: passes where sin(2*pi*f*t) >= 0, mutes
    the negative half-cycles.  Open at exact zero crossings so gating is
    idempotent."""
    x = np.asarray(x, dtype=np.float64)
    t = np.arange(len(x), dtype=np.float64) / sample_rate
    open_mask = np.sin(2.0 * np.pi * gate_hz * t) >= 0.0
    return np.where(open_mask, x, 0.0)


def render_patch(patch: Patch, cfg: RenderConfig = RenderConfig()) -> np.ndarray:
    """Render a full patch to ``cfg.num_samples`` float64 samples in [-1, 1]."""
    voices = [
        render_oscillator(
            w, patch[f"f_{w}"], patch[f"v_{w}"], patch[f"A_{w}"], patch[f"B_{w}"], cfg
        )
        for w in ("saw", "sin", "sqr", "tri")
    ]
    mixed = sum_oscillators(voices, cfg.mix_norm)
    env = adsr_envelope(
        patch["a"], patch["d"], patch["s"], patch["r"], cfg.note_off_time, cfg.time_base()
    )
    shaped = mixed * env
    filtered = lowpass_resonant(shaped, patch["f_cut"], patch["q"], cfg.sample_rate)
    gated = gate(filtered, patch["f_gate"], cfg.sample_rate)
    return np.clip(gated, -1.0, 1.0)
