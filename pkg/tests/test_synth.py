import math

import numpy as np
import pytest
from scipy.signal import freqz

from synthfit import synth
from synthfit.errors import InputError
from synthfit.params import PARAM_IDS, Patch, dequantize_patch, sample_patch


def make_patch(**overrides):
    """Patch with quiet defaults; override by parameter id."""
    base = {
        "a": 0.001, "d": 0.001, "s": 1.0, "r": 0.2,
        "f_gate": 0.5, "f_cut": 4000.0, "q": 0.5,
    }
    for w in ("saw", "sin", "sqr", "tri"):
        base[f"A_{w}"] = 0.0
        base[f"B_{w}"] = 0.0
        base[f"v_{w}"] = 1.0
        base[f"f_{w}"] = 440.0
    base.update(overrides)
    return Patch(tuple(base[pid] for pid in PARAM_IDS))


# --- waveforms ---

def series_oracle(a, n_terms, power):
    total = 0.0
    for n in range(1, n_terms + 1):
        total += ((-1) ** n) * math.sin(n * a) / n**power
    return 0.5 - total / math.pi


@pytest.mark.parametrize("phase", [0.0, 0.3, 1.7, 2.5, 4.0, 6.0, -1.2, 13.5])
def test_saw_tri_match_scalar_series(phase):
    for wf, power in (("saw", 1), ("tri", 2)):
        for n_terms in (1, 5, 18, 64):
            got = synth.osc_wave(wf, np.array([phase]), n_terms)[0]
            assert got == pytest.approx(series_oracle(phase, n_terms, power), abs=1e-12)


def test_sin_and_sqr_waveforms():
    a = np.linspace(-7, 7, 301)
    assert np.array_equal(synth.osc_wave("sin", a), np.sin(a))
    assert np.array_equal(synth.osc_wave("sqr", a), np.sign(np.sin(a)))


def test_osc_wave_rejects_unknown():
    with pytest.raises(InputError):
        synth.osc_wave("noise", np.zeros(4))


def test_harmonic_truncation():
    assert synth.harmonics_below_nyquist(440.0, 16384) == 18
    assert synth.harmonics_below_nyquist(100.0, 16384) == 64  # capped
    assert synth.harmonics_below_nyquist(9000.0, 16384) == 1  # floor


def test_pure_sine_voice_spectrum():
    # 1 s at 16384 Hz gives 1 Hz bins, so an unmodulated 440 Hz sine
    # lands exactly in bin 440
    y = synth.render_oscillator("sin", 440.0, 1.0, 1.0, 0.0)
    mag = np.abs(np.fft.rfft(y))
    assert mag.argmax() == 440
    assert mag[440] == pytest.approx(16384 / 2, rel=1e-9)


def test_fm_sidebands():
    # modulation at 10 Hz puts energy at 440 +- 10k
    y = synth.render_oscillator("sin", 440.0, 10.0, 1.0, 2.0)
    mag = np.abs(np.fft.rfft(y))
    floor = np.median(mag)
    for bin_ in (430, 450, 420, 460):
        assert mag[bin_] > 100 * max(floor, 1e-12)


def test_sum_oscillators():
    ones = np.ones(8)
    out = synth.sum_oscillators([ones, 2 * ones, 3 * ones, 4 * ones], 0.25)
    assert np.allclose(out, 2.5)
    with pytest.raises(InputError):
        synth.sum_oscillators([np.ones(8), np.ones(9)], 0.25)


# --- envelope ---

def test_adsr_known_point():
    v = synth.adsr_envelope(0.1, 0.2, 0.5, 0.2, 0.5, np.array([0.6]))[0]
    assert v == pytest.approx(0.25)


def test_adsr_stage_boundaries():
    a, d, s, r, off = 0.1, 0.2, 0.5, 0.2, 0.5
    t = np.array([0.0, a, a + d, 0.4, off, off + r, 0.99])
    env = synth.adsr_envelope(a, d, s, r, off, t)
    assert env[0] == 0.0
    assert env[1] == pytest.approx(1.0)
    assert env[2] == pytest.approx(s)
    assert env[3] == pytest.approx(s)  # sustain plateau
    assert env[4] == pytest.approx(s)  # value at release start
    assert env[5] == pytest.approx(0.0)
    assert env[6] == 0.0  # clamped after release ends


def test_adsr_release_from_mid_attack():
    # key released halfway up the attack ramp: release starts from 0.5
    env = synth.adsr_envelope(0.4, 0.1, 0.8, 0.2, 0.2, np.array([0.2, 0.3, 0.4]))
    assert env[0] == pytest.approx(0.5)
    assert env[1] == pytest.approx(0.25)
    assert env[2] == pytest.approx(0.0)


def test_adsr_bounds_and_monotone_attack():
    t = np.linspace(0, 1, 16384)
    env = synth.adsr_envelope(0.3, 0.2, 0.4, 0.3, 0.6, t)
    assert np.all(env >= 0.0) and np.all(env <= 1.0)
    attack = env[t < 0.3]
    assert np.all(np.diff(attack) > 0)


# --- filter ---

def test_lowpass_dc_gain_unity():
    b, a = synth.lowpass_coeffs(1000.0, 0.7, 16384)
    assert b.sum() / a.sum() == pytest.approx(1.0)


def test_lowpass_attenuates_above_cutoff():
    b, a = synth.lowpass_coeffs(500.0, 0.7, 16384)
    w, h = freqz(b, a, worN=[100.0, 500.0, 2000.0, 4000.0], fs=16384)
    mag = np.abs(h)
    assert mag[0] > 0.95       # passband
    assert mag[2] < 0.1        # stopband
    assert mag[3] < mag[2]     # still falling


def test_lowpass_resonance_peaks_at_cutoff():
    gains = []
    for q in (0.5, 2.0, 8.0):
        b, a = synth.lowpass_coeffs(1000.0, q, 16384)
        _, h = freqz(b, a, worN=[1000.0], fs=16384)
        gains.append(abs(h[0]))
    assert gains[0] < gains[1] < gains[2]
    # this topology has gain ~= q at the corner frequency
    assert gains[1] == pytest.approx(2.0, rel=0.05)


def test_lowpass_filter_runs_causal():
    x = np.zeros(64)
    x[10] = 1.0
    y = synth.lowpass_resonant(x, 2000.0, 0.7)
    assert np.all(y[:10] == 0.0)
    assert y[10] != 0.0


# --- gate ---

def test_gate_masks_negative_half_cycles():
    x = np.ones(16384)
    g = synth.gate(x, 2.0)
    assert set(np.unique(g)) <= {0.0, 1.0}
    assert abs(g.mean() - 0.5) < 0.01
    # first quarter second is the positive half of the first cycle
    assert np.all(g[:4096] == 1.0)


def test_gate_idempotent():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(16384)
    for f in (0.5, 2.0, 7.3, 30.0):
        once = synth.gate(x, f)
        assert np.array_equal(synth.gate(once, f), once)


def test_gate_preserves_open_samples():
    rng = np.random.default_rng(6)
    x = rng.standard_normal(16384)
    g = synth.gate(x, 3.0)
    kept = g != 0.0
    assert np.array_equal(g[kept], x[kept])


# --- full render ---

def test_render_shape_range_dtype():
    y = synth.render_patch(make_patch(A_sin=1.0))
    assert y.shape == (16384,)
    assert y.dtype == np.float64
    assert np.all(np.abs(y) <= 1.0)


def test_render_bit_reproducible():
    rng = np.random.default_rng(42)
    for _ in range(3):
        patch = dequantize_patch(sample_patch(rng))
        assert np.array_equal(synth.render_patch(patch), synth.render_patch(patch))


def test_render_silent_patch():
    y = synth.render_patch(make_patch())  # all amplitudes zero
    assert np.array_equal(y, np.zeros(16384))


def test_render_gate_imprint():
    # a slow gate leaves exact zero spans in the output
    y = synth.render_patch(make_patch(A_sin=1.0, f_gate=1.0))
    t = np.arange(16384) / 16384
    closed = np.sin(2 * np.pi * 1.0 * t) < 0
    assert np.all(y[closed] == 0.0)


def test_render_clips_hard():
    # high resonance near the carrier can overshoot; output must stay in range
    y = synth.render_patch(make_patch(A_sin=1.0, A_sqr=1.0, A_saw=1.0, f_cut=440.0, q=10.0))
    assert np.all(np.abs(y) <= 1.0)


def test_render_config_validation():
    with pytest.raises(InputError):
        synth.RenderConfig(note_off_time=0.0)
    with pytest.raises(InputError):
        synth.RenderConfig(note_off_time=1.5)
    with pytest.raises(InputError):
        synth.RenderConfig(harmonic_limit=0)


def test_time_base():
    cfg = synth.RenderConfig()
    t = cfg.time_base()
    assert len(t) == 16384
    assert t[0] == 0.0
    assert t[1] == pytest.approx(1 / 16384)
    assert t[-1] == pytest.approx(1 - 1 / 16384)
