import numpy as np
import pytest

from vitalcam.baselines import (
    MeanTrace,
    chrom_wave,
    pos_wave,
    rgb_mean_trace,
    rr_benchmark_wave,
)
from vitalcam.maps import SpatioTemporalMap


def skin_trace(freq_hz=1.2, seconds=20.0, fps=30.0, amp=0.01):
    """Pulsatile skin colour: small sinusoid on top of a skin-tone mean,
    strongest in green, like real photoplethysmography."""
    t = np.arange(int(seconds * fps)) / fps
    pulse = np.sin(2 * np.pi * freq_hz * t)
    base = np.array([150.0, 115.0, 95.0])
    weight = np.array([0.5, 1.0, 0.4]) * amp
    values = base[:, None] * (1.0 + weight[:, None] * pulse[None, :])
    return MeanTrace(values=values, fps=fps, source="rgb")


def dominant_freq(wave, nfft=1 << 14):
    v = wave.values - wave.values.mean()
    spec = np.abs(np.fft.rfft(v * np.hanning(v.size), n=nfft))
    return np.fft.rfftfreq(nfft, 1.0 / wave.fs)[np.argmax(spec)]


def test_mean_trace_validation():
    with pytest.raises(ValueError):
        MeanTrace(values=np.ones((2, 30)), fps=30.0, source="x")
    with pytest.raises(ValueError):
        MeanTrace(values=np.full((3, 30), np.nan), fps=30.0, source="x")
    with pytest.raises(ValueError):
        MeanTrace(values=np.ones((3, 30)), fps=0.0, source="x")
    tr = skin_trace()
    assert tr.frames == 600


@pytest.mark.parametrize("method", [chrom_wave, pos_wave])
def test_projection_recovers_pulse_frequency(method):
    trace = skin_trace(freq_hz=1.2)
    wave = method(trace)
    assert wave.values.size == trace.frames
    assert dominant_freq(wave) == pytest.approx(1.2, abs=0.05)


@pytest.mark.parametrize("method", [chrom_wave, pos_wave])
def test_projection_is_gain_invariant(method):
    trace = skin_trace(freq_hz=1.5)
    gains = np.array([1.9, 0.8, 1.3])[:, None]
    scaled = MeanTrace(values=trace.values * gains, fps=trace.fps, source="rgb")
    w1 = method(trace)
    w2 = method(scaled)
    # per-window normalization divides out any constant per-channel gain
    np.testing.assert_allclose(w1.values, w2.values, atol=1e-10)


def test_flat_input_rejected():
    trace = MeanTrace(values=np.tile(np.array([[150.0], [115.0], [95.0]]), (1, 300)),
                      fps=30.0, source="rgb")
    with pytest.raises(ValueError, match="flat"):
        chrom_wave(trace)


def test_nonpositive_channel_mean_rejected():
    trace = skin_trace()
    vals = trace.values.copy()
    vals[1] -= vals[1].mean() + 50.0
    bad = MeanTrace(values=vals, fps=30.0, source="rgb")
    with pytest.raises(ValueError, match="non-positive"):
        pos_wave(bad)


def test_too_short_for_windows():
    t = np.arange(60) / 30.0  # 2 s: shorter than two 1.6 s windows
    vals = np.array([150.0, 115.0, 95.0])[:, None] * (1 + 0.01 * np.sin(7 * t))[None, :]
    with pytest.raises(ValueError, match="at least two"):
        chrom_wave(MeanTrace(values=vals, fps=30.0, source="rgb"))


def test_rgb_mean_trace_averages_rois():
    rng = np.random.default_rng(0)
    data = rng.normal(loc=100.0, size=(3, 224, 40)).astype(np.float32)
    stm = SpatioTemporalMap(data=data, fps=30.0)
    trace = rgb_mean_trace(stm)
    np.testing.assert_allclose(trace.values, data.mean(axis=1), rtol=1e-6)
    with pytest.raises(ValueError):
        rgb_mean_trace(SpatioTemporalMap(data=data[:1], fps=30.0))


def test_rr_benchmark_waves():
    rng = np.random.default_rng(1)
    flow = rng.normal(size=(1, 224, 90)).astype(np.float32)
    stm = SpatioTemporalMap(data=flow, fps=30.0)
    wave = rr_benchmark_wave(stm, kind="flow_mean")
    np.testing.assert_allclose(wave.values, flow[0].astype(np.float64).mean(axis=0), atol=1e-9)

    rgb = rng.normal(loc=100.0, size=(3, 224, 90)).astype(np.float32)
    stm3 = SpatioTemporalMap(data=rgb, fps=30.0)
    wave3 = rr_benchmark_wave(stm3, kind="rgb_mean")
    np.testing.assert_allclose(wave3.values, rgb.astype(np.float64).mean(axis=(0, 1)), atol=1e-9)

    with pytest.raises(ValueError, match="unknown"):
        rr_benchmark_wave(stm, kind="median")
    with pytest.raises(ValueError, match="1-channel"):
        rr_benchmark_wave(stm3, kind="flow_mean")
