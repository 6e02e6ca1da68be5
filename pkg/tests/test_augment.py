import numpy as np
import pytest

from vitalcam.augment import AugmentSpec, augment_pair, resample_temporal
from vitalcam.maps import SpatioTemporalMap


def sine_map(freq_hz, frames, fps=30.0, rois=4, channels=1, phase=0.0):
    t = np.arange(frames) / fps
    wave = np.sin(2 * np.pi * freq_hz * t + phase).astype(np.float32)
    data = np.tile(wave, (channels, rois, 1))
    return SpatioTemporalMap(data=data, fps=fps)


def dominant_freq(values, fps, nfft=1 << 14):
    spec = np.abs(np.fft.rfft(values - values.mean(), n=nfft))
    return np.fft.rfftfreq(nfft, 1.0 / fps)[np.argmax(spec)]


def test_spec_bounds():
    spec = AugmentSpec(target_frames=150, shrink=30, stretch=60)
    assert spec.min_frames == 120
    assert spec.max_frames == 210
    with pytest.raises(ValueError):
        AugmentSpec(target_frames=6)
    with pytest.raises(ValueError):
        AugmentSpec(target_frames=20, shrink=19)


@pytest.mark.parametrize("length,target", [(120, 150), (150, 150), (210, 150), (96, 64)])
def test_resample_scales_apparent_frequency(length, target):
    # compressing L frames onto T multiplies apparent frequency by L/T
    fps = 30.0
    f0 = 1.3
    stm = sine_map(f0, length, fps=fps)
    out = resample_temporal(stm, target)
    assert out.frames == target
    got = dominant_freq(out.data[0, 0].astype(np.float64), fps)
    expect = f0 * length / target
    bin_width = fps / (1 << 14)
    assert abs(got - expect) < max(2 * bin_width, fps / target)


def test_resample_keeps_fps_field():
    stm = sine_map(1.0, 90)
    assert resample_temporal(stm, 45).fps == stm.fps


def test_pair_shares_the_draw():
    spec = AugmentSpec(target_frames=64, shrink=20, stretch=20)
    seen = []
    rng = np.random.default_rng(5)
    a = sine_map(1.2, 84, phase=0.0)
    b = sine_map(1.2, 84, phase=1.0)
    out_a, out_b = augment_pair(a, b, spec, rng, on_length=seen.append)
    assert len(seen) == 1
    assert spec.min_frames <= seen[0] <= spec.max_frames
    assert out_a.frames == out_b.frames == 64
    # same L on both: identical frequency shift, so the phase offset between
    # the views survives resampling
    # a one-frame difference in L would move the peak by f0/T = 0.019 Hz;
    # allow only leakage-sized disagreement well below that
    fa = dominant_freq(out_a.data[0, 0].astype(np.float64), 30.0)
    fb = dominant_freq(out_b.data[0, 0].astype(np.float64), 30.0)
    assert fa == pytest.approx(fb, abs=9e-3)


def test_draw_covers_range_and_is_seeded():
    spec = AugmentSpec(target_frames=32, shrink=10, stretch=10)
    a = sine_map(1.0, 48)
    b = sine_map(1.0, 48)
    lengths = []
    rng = np.random.default_rng(0)
    for _ in range(200):
        augment_pair(a, b, spec, rng, on_length=lengths.append)
    assert min(lengths) == spec.min_frames
    assert max(lengths) == spec.max_frames

    rng1, rng2 = np.random.default_rng(9), np.random.default_rng(9)
    out1, _ = augment_pair(a, b, spec, rng1)
    out2, _ = augment_pair(a, b, spec, rng2)
    np.testing.assert_array_equal(out1.data, out2.data)


def test_too_short_clip_rejected():
    spec = AugmentSpec(target_frames=64, shrink=10, stretch=30)
    a = sine_map(1.0, 80)
    b = sine_map(1.0, 80)
    with pytest.raises(ValueError, match="need >= 94"):
        augment_pair(a, b, spec, np.random.default_rng(0))


def test_mismatched_lengths_rejected():
    spec = AugmentSpec(target_frames=32, shrink=4, stretch=4)
    a = sine_map(1.0, 40)
    b = sine_map(1.0, 41)
    with pytest.raises(ValueError, match="disagree"):
        augment_pair(a, b, spec, np.random.default_rng(0))
