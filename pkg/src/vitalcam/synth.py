"""Synthetic dual-camera clip generator with analytic ground truth.

A subject is a pair of slope-limited piecewise-linear rate
trajectories (heart and respiration) plus amplitude parameters. The
latent pulse is a phase-integrated sum of a fundamental and two
harmonics; respiration is a single sinusoid with slow amplitude
drift. Both cameras sample the same latent waves, so cross-camera
training has a real shared signal, while each camera applies its own
gain, gamma, flicker, noise, timing jitter and (for flow) shake.

Camera randomness is seeded from the subject seed plus a digest of
the camera's parameters, so two identical camera specs produce
bit-identical maps and two different specs draw independent streams.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field

import numpy as np

from .maps import SpatioTemporalMap, stm_write
from .roi import N_ROIS
from .series import RateSeries, Waveform, write_rates_csv, write_wave_csv

HR_BAND_BPM = (45.0, 150.0)
RR_BAND_BPM = (10.0, 40.0)
MAX_SLOPE_BPM_S = 1.0
PULSE_CHANNEL_WEIGHTS = (0.5, 1.0, 0.4)
SKIN_BASE_RGB = (150.0, 115.0, 95.0)
RATE_WINDOW_SEC = 10.0
SHAKE_BAND_HZ = (0.05, 3.0)
FLICKER_BAND_HZ = (0.7, 2.5)
JITTER_BAND_HZ = (0.05, 3.0)
MIN_DURATION_SEC = 20.0


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-linear rate curve: (t_sec, bpm) breakpoints."""

    times: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        t = np.asarray(self.times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if t.size == 0 or t.size != v.size:
            raise ValueError("trajectory: times and values must match and be non-empty")
        if t[0] != 0.0:
            raise ValueError("trajectory: first breakpoint must be at t=0")
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise ValueError("trajectory: breakpoint times must increase")
        if not (np.isfinite(t).all() and np.isfinite(v).all()):
            raise ValueError("trajectory: non-finite breakpoints")
        if t.size > 1:
            slope = np.abs(np.diff(v) / np.diff(t))
            if slope.max() > MAX_SLOPE_BPM_S + 1e-12:
                raise ValueError(
                    f"trajectory: slope {slope.max():.3f} bpm/s exceeds {MAX_SLOPE_BPM_S}"
                )

    def sample(self, t: np.ndarray) -> np.ndarray:
        """Rate in bpm at times t (clamped outside the breakpoints)."""
        return np.interp(t, self.times, self.values)

    def check_band(self, lo: float, hi: float, what: str) -> None:
        v = np.asarray(self.values)
        if v.min() < lo or v.max() > hi:
            raise ValueError(
                f"trajectory out of band: {what} range "
                f"[{v.min():g}, {v.max():g}] outside [{lo:g}, {hi:g}]"
            )


def constant_trajectory(bpm: float) -> Trajectory:
    return Trajectory(times=(0.0,), values=(float(bpm),))


@dataclass(frozen=True)
class SubjectSpec:
    """Latent physiology of one synthetic recording."""

    hr: Trajectory
    rr: Trajectory
    seed: int
    pulse_harmonics: tuple[float, ...] = (1.0, 0.5, 0.25)
    pulse_amp: float = 0.02
    resp_amp_px: float = 2.0

    def __post_init__(self) -> None:
        self.hr.check_band(*HR_BAND_BPM, what="hr")
        self.rr.check_band(*RR_BAND_BPM, what="rr")
        if len(self.pulse_harmonics) == 0 or self.pulse_harmonics[0] <= 0:
            raise ValueError("subject: pulse needs a positive fundamental amplitude")
        if self.pulse_amp <= 0 or self.resp_amp_px <= 0:
            raise ValueError("subject: amplitudes must be positive")


@dataclass(frozen=True)
class CameraSpec:
    """One camera's transfer: gain, gamma, noise, timing, shake, flicker."""

    gains: tuple[float, float, float] = (1.0, 1.0, 1.0)
    gamma: float = 1.0
    noise_sigma: float = 0.0
    jitter_sigma: float = 0.0
    shake_amp: float = 0.0
    flicker_amp: float = 0.0
    flicker_chroma: tuple[float, float, float] = (1.0, 1.0, 1.0)
    flicker_amp2: float = 0.0
    flicker_chroma2: tuple[float, float, float] = (1.0, 1.0, 1.0)
    flow_noise: float = 0.0

    def __post_init__(self) -> None:
        if len(self.gains) != 3 or any(g <= 0 for g in self.gains):
            raise ValueError(f"camera: gains must be 3 positive values, got {self.gains}")
        if not 0.5 <= self.gamma <= 2.0:
            raise ValueError(f"camera: gamma {self.gamma} outside [0.5, 2.0]")
        for name in ("noise_sigma", "jitter_sigma", "shake_amp", "flicker_amp",
                     "flicker_amp2", "flow_noise"):
            if getattr(self, name) < 0:
                raise ValueError(f"camera: {name} must be >= 0")
        for name in ("flicker_chroma", "flicker_chroma2"):
            if len(getattr(self, name)) != 3:
                raise ValueError(f"camera: {name} must have 3 entries")

    def to_dict(self) -> dict:
        return {
            "gains": list(self.gains),
            "gamma": self.gamma,
            "noise_sigma": self.noise_sigma,
            "jitter_sigma": self.jitter_sigma,
            "shake_amp": self.shake_amp,
            "flicker_amp": self.flicker_amp,
            "flicker_chroma": list(self.flicker_chroma),
            "flicker_amp2": self.flicker_amp2,
            "flicker_chroma2": list(self.flicker_chroma2),
            "flow_noise": self.flow_noise,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CameraSpec":
        return cls(
            gains=tuple(d["gains"]),
            gamma=d["gamma"],
            noise_sigma=d["noise_sigma"],
            jitter_sigma=d["jitter_sigma"],
            shake_amp=d["shake_amp"],
            flicker_amp=d["flicker_amp"],
            flicker_chroma=tuple(d["flicker_chroma"]),
            flicker_amp2=d.get("flicker_amp2", 0.0),
            flicker_chroma2=tuple(d.get("flicker_chroma2", (1.0, 1.0, 1.0))),
            flow_noise=d["flow_noise"],
        )

    def digest(self) -> int:
        """Content digest; equal specs share camera RNG streams."""
        payload = json.dumps(self.to_dict(), sort_keys=True).encode()
        return int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")


@dataclass(frozen=True)
class ClipPair:
    """Synchronized maps of one subject seen by two cameras."""

    rgb_a: SpatioTemporalMap
    flow_a: SpatioTemporalMap
    rgb_b: SpatioTemporalMap
    flow_b: SpatioTemporalMap


@dataclass(frozen=True)
class SyntheticClip:
    pair: ClipPair
    truth_hr: RateSeries
    truth_rr: RateSeries
    truth_pulse: Waveform
    truth_resp: Waveform


def _band_noise(rng: np.random.Generator, n: int, fps: float, f_lo: float,
                f_hi: float, rms: float) -> np.ndarray:
    """Gaussian noise whose spectrum is confined to [f_lo, f_hi] Hz."""
    if rms == 0.0:
        return np.zeros(n)
    freqs = np.fft.rfftfreq(n, 1.0 / fps)
    sel = (freqs >= f_lo) & (freqs <= f_hi) & (freqs > 0)
    if not sel.any():
        raise ValueError(f"band noise: no spectral bins in [{f_lo}, {f_hi}] Hz for n={n}")
    spec = np.zeros(freqs.size, dtype=np.complex128)
    k = int(sel.sum())
    spec[sel] = rng.normal(size=k) + 1j * rng.normal(size=k)
    x = np.fft.irfft(spec, n)
    sd = x.std()
    return x * (rms / sd) if sd > 0 else x


def _phase_cycles(rate_bpm: np.ndarray, fps: float) -> np.ndarray:
    """Cumulative cycles from a per-frame bpm curve (trapezoid rule)."""
    hz = rate_bpm / 60.0
    steps = (hz[1:] + hz[:-1]) * (0.5 / fps)
    out = np.empty(hz.size)
    out[0] = 0.0
    np.cumsum(steps, out=out[1:])
    return out


def _rate_truth(traj: Trajectory, duration: float, fps: float) -> RateSeries:
    """Mean rate over each 10 s window at 1 s steps, like rates_from_wave."""
    n = int(round(duration * fps))
    # one sample past the last frame so the final window [dur-10, dur]
    # is integrated over its full extent
    t = np.arange(n + 1) / fps
    phase = _phase_cycles(traj.sample(t), fps)
    last = int(np.floor(duration - RATE_WINDOW_SEC))
    if last < 0:
        raise ValueError(f"gen: duration {duration} too short for a rate window")
    starts = np.arange(last + 1, dtype=np.float64)
    p0 = np.interp(starts, t, phase)
    p1 = np.interp(starts + RATE_WINDOW_SEC, t, phase)
    bpm = (p1 - p0) * (60.0 / RATE_WINDOW_SEC)
    return RateSeries(t_sec=starts + RATE_WINDOW_SEC / 2.0, bpm=bpm)


def _pulse_at(tau: np.ndarray, t_grid: np.ndarray, phase: np.ndarray,
              harmonics: tuple[float, ...], offsets: np.ndarray) -> np.ndarray:
    ph = np.interp(tau, t_grid, phase)
    out = np.zeros(tau.size)
    for h, amp in enumerate(harmonics, start=1):
        out += amp * np.sin(2.0 * np.pi * h * ph + offsets[h - 1])
    return out


def gen_pair(subject: SubjectSpec, cam_a: CameraSpec, cam_b: CameraSpec,
             duration: float = 60.0, fps: float = 30.0) -> SyntheticClip:
    """Render one subject through two cameras, with analytic truth."""
    if duration < MIN_DURATION_SEC:
        raise ValueError(f"gen: duration must be >= {MIN_DURATION_SEC} s, got {duration}")
    if fps <= 0:
        raise ValueError(f"gen: bad fps {fps}")
    n = int(round(duration * fps))
    t = np.arange(n) / fps

    hr_phase = _phase_cycles(subject.hr.sample(t), fps)
    rr_phase = _phase_cycles(subject.rr.sample(t), fps)

    sub_rng = np.random.default_rng(np.random.SeedSequence([0x5A17, subject.seed]))
    harm_offsets = np.concatenate(
        [[0.0], sub_rng.uniform(0, 2 * np.pi, size=max(len(subject.pulse_harmonics) - 1, 0))]
    )
    skin_var = sub_rng.uniform(-0.05, 0.05, size=(3, N_ROIS))
    pulse_profile = sub_rng.uniform(0.5, 1.5, size=N_ROIS)
    breath_profile = sub_rng.uniform(0.4, 1.3, size=N_ROIS)
    drift_freq = sub_rng.uniform(0.01, 0.03)
    drift_phase = sub_rng.uniform(0, 2 * np.pi)
    resp_phase0 = sub_rng.uniform(0, 2 * np.pi)

    skin = np.asarray(SKIN_BASE_RGB)[:, None] * (1.0 + skin_var)

    def resp_disp(tau: np.ndarray) -> np.ndarray:
        amp = subject.resp_amp_px * (1.0 + 0.2 * np.sin(2 * np.pi * drift_freq * tau + drift_phase))
        ph = np.interp(tau, t, rr_phase)
        return amp * np.sin(2.0 * np.pi * ph + resp_phase0)

    truth_pulse = Waveform(
        values=_pulse_at(t, t, hr_phase, subject.pulse_harmonics, harm_offsets), fs=fps
    )
    disp = resp_disp(t)
    resp_flow = np.zeros(n)
    resp_flow[1:] = np.diff(disp)
    truth_resp = Waveform(values=resp_flow, fs=fps)

    def render(cam: CameraSpec) -> tuple[SpatioTemporalMap, SpatioTemporalMap]:
        rng = np.random.default_rng(np.random.SeedSequence([subject.seed, cam.digest()]))
        jitter = _band_noise(rng, n, fps, *JITTER_BAND_HZ, rms=cam.jitter_sigma)
        flicker = _band_noise(rng, n, fps, *FLICKER_BAND_HZ, rms=1.0) if cam.flicker_amp > 0 \
            else np.zeros(n)
        flicker2 = _band_noise(rng, n, fps, *FLICKER_BAND_HZ, rms=1.0) if cam.flicker_amp2 > 0 \
            else np.zeros(n)
        rgb_noise = rng.normal(size=(3, N_ROIS, n)) * cam.noise_sigma if cam.noise_sigma > 0 \
            else 0.0
        shake = _band_noise(rng, n, fps, *SHAKE_BAND_HZ, rms=cam.shake_amp)
        flow_noise = rng.normal(size=(N_ROIS, n)) * cam.flow_noise if cam.flow_noise > 0 else 0.0

        tau = (np.arange(n) + jitter) / fps
        pulse = _pulse_at(tau, t, hr_phase, subject.pulse_harmonics, harm_offsets)
        w = np.asarray(PULSE_CHANNEL_WEIGHTS)
        mod = 1.0 + subject.pulse_amp * (
            w[:, None, None] * pulse_profile[None, :, None] * pulse[None, None, :]
        )
        rgb = skin[:, :, None] * mod
        if cam.gamma != 1.0:
            rgb = 255.0 * np.power(rgb / 255.0, cam.gamma)
        rgb *= np.asarray(cam.gains)[:, None, None]
        if cam.flicker_amp > 0 or cam.flicker_amp2 > 0:
            glow = cam.flicker_amp * np.asarray(cam.flicker_chroma)[:, None] \
                * flicker[None, :]
            glow = glow + cam.flicker_amp2 * np.asarray(cam.flicker_chroma2)[:, None] \
                * flicker2[None, :]
            rgb *= 1.0 + glow[:, None, :]
        rgb = rgb + rgb_noise

        d = resp_disp(tau)
        dflow = np.zeros(n)
        dflow[1:] = np.diff(d)
        flow = breath_profile[:, None] * dflow[None, :] + shake[None, :] + flow_noise
        flow[:, 0] = 0.0

        rgb_map = SpatioTemporalMap(data=rgb.astype(np.float32), fps=fps)
        flow_map = SpatioTemporalMap(data=flow[None, :, :].astype(np.float32), fps=fps)
        return rgb_map, flow_map

    rgb_a, flow_a = render(cam_a)
    rgb_b, flow_b = render(cam_b)
    return SyntheticClip(
        pair=ClipPair(rgb_a=rgb_a, flow_a=flow_a, rgb_b=rgb_b, flow_b=flow_b),
        truth_hr=_rate_truth(subject.hr, duration, fps),
        truth_rr=_rate_truth(subject.rr, duration, fps),
        truth_pulse=truth_pulse,
        truth_resp=truth_resp,
    )


def random_subject(seed: int, duration: float = 60.0) -> SubjectSpec:
    """Slope-limited random walk trajectories for one subject."""
    rng = np.random.default_rng(np.random.SeedSequence([0x50B1, seed]))
    def walk(start_lo, start_hi, step, lo, hi, hop_sec):
        times = [0.0]
        values = [float(rng.uniform(start_lo, start_hi))]
        while times[-1] < duration:
            times.append(times[-1] + hop_sec)
            delta = float(rng.uniform(-step, step))
            values.append(float(np.clip(values[-1] + delta, lo, hi)))
        return Trajectory(times=tuple(times), values=tuple(values))
    hr = walk(58.0, 95.0, 8.0, 50.0, 110.0, 12.0)
    rr = walk(12.0, 20.0, 3.0, 10.0, 30.0, 15.0)
    return SubjectSpec(hr=hr, rr=rr, seed=seed)


def gen_dataset(out_dir: str | os.PathLike, n_subjects: int, n_train: int,
                cam_a: CameraSpec, cam_b: CameraSpec, duration: float = 60.0,
                fps: float = 30.0, seed: int = 0) -> dict:
    """Write STM files, truth CSVs and a manifest; returns the manifest."""
    if n_subjects < 0 or n_train < 0 or n_train > n_subjects:
        raise ValueError(f"gen: bad split {n_train}/{n_subjects}")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    pairs = []
    train_ids, test_ids = [], []
    for i in range(n_subjects):
        subject = random_subject(seed=seed * 100003 + i, duration=duration)
        clip = gen_pair(subject, cam_a, cam_b, duration=duration, fps=fps)
        pair_id = f"pair_{i:03d}"
        pdir = os.path.join(out_dir, pair_id)
        os.makedirs(pdir, exist_ok=True)
        files = {
            "stm_a_rgb": os.path.join(pair_id, "a_rgb.stm"),
            "stm_a_flow": os.path.join(pair_id, "a_flow.stm"),
            "stm_b_rgb": os.path.join(pair_id, "b_rgb.stm"),
            "stm_b_flow": os.path.join(pair_id, "b_flow.stm"),
            "truth_hr_csv": os.path.join(pair_id, "truth_hr.csv"),
            "truth_rr_csv": os.path.join(pair_id, "truth_rr.csv"),
            "truth_pulse_csv": os.path.join(pair_id, "truth_pulse.csv"),
            "truth_resp_csv": os.path.join(pair_id, "truth_resp.csv"),
        }
        stm_write(os.path.join(out_dir, files["stm_a_rgb"]), clip.pair.rgb_a)
        stm_write(os.path.join(out_dir, files["stm_a_flow"]), clip.pair.flow_a)
        stm_write(os.path.join(out_dir, files["stm_b_rgb"]), clip.pair.rgb_b)
        stm_write(os.path.join(out_dir, files["stm_b_flow"]), clip.pair.flow_b)
        write_rates_csv(os.path.join(out_dir, files["truth_hr_csv"]), clip.truth_hr)
        write_rates_csv(os.path.join(out_dir, files["truth_rr_csv"]), clip.truth_rr)
        write_wave_csv(os.path.join(out_dir, files["truth_pulse_csv"]), clip.truth_pulse)
        write_wave_csv(os.path.join(out_dir, files["truth_resp_csv"]), clip.truth_resp)
        split = "train" if i < n_train else "test"
        (train_ids if split == "train" else test_ids).append(pair_id)
        pairs.append({"id": pair_id, "subject_seed": subject.seed, "split": split, **files})
    manifest = {
        "version": 1,
        "fps": fps,
        "duration_sec": duration,
        "seed": seed,
        "camera_a": cam_a.to_dict(),
        "camera_b": cam_b.to_dict(),
        "pairs": pairs,
        "splits": {"train": train_ids, "test": test_ids},
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return manifest


def load_manifest(path: str | os.PathLike) -> dict:
    with open(path) as fh:
        manifest = json.load(fh)
    if not isinstance(manifest, dict) or "pairs" not in manifest or "splits" not in manifest:
        raise ValueError(f"manifest: missing pairs/splits in {os.fspath(path)}")
    return manifest
