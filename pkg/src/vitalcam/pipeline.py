"""Training orchestration and windowed rate inference.

Training draws random same-start windows from each synchronized clip
pair, stretches or shrinks them in time (which scales the apparent
rates), pushes both views through their models, and matches the
band-restricted PSDs of the predicted waves with the contrastive
objective. Three modes: `dual` trains both camera models,
`pretrain_anchor` freezes model A and trains B against it, and
`general_shared` trains a single parameter set serving both views.
Model selection is by lowest validation loss over a video-level
holdout.

Inference slices a long map into non-overlapping model-length
segments, concatenates the predicted waves, and reads rates off
Hann-windowed zero-padded FFTs in 10-second windows at 1-second
steps.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .augment import AugmentSpec, augment_pair, resample_temporal
from .maps import SpatioTemporalMap, stm_read
from .net import AdamW, Model, NetConfig
from .objective import (
    Band,
    HR_TRAIN_BAND,
    RR_TRAIN_BAND,
    anchored_loss,
    contrastive_loss,
    get_transform,
)
from .series import RateSeries, Waveform, read_wave_csv, resample_linear

HR_INFER_BAND = Band(0.75, 2.50)
RR_INFER_BAND = Band(10.0 / 60.0, 40.0 / 60.0)
RATE_WINDOW_SEC = 10.0
RATE_STEP_SEC = 1.0
RATE_NFFT_MIN = 4096
STANDARDIZE_EPS = 1e-6

TASKS = ("hr", "rr")


def infer_band(task: str) -> Band:
    if task == "hr":
        return HR_INFER_BAND
    if task == "rr":
        return RR_INFER_BAND
    raise ValueError(f"unknown task {task!r}")


def train_band(task: str) -> Band:
    if task == "hr":
        return HR_TRAIN_BAND
    if task == "rr":
        return RR_TRAIN_BAND
    raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class ClipPair:
    """Synchronized same-length maps of one clip from two cameras."""

    clip_id: str
    map_a: SpatioTemporalMap
    map_b: SpatioTemporalMap
    truth_wave: Waveform | None = None

    def __post_init__(self) -> None:
        a, b = self.map_a, self.map_b
        if a.frames != b.frames:
            raise ValueError(
                f"pair {self.clip_id}: frame counts differ ({a.frames} vs {b.frames})"
            )
        if a.fps != b.fps:
            raise ValueError(f"pair {self.clip_id}: fps differ ({a.fps} vs {b.fps})")
        if self.truth_wave is not None and self.truth_wave.values.size != a.frames:
            raise ValueError(
                f"pair {self.clip_id}: truth wave length {self.truth_wave.values.size} "
                f"!= {a.frames} frames"
            )


@dataclass(frozen=True)
class TrainConfig:
    """Training settings; per-task defaults for frames and learning rate."""

    task: str
    mode: str = "dual"
    t_frames: int | None = None
    batch: int = 32
    epochs: int = 30
    lr: float | None = None
    tau: float = 0.1
    shrink: int = 30
    stretch: int = 60
    seed: int = 0
    val_fraction: float = 0.2
    clips_per_video: int = 8

    def __post_init__(self) -> None:
        if self.task not in TASKS:
            raise ValueError(f"train config: unknown task {self.task!r}")
        if self.mode not in ("dual", "pretrain_anchor", "general_shared"):
            raise ValueError(f"train config: unknown mode {self.mode!r}")
        if self.batch < 2:
            raise ValueError(f"train config: batch {self.batch} < 2")
        if self.epochs < 0:
            raise ValueError(f"train config: epochs {self.epochs} < 0")
        if self.tau <= 0:
            raise ValueError(f"train config: tau {self.tau} must be positive")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(f"train config: val_fraction {self.val_fraction} outside [0, 1)")
        if self.clips_per_video < 1:
            raise ValueError(f"train config: clips_per_video {self.clips_per_video} < 1")
        if self.lr is not None and self.lr <= 0:
            raise ValueError(f"train config: lr {self.lr} must be positive")

    @property
    def frames(self) -> int:
        if self.t_frames is not None:
            return self.t_frames
        return 150 if self.task == "hr" else 300

    @property
    def learning_rate(self) -> float:
        if self.lr is not None:
            return self.lr
        return 1e-3 if self.task == "hr" else 1e-4

    def augment_spec(self) -> AugmentSpec:
        return AugmentSpec(target_frames=self.frames, shrink=self.shrink, stretch=self.stretch)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


def write_history_csv(path: str | os.PathLike, history: list[EpochRecord]) -> None:
    with open(path, "w") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for rec in history:
            fh.write(f"{rec.epoch},{rec.train_loss!r},{rec.val_loss!r}\n")


def read_history_csv(path: str | os.PathLike) -> list[EpochRecord]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "epoch,train_loss,val_loss":
            raise ValueError(f"history: unexpected header {header!r}")
        out = []
        for line in fh:
            e, tr, va = line.strip().split(",")
            out.append(EpochRecord(epoch=int(e), train_loss=float(tr), val_loss=float(va)))
    return out


def load_pairs(manifest: dict, base_dir: str | os.PathLike, task: str,
               split: str, with_truth: bool = True) -> list[ClipPair]:
    """Materialize the manifest's clip pairs for one task and split."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}")
    key_a, key_b = ("stm_a_rgb", "stm_b_rgb") if task == "hr" else ("stm_a_flow", "stm_b_flow")
    truth_key = "truth_pulse_csv" if task == "hr" else "truth_resp_csv"
    base = os.fspath(base_dir)
    out = []
    for entry in manifest["pairs"]:
        if entry["split"] != split:
            continue
        truth = None
        if with_truth and truth_key in entry:
            truth = read_wave_csv(os.path.join(base, entry[truth_key]))
        out.append(
            ClipPair(
                clip_id=entry["id"],
                map_a=stm_read(os.path.join(base, entry[key_a])),
                map_b=stm_read(os.path.join(base, entry[key_b])),
                truth_wave=truth,
            )
        )
    return out


def standardize_clip(x: np.ndarray) -> np.ndarray:
    """Per-sample, per-channel zero-mean unit-variance over (ROI, time)."""
    x = np.asarray(x, dtype=np.float32)
    mu = x.mean(axis=(-2, -1), keepdims=True)
    sd = x.std(axis=(-2, -1), keepdims=True)
    return (x - mu) / (sd + STANDARDIZE_EPS)


def net_config(pairs: list[ClipPair], cfg: TrainConfig) -> NetConfig:
    m0 = pairs[0].map_a
    for p in pairs:
        for side in (p.map_a, p.map_b):
            if side.channels != m0.channels or side.n_rois != m0.n_rois:
                raise ValueError(f"train: clip {p.clip_id} map shape differs from the first clip")
    return NetConfig(in_channels=m0.channels, rois=m0.n_rois, frames=cfg.frames)


def _split_train_val(pairs: list[ClipPair], cfg: TrainConfig) -> tuple[list, list]:
    """Video-level validation holdout (no window-level leakage)."""
    if cfg.val_fraction == 0.0 or len(pairs) < 2:
        return list(pairs), []
    rng = np.random.default_rng(np.random.SeedSequence([0x7A11, cfg.seed]))
    order = rng.permutation(len(pairs))
    n_val = max(1, int(round(cfg.val_fraction * len(pairs))))
    if n_val >= len(pairs):
        n_val = len(pairs) - 1
    val_idx = set(order[:n_val].tolist())
    train = [p for i, p in enumerate(pairs) if i not in val_idx]
    val = [p for i, p in enumerate(pairs) if i in val_idx]
    return train, val


def _check_lengths(pairs: list[ClipPair], spec: AugmentSpec) -> None:
    for p in pairs:
        if p.map_a.frames < spec.max_frames:
            raise ValueError(
                f"train: clip {p.clip_id} has {p.map_a.frames} frames, "
                f"needs >= {spec.max_frames} for augmentation"
            )


def _val_batches(pairs: list[ClipPair], t_frames: int, batch: int):
    """Fixed non-overlapping windows of every validation pair, batched."""
    xs_a, xs_b = [], []
    for p in pairs:
        total = p.map_a.frames
        for s in range(0, total - t_frames + 1, t_frames):
            xs_a.append(standardize_clip(p.map_a.data[:, :, s : s + t_frames]))
            xs_b.append(standardize_clip(p.map_b.data[:, :, s : s + t_frames]))
    batches = []
    for i in range(0, len(xs_a), batch):
        na = np.stack(xs_a[i : i + batch])
        nb = np.stack(xs_b[i : i + batch])
        if na.shape[0] >= 2:
            batches.append((na, nb))
    return batches


def _epoch_windows(train_pairs: list[ClipPair], cfg: TrainConfig, spec: AugmentSpec,
                   epoch: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Sample, augment and batch this epoch's training windows."""
    rng = np.random.default_rng(np.random.SeedSequence([0xBA7C, cfg.seed, epoch]))
    windows = []
    for p in train_pairs:
        hi = p.map_a.frames - spec.max_frames
        for _ in range(cfg.clips_per_video):
            s = int(rng.integers(0, hi + 1))
            windows.append((p, s))
    order = rng.permutation(len(windows))
    xs = []
    for idx in order:
        p, s = windows[idx]
        wa = p.map_a.crop(s, s + spec.max_frames)
        wb = p.map_b.crop(s, s + spec.max_frames)
        aug_a, aug_b = augment_pair(wa, wb, spec, rng)
        xs.append((standardize_clip(aug_a.data), standardize_clip(aug_b.data)))
    batches = []
    for i in range(0, len(xs), cfg.batch):
        chunk = xs[i : i + cfg.batch]
        if len(chunk) >= 2:
            batches.append((np.stack([c[0] for c in chunk]), np.stack([c[1] for c in chunk])))
    return batches


def _contrastive_batch_loss(model_a: Model, model_b: Model, params_a: dict, params_b: dict,
                            xa: np.ndarray, xb: np.ndarray, transform, tau: float,
                            train_a: bool, train_b: bool):
    """Forward both views, return (loss_sum, n, grads_a, grads_b)."""
    wa = model_a.forward(params_a, xa, training=train_a)
    wb = model_b.forward(params_b, xb, training=train_b)
    psd_a, cache_a = transform.forward(wa)
    psd_b, cache_b = transform.forward(wb)
    loss, gpa, gpb = contrastive_loss(psd_a, psd_b, tau)
    grads_a = grads_b = None
    if train_a:
        gwa = transform.backward(cache_a, gpa)
        grads_a, _ = model_a.backward(params_a, gwa)
    else:
        model_a.release()
    if train_b:
        gwb = transform.backward(cache_b, gpb)
        grads_b, _ = model_b.backward(params_b, gwb)
    else:
        model_b.release()
    return loss, xa.shape[0], grads_a, grads_b


def _eval_loss(model_a: Model, model_b: Model, params_a: dict, params_b: dict,
               batches, transform, tau: float) -> float:
    total, count = 0.0, 0
    for xa, xb in batches:
        wa = model_a.infer(params_a, xa)
        wb = model_b.infer(params_b, xb)
        psd_a, _ = transform.forward(wa)
        psd_b, _ = transform.forward(wb)
        loss, _, _ = contrastive_loss(psd_a, psd_b, tau)
        total += loss
        count += xa.shape[0]
    return total / (2 * count) if count else float("nan")


def _snapshot(params: dict) -> dict:
    return {k: v.copy() for k, v in params.items()}


def train(pairs: list[ClipPair], cfg: TrainConfig,
          anchor_params: dict | None = None) -> tuple[dict, dict, list[EpochRecord]]:
    """Contrastive training; returns the lowest-validation-loss params.

    `dual` returns two independently trained parameter sets;
    `pretrain_anchor` returns (anchor unchanged, trained B);
    `general_shared` returns the same dict twice.
    """
    if not pairs:
        raise ValueError("train: empty dataset")
    spec = cfg.augment_spec()
    _check_lengths(pairs, spec)
    net_cfg = net_config(pairs, cfg)
    model_a = Model(net_cfg)
    model_b = Model(net_cfg)
    fps = pairs[0].map_a.fps
    transform = get_transform(cfg.frames, fps, train_band(cfg.task))

    if cfg.mode == "pretrain_anchor":
        if anchor_params is None:
            raise ValueError("train: pretrain_anchor mode needs anchor params")
        params_a = anchor_params
        params_b = model_b.init_params(seed=cfg.seed)
        opts = [(params_b, AdamW(lr=cfg.learning_rate))]
    elif cfg.mode == "general_shared":
        params_a = params_b = model_a.init_params(seed=cfg.seed)
        opts = [(params_a, AdamW(lr=cfg.learning_rate))]
    else:
        params_a = model_a.init_params(seed=cfg.seed)
        params_b = model_b.init_params(seed=cfg.seed + 1)
        opts = [
            (params_a, AdamW(lr=cfg.learning_rate)),
            (params_b, AdamW(lr=cfg.learning_rate)),
        ]

    train_pairs, val_pairs = _split_train_val(pairs, cfg)
    if not train_pairs:
        raise ValueError("train: no training pairs left after the validation split")
    val_batches = _val_batches(val_pairs, cfg.frames, cfg.batch)

    train_a = cfg.mode != "pretrain_anchor"
    history: list[EpochRecord] = []
    best = (float("inf"), _snapshot(params_a), _snapshot(params_b))
    for epoch in range(1, cfg.epochs + 1):
        batches = _epoch_windows(train_pairs, cfg, spec, epoch)
        total, count = 0.0, 0
        for step, (xa, xb) in enumerate(batches):
            try:
                loss, n, grads_a, grads_b = _contrastive_batch_loss(
                    model_a, model_b, params_a, params_b, xa, xb, transform,
                    cfg.tau, train_a=train_a, train_b=True,
                )
            except ValueError as err:
                raise RuntimeError(f"train: epoch {epoch} step {step}: {err}") from err
            if not np.isfinite(loss):
                raise RuntimeError(f"train: non-finite loss at epoch {epoch} step {step}")
            if cfg.mode == "general_shared":
                merged = {
                    k: grads_a[k] + grads_b[k] for k in grads_a
                }
                opts[0][1].step(params_a, merged)
            elif cfg.mode == "pretrain_anchor":
                opts[0][1].step(params_b, grads_b)
            else:
                opts[0][1].step(params_a, grads_a)
                opts[1][1].step(params_b, grads_b)
            total += loss
            count += n
        train_loss = total / (2 * count) if count else float("nan")
        val_loss = _eval_loss(model_a, model_b, params_a, params_b, val_batches,
                              transform, cfg.tau)
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        score = val_loss if np.isfinite(val_loss) else train_loss
        if score < best[0]:
            best = (score, _snapshot(params_a), _snapshot(params_b))
    if cfg.epochs > 0:
        params_a, params_b = best[1], best[2]
    if cfg.mode == "pretrain_anchor":
        params_a = anchor_params
    elif cfg.mode == "general_shared":
        params_b = params_a
    return params_a, params_b, history


def pretrain_supervised(pairs: list[ClipPair], cfg: TrainConfig) -> tuple[dict, list[EpochRecord]]:
    """Train one model (on map_a) against ground-truth wave PSDs."""
    if not pairs:
        raise ValueError("pretrain: empty dataset")
    for p in pairs:
        if p.truth_wave is None:
            raise ValueError(f"pretrain: clip {p.clip_id} missing truth wave")
    spec = cfg.augment_spec()
    _check_lengths(pairs, spec)
    net_cfg = net_config(pairs, cfg)
    model = Model(net_cfg)
    params = model.init_params(seed=cfg.seed)
    opt = AdamW(lr=cfg.learning_rate)
    fps = pairs[0].map_a.fps
    transform = get_transform(cfg.frames, fps, train_band(cfg.task))

    train_pairs, val_pairs = _split_train_val(pairs, cfg)
    if not train_pairs:
        raise ValueError("pretrain: no training pairs left after the validation split")

    def truth_psd_windows(pair_list):
        xs, ps = [], []
        for p in pair_list:
            total = p.map_a.frames
            for s in range(0, total - cfg.frames + 1, cfg.frames):
                xs.append(standardize_clip(p.map_a.data[:, :, s : s + cfg.frames]))
                ps.append(p.truth_wave.values[s : s + cfg.frames])
        batches = []
        for i in range(0, len(xs), cfg.batch):
            chunk_x = xs[i : i + cfg.batch]
            if len(chunk_x) >= 2:
                truth, _ = transform.forward(np.stack(ps[i : i + cfg.batch]))
                batches.append((np.stack(chunk_x), truth))
        return batches

    val_fixed = truth_psd_windows(val_pairs)

    history: list[EpochRecord] = []
    best = (float("inf"), _snapshot(params))
    for epoch in range(1, cfg.epochs + 1):
        rng = np.random.default_rng(np.random.SeedSequence([0xBA7C, cfg.seed, epoch]))
        windows = []
        for p in train_pairs:
            hi = p.map_a.frames - spec.max_frames
            for _ in range(cfg.clips_per_video):
                windows.append((p, int(rng.integers(0, hi + 1))))
        order = rng.permutation(len(windows))
        samples = []
        for idx in order:
            p, s = windows[idx]
            length = int(rng.integers(spec.min_frames, spec.max_frames + 1))
            xm = resample_temporal(p.map_a.crop(s, s + length), cfg.frames)
            tw = resample_linear(p.truth_wave.values[s : s + length], cfg.frames)
            samples.append((standardize_clip(xm.data), tw))
        total, count = 0.0, 0
        for step in range(0, len(samples), cfg.batch):
            chunk = samples[step : step + cfg.batch]
            if len(chunk) < 2:
                continue
            x = np.stack([c[0] for c in chunk])
            truth_wave = np.stack([c[1] for c in chunk])
            try:
                w = model.forward(params, x, training=True)
                psd_pred, cache = transform.forward(w)
                psd_truth, _ = transform.forward(truth_wave)
                loss, gpred = anchored_loss(psd_pred, psd_truth, cfg.tau)
                gw = transform.backward(cache, gpred)
                grads, _ = model.backward(params, gw)
            except ValueError as err:
                raise RuntimeError(f"pretrain: epoch {epoch} step {step}: {err}") from err
            if not np.isfinite(loss):
                raise RuntimeError(f"pretrain: non-finite loss at epoch {epoch} step {step}")
            opt.step(params, grads)
            total += loss
            count += len(chunk)
        train_loss = total / (2 * count) if count else float("nan")
        val_total, val_count = 0.0, 0
        for x, truth in val_fixed:
            w = model.infer(params, x)
            psd_pred, _ = transform.forward(w)
            loss, _ = anchored_loss(psd_pred, truth, cfg.tau)
            val_total += loss
            val_count += x.shape[0]
        val_loss = val_total / (2 * val_count) if val_count else float("nan")
        history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
        score = val_loss if np.isfinite(val_loss) else train_loss
        if score < best[0]:
            best = (score, _snapshot(params))
    if cfg.epochs > 0:
        params = best[1]
    return params, history


def infer_wave(model: Model, params: dict, stm: SpatioTemporalMap) -> Waveform:
    """Predict a full-length wave by non-overlapping model-length segments.

    A partial tail is resampled up to the model length and the
    predicted wave resampled back; a single-frame tail is replicated
    instead and receives the mean of the segment's prediction.
    """
    cfg = model.config
    if stm.channels != cfg.in_channels:
        raise ValueError(
            f"infer: map has {stm.channels} channels, model expects {cfg.in_channels}"
        )
    if stm.n_rois != cfg.rois:
        raise ValueError(f"infer: map has {stm.n_rois} rois, model expects {cfg.rois}")
    t_seg = cfg.frames
    n = stm.frames
    data = stm.data
    pieces: list[np.ndarray] = []
    n_full = n // t_seg
    if n_full > 0:
        segs = np.stack(
            [standardize_clip(data[:, :, i * t_seg : (i + 1) * t_seg]) for i in range(n_full)]
        )
        waves = model.infer(params, segs)
        pieces.extend(waves[i] for i in range(n_full))
    tail = n - n_full * t_seg
    if tail == 1:
        x = np.repeat(data[:, :, -1:], t_seg, axis=2)
        w = model.infer(params, standardize_clip(x)[None])
        pieces.append(np.array([float(w.mean())], dtype=w.dtype))
    elif tail > 0:
        x = resample_linear(data[:, :, n_full * t_seg :].astype(np.float64), t_seg, axis=2)
        w = model.infer(params, standardize_clip(x)[None])
        pieces.append(resample_linear(w[0].astype(np.float64), tail).astype(w.dtype))
    values = np.concatenate(pieces) if pieces else np.zeros(0, dtype=np.float32)
    if values.size != n:
        raise AssertionError(f"infer: produced {values.size} samples for {n} frames")
    return Waveform(values=values.astype(np.float64), fs=stm.fps)


def rates_from_wave(wave: Waveform, task: str) -> RateSeries:
    """Argmax of the in-band spectrum in 10 s windows at 1 s steps."""
    band = infer_band(task)
    fs = wave.fs
    values = wave.values
    win = int(round(RATE_WINDOW_SEC * fs))
    n = values.size
    if n < win:
        raise ValueError(
            f"rates: wave of {n} samples is shorter than the {RATE_WINDOW_SEC:g} s window"
        )
    n_points = int(np.floor(n / fs - RATE_WINDOW_SEC)) + 1
    nfft = RATE_NFFT_MIN
    while nfft < win:
        nfft *= 2
    freqs = np.fft.rfftfreq(nfft, 1.0 / fs)
    sel = np.nonzero((freqs >= band.f_lo) & (freqs <= band.f_hi))[0]
    if sel.size == 0:
        raise ValueError(f"rates: no FFT bins inside the {task} band at fs={fs}")
    taper = np.hanning(win)
    t_sec = np.empty(n_points)
    bpm = np.empty(n_points)
    for k in range(n_points):
        s = min(int(round(k * RATE_STEP_SEC * fs)), n - win)
        seg = values[s : s + win]
        seg = (seg - seg.mean()) * taper
        power = np.abs(np.fft.rfft(seg, nfft))
        bpm[k] = 60.0 * freqs[sel[np.argmax(power[sel])]]
        t_sec[k] = k * RATE_STEP_SEC + RATE_WINDOW_SEC / 2.0
    return RateSeries(t_sec=t_sec, bpm=bpm)
