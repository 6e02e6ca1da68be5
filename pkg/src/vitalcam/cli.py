"""Command-line entry point.

Subcommands cover the whole workflow: `extract` turns frame folders plus
landmarks into spatio-temporal maps, `synth` writes a synthetic two-camera
dataset, `train` fits models from a manifest, `infer` runs a checkpoint over a
map and writes rate estimates, `eval` scores predictions against truth, and
`baseline` computes the signal-processing reference waves.

Failures print one JSON object {"error": "..."} to stderr and exit 1; bad
usage exits 2 via argparse.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import baselines, config, pipeline, synth
from .metrics import metrics as compute_metrics
from .metrics import write_report
from .landmarks import read_landmarks_jsonl
from .maps import build_flow_map, build_rgb_map, stm_read, stm_write
from .net.checkpoint import checkpoint_load, checkpoint_save
from .net.model import Model
from .ppm import read_ppm_dir
from .series import read_rates_csv, write_rates_csv, write_wave_csv


def _cmd_extract(args: argparse.Namespace) -> int:
    frames = read_ppm_dir(args.frames)
    lms = read_landmarks_jsonl(args.landmarks)
    if args.task == "hr":
        stm = build_rgb_map(frames, lms, fps=args.fps)
    else:
        if not lms:
            raise ValueError("extract: empty landmark file")
        stm, clamped = build_flow_map(frames, lms[0], fps=args.fps)
        if clamped:
            print("note: chest grid clamped to frame bounds", file=sys.stderr)
    stm_write(args.out, stm)
    print(json.dumps({"out": args.out, "channels": stm.channels,
                      "rois": stm.n_rois, "frames": stm.frames, "fps": stm.fps}))
    return 0


def _camera_from_config(cfg: dict[str, str], prefix: str) -> synth.CameraSpec:
    base = synth.CameraSpec()

    def floats3(key: str, default: tuple) -> tuple:
        got = config.as_floats(cfg, f"{prefix}.{key}", default)
        if len(got) != 3:
            raise ValueError(f"config: {prefix}.{key} needs 3 comma-separated values")
        return tuple(got)

    def scalar(key: str, default: float) -> float:
        return config.as_float(cfg, f"{prefix}.{key}", default)

    return synth.CameraSpec(
        gains=floats3("gains", base.gains),
        gamma=scalar("gamma", base.gamma),
        noise_sigma=scalar("noise_sigma", base.noise_sigma),
        jitter_sigma=scalar("jitter_sigma", base.jitter_sigma),
        shake_amp=scalar("shake_amp", base.shake_amp),
        flicker_amp=scalar("flicker_amp", base.flicker_amp),
        flicker_chroma=floats3("flicker_chroma", base.flicker_chroma),
        flow_noise=scalar("flow_noise", base.flow_noise),
    )


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = config.read_config(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else config.as_int(cfg, "seed", 0)
    manifest = synth.gen_dataset(
        out_dir=args.out,
        n_subjects=config.as_int(cfg, "subjects", 20),
        n_train=config.as_int(cfg, "train", 15),
        cam_a=_camera_from_config(cfg, "cam_a"),
        cam_b=_camera_from_config(cfg, "cam_b"),
        duration=config.as_float(cfg, "duration", 60.0),
        fps=config.as_float(cfg, "fps", 30.0),
        seed=seed,
    )
    print(json.dumps({"out": args.out, "pairs": len(manifest["pairs"]),
                      "train": len(manifest["splits"]["train"]),
                      "test": len(manifest["splits"]["test"])}))
    return 0


def _train_config(args: argparse.Namespace, mode: str) -> pipeline.TrainConfig:
    cfg = config.read_config(args.config) if args.config else {}
    seed = args.seed if args.seed is not None else config.as_int(cfg, "seed", 0)
    return pipeline.TrainConfig(
        task=args.task,
        mode=mode,
        t_frames=config.as_int(cfg, "t_frames", None),
        batch=config.as_int(cfg, "batch", 32),
        epochs=config.as_int(cfg, "epochs", 30),
        lr=config.as_float(cfg, "lr", None),
        tau=config.as_float(cfg, "tau", 0.1),
        shrink=config.as_int(cfg, "shrink", 30),
        stretch=config.as_int(cfg, "stretch", 60),
        seed=seed,
        val_fraction=config.as_float(cfg, "val_fraction", 0.2),
        clips_per_video=config.as_int(cfg, "clips_per_video", 8),
    )


def _cmd_train(args: argparse.Namespace) -> int:
    manifest = synth.load_manifest(args.manifest)
    base_dir = os.path.dirname(os.path.abspath(args.manifest))
    os.makedirs(args.out, exist_ok=True)
    written: dict[str, str] = {}

    if args.mode == "supervised":
        cfg = _train_config(args, mode="dual")
        pairs = pipeline.load_pairs(manifest, base_dir, cfg.task, split="train",
                                    with_truth=True)
        params, history = pipeline.pretrain_supervised(pairs, cfg)
        net_cfg = pipeline.net_config(pairs, cfg)
        path = os.path.join(args.out, "model.ckpt")
        checkpoint_save(path, net_cfg, params)
        written["model"] = path
    else:
        mode = "general_shared" if args.mode == "general" else args.mode
        cfg = _train_config(args, mode=mode)
        pairs = pipeline.load_pairs(manifest, base_dir, cfg.task, split="train",
                                    with_truth=False)
        anchor = None
        if mode == "pretrain_anchor":
            if not args.anchor:
                raise ValueError("train: --anchor CKPT is required for mode pretrain_anchor")
            net_cfg = pipeline.net_config(pairs, cfg)
            _, anchor = checkpoint_load(args.anchor, expected_config=net_cfg)
        params_a, params_b, history = pipeline.train(pairs, cfg, anchor_params=anchor)
        net_cfg = pipeline.net_config(pairs, cfg)
        if mode == "general_shared":
            path = os.path.join(args.out, "model.ckpt")
            checkpoint_save(path, net_cfg, params_a)
            written["model"] = path
        else:
            path_a = os.path.join(args.out, "model_a.ckpt")
            path_b = os.path.join(args.out, "model_b.ckpt")
            checkpoint_save(path_a, net_cfg, params_a)
            checkpoint_save(path_b, net_cfg, params_b)
            written["model_a"] = path_a
            written["model_b"] = path_b

    hist_path = os.path.join(args.out, "history.csv")
    pipeline.write_history_csv(hist_path, history)
    written["history"] = hist_path
    print(json.dumps({"out": args.out, "epochs": len(history), **written}))
    return 0


def _cmd_infer(args: argparse.Namespace) -> int:
    net_cfg, params = checkpoint_load(args.ckpt)
    stm = stm_read(args.stm)
    model = Model(net_cfg)
    wave = pipeline.infer_wave(model, params, stm)
    if args.wave_out:
        write_wave_csv(args.wave_out, wave)
    rates = pipeline.rates_from_wave(wave, task=args.task)
    write_rates_csv(args.out, rates)
    print(json.dumps({"out": args.out, "points": len(rates),
                      "mean_bpm": float(np.mean(rates.bpm))}))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    pred = read_rates_csv(args.pred)
    truth = read_rates_csv(args.truth)
    report = compute_metrics(pred, truth)
    if args.report:
        write_report(args.report, report)
    if args.plot:
        _plot_rates(args.plot, pred, truth)
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def _plot_rates(path: str, pred, truth) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(8, 3))
    ax.plot(truth.t_sec, truth.bpm, label="truth", color="k", lw=1.2)
    ax.plot(pred.t_sec, pred.bpm, label="pred", color="tab:red", lw=1.0)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("rate [bpm]")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _cmd_baseline(args: argparse.Namespace) -> int:
    stm = stm_read(args.stm)
    if args.method in ("chrom", "pos"):
        trace = baselines.rgb_mean_trace(stm)
        wave = (baselines.chrom_wave if args.method == "chrom" else baselines.pos_wave)(trace)
    else:
        wave = baselines.rr_benchmark_wave(stm, kind=args.method)
    write_wave_csv(args.out, wave)
    out = {"out": args.out, "samples": wave.values.size}
    if args.rates:
        if not args.task:
            raise ValueError("baseline: --rates needs --task to pick the rate band")
        rates = pipeline.rates_from_wave(wave, task=args.task)
        write_rates_csv(args.rates, rates)
        out["rates"] = args.rates
        out["points"] = len(rates)
    print(json.dumps(out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vitalcam",
                                description="Camera vitals: extract, synthesize, "
                                            "train, infer, evaluate.")
    sub = p.add_subparsers(dest="command", required=True)

    ex = sub.add_parser("extract", help="build a spatio-temporal map from frames")
    ex.add_argument("--frames", required=True, help="directory of .ppm frames")
    ex.add_argument("--landmarks", required=True, help="JSONL landmark file")
    ex.add_argument("--task", required=True, choices=("hr", "rr"))
    ex.add_argument("--out", required=True, help="output .stm path")
    ex.add_argument("--fps", type=float, default=30.0)
    ex.set_defaults(func=_cmd_extract)

    sy = sub.add_parser("synth", help="generate a synthetic two-camera dataset")
    sy.add_argument("--out", required=True, help="output dataset directory")
    sy.add_argument("--config", help="key=value file (subjects, train, duration, "
                                     "fps, seed, cam_a.*, cam_b.*)")
    sy.add_argument("--seed", type=int, help="overrides seed from the config")
    sy.set_defaults(func=_cmd_synth)

    tr = sub.add_parser("train", help="train models from a dataset manifest")
    tr.add_argument("--manifest", required=True)
    tr.add_argument("--task", required=True, choices=("hr", "rr"))
    tr.add_argument("--mode", default="dual",
                    choices=("dual", "pretrain_anchor", "general", "supervised"))
    tr.add_argument("--config", help="key=value file (epochs, batch, lr, tau, "
                                     "t_frames, shrink, stretch, seed, "
                                     "val_fraction, clips_per_video)")
    tr.add_argument("--out", required=True, help="checkpoint directory")
    tr.add_argument("--anchor", help="frozen camera-A checkpoint (pretrain_anchor)")
    tr.add_argument("--seed", type=int, help="overrides seed from the config")
    tr.set_defaults(func=_cmd_train)

    inf = sub.add_parser("infer", help="run a checkpoint over a map, write rates")
    inf.add_argument("--ckpt", required=True)
    inf.add_argument("--stm", required=True)
    inf.add_argument("--task", required=True, choices=("hr", "rr"),
                     help="selects the rate search band")
    inf.add_argument("--out", required=True, help="output rates CSV")
    inf.add_argument("--wave-out", help="also write the raw waveform CSV")
    inf.set_defaults(func=_cmd_infer)

    ev = sub.add_parser("eval", help="score predicted rates against truth")
    ev.add_argument("--pred", required=True, help="predicted rates CSV")
    ev.add_argument("--truth", required=True, help="truth rates CSV")
    ev.add_argument("--report", help="write the report JSON here")
    ev.add_argument("--plot", help="write a rate overlay figure here")
    ev.set_defaults(func=_cmd_eval)

    ba = sub.add_parser("baseline", help="signal-processing reference waves")
    ba.add_argument("--method", required=True,
                    choices=("chrom", "pos", "rgb_mean", "flow_mean"))
    ba.add_argument("--stm", required=True)
    ba.add_argument("--out", required=True, help="output wave CSV")
    ba.add_argument("--rates", help="also derive rates and write them here")
    ba.add_argument("--task", choices=("hr", "rr"), help="rate band for --rates")
    ba.set_defaults(func=_cmd_baseline)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
