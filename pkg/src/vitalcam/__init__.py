"""Camera-based heart- and respiratory-rate estimation toolkit."""

__version__ = "0.1.0"

from .augment import AugmentSpec, augment_pair, resample_temporal
from .baselines import MeanTrace, chrom_wave, pos_wave, rgb_mean_trace, rr_benchmark_wave
from .landmarks import LandmarkFrame, read_landmarks_jsonl, write_landmarks_jsonl
from .maps import (
    SpatioTemporalMap,
    build_flow_map,
    build_rgb_map,
    stm_read,
    stm_write,
    vertical_flow,
)
from .metrics import MetricReport, combine_reports, metrics, read_report, write_report
from .net import AdamW, Model, NetConfig, checkpoint_load, checkpoint_save
from .objective import (
    HR_TRAIN_BAND,
    RR_TRAIN_BAND,
    Band,
    BandPsd,
    BandPsdTransform,
    anchored_loss,
    band_psd,
    contrastive_loss,
    get_transform,
    psd_distance,
)
from .pipeline import (
    HR_INFER_BAND,
    RR_INFER_BAND,
    ClipPair,
    EpochRecord,
    TrainConfig,
    infer_wave,
    load_pairs,
    pretrain_supervised,
    rates_from_wave,
    read_history_csv,
    train,
    write_history_csv,
)
from .roi import Rect, RoiGrid, chest_rect, face_roi_grid
from .series import RateSeries, Waveform, resample_linear
from .synth import CameraSpec, SubjectSpec, Trajectory, gen_dataset, gen_pair, load_manifest

__all__ = [
    "AdamW",
    "AugmentSpec",
    "Band",
    "BandPsd",
    "BandPsdTransform",
    "CameraSpec",
    "ClipPair",
    "EpochRecord",
    "HR_INFER_BAND",
    "HR_TRAIN_BAND",
    "LandmarkFrame",
    "MeanTrace",
    "MetricReport",
    "Model",
    "NetConfig",
    "RR_INFER_BAND",
    "RR_TRAIN_BAND",
    "RateSeries",
    "Rect",
    "RoiGrid",
    "SpatioTemporalMap",
    "SubjectSpec",
    "TrainConfig",
    "Trajectory",
    "Waveform",
    "anchored_loss",
    "augment_pair",
    "band_psd",
    "build_flow_map",
    "build_rgb_map",
    "checkpoint_load",
    "checkpoint_save",
    "chest_rect",
    "chrom_wave",
    "combine_reports",
    "contrastive_loss",
    "face_roi_grid",
    "gen_dataset",
    "gen_pair",
    "get_transform",
    "infer_wave",
    "load_manifest",
    "load_pairs",
    "metrics",
    "pos_wave",
    "pretrain_supervised",
    "psd_distance",
    "rates_from_wave",
    "read_history_csv",
    "read_landmarks_jsonl",
    "read_report",
    "resample_linear",
    "resample_temporal",
    "rgb_mean_trace",
    "rr_benchmark_wave",
    "stm_read",
    "stm_write",
    "train",
    "vertical_flow",
    "write_history_csv",
    "write_landmarks_jsonl",
    "write_report",
]
