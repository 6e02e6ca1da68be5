"""The wave-regression network: config, assembly, forward/backward.

Structure: a 5-tap temporal stem, then four blocks of
[5-tap ROI conv + BN + ELU, 5-tap temporal conv + BN + ELU, ROI pool],
with temporal pooling in the first two blocks undone by two linear
upsamplings after the last two blocks, and a head that averages the
remaining ROIs and mixes channels down to a single wave of the same
length as the input. Channel widths grow as resolution shrinks, which
keeps the parameter count in the intended band while concentrating
compute away from the full-resolution early layers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import AvgPoolAxis, BnElu, ConvAxis, GlobalAvgRoi, UpsampleTime

DEFAULT_STEM_WIDTH = 32
DEFAULT_BLOCK_WIDTHS = (32, 64, 112, 128)


@dataclass(frozen=True)
class NetConfig:
    """Architecture description; what a checkpoint is keyed on."""

    in_channels: int
    rois: int = 224
    frames: int = 150
    stem_width: int = DEFAULT_STEM_WIDTH
    block_widths: tuple[int, int, int, int] = DEFAULT_BLOCK_WIDTHS

    def __post_init__(self) -> None:
        if self.in_channels < 1:
            raise ValueError(f"net config: in_channels {self.in_channels} < 1")
        if self.rois < 1:
            raise ValueError(f"net config: rois {self.rois} < 1")
        if self.frames < 8:
            raise ValueError(f"net config: frames {self.frames} < 8")
        if self.stem_width < 1 or len(self.block_widths) != 4:
            raise ValueError("net config: bad widths")
        if any(w < 1 for w in self.block_widths):
            raise ValueError("net config: bad widths")

    def to_vector(self) -> np.ndarray:
        return np.array(
            [1, self.in_channels, self.rois, self.frames, self.stem_width, *self.block_widths],
            dtype=np.float32,
        )

    @classmethod
    def from_vector(cls, vec: np.ndarray) -> "NetConfig":
        vec = np.asarray(vec)
        if vec.size != 9 or int(vec[0]) != 1:
            raise ValueError(f"net config: unrecognized config vector {vec!r}")
        ints = [int(round(float(v))) for v in vec]
        return cls(
            in_channels=ints[1],
            rois=ints[2],
            frames=ints[3],
            stem_width=ints[4],
            block_widths=(ints[5], ints[6], ints[7], ints[8]),
        )


class Model:
    """Holds the layer graph; parameters live in a plain dict of arrays.

    Layer caches make an instance single-use per forward/backward pair
    and not thread-safe; build one Model per concurrent consumer and
    share the params dict read-only.
    """

    def __init__(self, config: NetConfig, dtype=np.float32):
        self.config = config
        self.dtype = dtype
        w = config.block_widths
        self._convs: list[ConvAxis] = []
        seq: list = []

        def conv(name: str, c_in: int, c_out: int, k: int, axis: int) -> None:
            layer = ConvAxis(name, c_in, c_out, k, axis)
            self._convs.append(layer)
            seq.append(layer)
            seq.append(BnElu(f"{name}_bn", c_out))

        conv("stem", config.in_channels, config.stem_width, 5, axis=3)
        c_prev = config.stem_width
        self._time_pools: list[AvgPoolAxis] = []
        self._upsamples: list[UpsampleTime] = []
        for b, c_out in enumerate(w, start=1):
            conv(f"b{b}.roi", c_prev, c_out, 5, axis=2)
            conv(f"b{b}.time", c_out, c_out, 5, axis=3)
            seq.append(AvgPoolAxis(f"b{b}.pool_roi", axis=2))
            if b <= 2:
                pool_t = AvgPoolAxis(f"b{b}.pool_time", axis=3)
                self._time_pools.append(pool_t)
                seq.append(pool_t)
            if b >= 3:
                up = UpsampleTime(f"b{b}.upsample")
                self._upsamples.append(up)
                seq.append(up)
            c_prev = c_out
        seq.append(GlobalAvgRoi("head.gavg"))
        head = ConvAxis("head", c_prev, 1, 1, axis=3)
        self._convs.append(head)
        seq.append(head)
        self._seq = seq
        self._bns = [l for l in seq if isinstance(l, BnElu)]

    def param_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        specs: dict[str, tuple[tuple[int, ...], str]] = {}
        for layer in self._seq:
            specs.update(layer.param_specs())
        return specs

    def state_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        specs: dict[str, tuple[tuple[int, ...], str]] = {}
        for bn in self._bns:
            specs.update(bn.state_specs())
        return specs

    def trainable_names(self) -> list[str]:
        return list(self.param_specs().keys())

    def init_params(self, seed: int = 0) -> dict[str, np.ndarray]:
        """Kaiming-uniform conv weights, unit gammas, zero biases/betas."""
        rng = np.random.default_rng(np.random.SeedSequence([0x5EED, seed]))
        params: dict[str, np.ndarray] = {}
        for name, (shape, kind) in self.param_specs().items():
            if kind == "kaiming_uniform":
                fan_in = shape[1] * shape[2]
                bound = float(np.sqrt(6.0 / fan_in))
                params[name] = rng.uniform(-bound, bound, size=shape).astype(self.dtype)
            elif kind == "ones":
                params[name] = np.ones(shape, dtype=self.dtype)
            else:
                params[name] = np.zeros(shape, dtype=self.dtype)
        for name, (shape, kind) in self.state_specs().items():
            params[name] = (np.ones if kind == "ones" else np.zeros)(shape, dtype=self.dtype)
        return params

    def param_count(self) -> int:
        return sum(int(np.prod(shape)) for shape, _ in self.param_specs().values())

    def forward(self, params: dict, x: np.ndarray, training: bool) -> np.ndarray:
        """(N, C, M, T) maps in, (N, T) waves out."""
        x = np.asarray(x, dtype=self.dtype)
        if x.ndim != 4:
            raise ValueError(f"net: expected (N, C, M, T) input, got {x.shape}")
        n, c, m, t = x.shape
        if c != self.config.in_channels:
            raise ValueError(f"net: expected {self.config.in_channels} channels, got {c}")
        if t < 8:
            raise ValueError(f"net: need at least 8 frames, got {t}")
        lengths = [t, t // 2]
        self._upsamples[0].target = lengths[1]
        self._upsamples[1].target = lengths[0]
        for layer in self._seq:
            x = layer.forward(x, params, training)
        if x.shape[1] != 1 or x.shape[2] != 1 or x.shape[3] != t:
            raise AssertionError(f"net: unexpected head shape {x.shape}")
        return x.reshape(n, t)

    def backward(
        self, params: dict, gy: np.ndarray, need_gx: bool = False
    ) -> tuple[dict[str, np.ndarray], np.ndarray | None]:
        """Gradients of a scalar loss given dL/d(output wave).

        Returns (param grads, input grad); the input grad is skipped
        (None) unless requested, since the first conv's is never needed
        for training.
        """
        gy = np.asarray(gy, dtype=self.dtype)
        if gy.ndim != 2:
            raise ValueError(f"net: expected (N, T) output gradient, got {gy.shape}")
        g = gy.reshape(gy.shape[0], 1, 1, gy.shape[1])
        grads: dict[str, np.ndarray] = {}
        for pos, layer in enumerate(reversed(self._seq)):
            last = pos == len(self._seq) - 1
            if isinstance(layer, ConvAxis):
                g = layer.backward(g, params, grads, need_gx=need_gx or not last)
            else:
                g = layer.backward(g, params, grads)
        return grads, (g if need_gx else None)

    def infer(self, params: dict, x: np.ndarray) -> np.ndarray:
        """Evaluation-mode forward that also drops layer caches."""
        y = self.forward(params, x, training=False)
        self.release()
        return y

    def release(self) -> None:
        for layer in self._seq:
            for attr in ("_x", "_y", "_mu", "_inv_std"):
                if hasattr(layer, attr):
                    setattr(layer, attr, None)
