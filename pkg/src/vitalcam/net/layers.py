"""Network building blocks with explicit forward/backward passes.

Activations are (N, C, M, T) arrays. Convolutions are separable 5-tap
filters along one axis (ROI or time) with full channel mixing; they
are evaluated per sample as one GEMM over tap-stacked weights plus a
shifted-slice reduction, which keeps scratch memory small and the work
BLAS-bound. Batch norm and ELU are fused into a single layer whose
backward pass reconstructs the pre-activation from the cached output
(ELU is invertible), so each conv/BN/ELU triple keeps exactly one
activation-sized array alive between forward and backward.

BatchNorm and Elu also exist standalone; the fused layer is verified
against their composition in the tests.
"""

from __future__ import annotations

import numpy as np

from .kernels import acc_taps_last, acc_taps_mid

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


class ConvAxis:
    """k-tap convolution along `axis` (2=ROI, 3=time), zero 'same' padding."""

    def __init__(self, name: str, c_in: int, c_out: int, k: int, axis: int):
        if axis not in (2, 3):
            raise ValueError(f"conv: axis must be 2 or 3, got {axis}")
        if k < 1 or k % 2 == 0:
            raise ValueError(f"conv: kernel size must be odd and positive, got {k}")
        self.name = name
        self.c_in = c_in
        self.c_out = c_out
        self.k = k
        self.axis = axis
        self.wname = f"{name}.weight"
        self.bname = f"{name}.bias"
        self._x: np.ndarray | None = None

    def param_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        return {
            self.wname: ((self.c_out, self.c_in, self.k), "kaiming_uniform"),
            self.bname: ((self.c_out,), "zeros"),
        }

    def _stacked_weight(self, params: dict, dtype) -> np.ndarray:
        w = params[self.wname]
        return np.ascontiguousarray(
            w.transpose(2, 0, 1).reshape(self.k * self.c_out, self.c_in), dtype=dtype
        )

    def _pad_shape(self, m: int, t: int) -> tuple[int, ...]:
        p2 = 2 * (self.k // 2)
        if self.axis == 2:
            return (self.c_in, m + p2, t)
        return (self.c_in, m, t + p2)

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        n, c, m, t = x.shape
        if c != self.c_in:
            raise ValueError(f"conv {self.name}: expected {self.c_in} channels, got {c}")
        k, p = self.k, self.k // 2
        ws = self._stacked_weight(params, x.dtype)
        bias = params[self.bname]
        y = np.empty((n, self.c_out, m, t), dtype=x.dtype)
        xp = np.zeros(self._pad_shape(m, t), dtype=x.dtype)
        acc = acc_taps_mid if self.axis == 2 else acc_taps_last
        for i in range(n):
            if p:
                if self.axis == 2:
                    xp[:, p : p + m, :] = x[i]
                else:
                    xp[:, :, p : p + t] = x[i]
            else:
                xp = x[i]
            z = (ws @ xp.reshape(c, -1)).reshape((k, self.c_out) + xp.shape[1:])
            acc(z, y[i])
        if np.any(bias):
            y += bias.astype(x.dtype, copy=False)[None, :, None, None]
        self._x = x
        return y

    def backward(
        self, gy: np.ndarray, params: dict, grads: dict, need_gx: bool = True
    ) -> np.ndarray | None:
        x = self._x
        if x is None:
            raise RuntimeError(f"conv {self.name}: backward before forward")
        n, c, m, t = x.shape
        k, p = self.k, self.k // 2
        ws = self._stacked_weight(params, x.dtype)
        axis_len = m if self.axis == 2 else t
        dws = np.zeros((k * self.c_out, c), dtype=np.float64)
        gx = np.empty_like(x) if need_gx else None
        xp = np.zeros(self._pad_shape(m, t), dtype=x.dtype)
        gz = np.zeros((k, self.c_out) + xp.shape[1:], dtype=x.dtype)
        for i in range(n):
            if p:
                if self.axis == 2:
                    xp[:, p : p + m, :] = x[i]
                else:
                    xp[:, :, p : p + t] = x[i]
            else:
                xp = x[i]
            # written slices fully overwrite each iteration; the pad border
            # stays zero from allocation
            for j in range(k):
                if self.axis == 2:
                    gz[j][:, j : j + axis_len, :] = gy[i]
                else:
                    gz[j][:, :, j : j + axis_len] = gy[i]
            gzf = gz.reshape(k * self.c_out, -1)
            xf = xp.reshape(c, -1)
            dws += gzf @ xf.T
            if need_gx:
                gxp = (ws.T @ gzf).reshape(xp.shape)
                if self.axis == 2:
                    gx[i] = gxp[:, p : p + m, :]
                else:
                    gx[i] = gxp[:, :, p : p + t]
        dw = dws.reshape(k, self.c_out, c).transpose(1, 2, 0)
        grads[self.wname] = dw.astype(params[self.wname].dtype)
        grads[self.bname] = gy.sum(axis=(0, 2, 3), dtype=np.float64).astype(
            params[self.bname].dtype
        )
        self._x = None
        return gx


def _elu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0) + np.expm1(np.minimum(z, 0))


def _elu_inverse(y: np.ndarray) -> np.ndarray:
    return np.maximum(y, 0) + np.log1p(np.minimum(y, 0))


class BnElu:
    """Fused batch norm (over batch, ROI, time) + ELU.

    Forward computes y = elu(gamma * xhat + beta). Backward recovers
    the pre-activation z from y (elu is strictly monotone) and xhat
    from z, so only the output array is cached; it is the same array
    the following conv layer caches as its input, keeping one live
    copy per triple. Channels whose gamma reaches exactly zero lose
    their gamma gradient (xhat is unrecoverable there); gamma starts
    at 1 and in practice never lands on zero.
    """

    def __init__(self, name: str, c: int):
        self.name = name
        self.c = c
        self.gname = f"{name}.gamma"
        self.bname = f"{name}.beta"
        self.rm_name = f"{name}.running_mean"
        self.rv_name = f"{name}.running_var"
        self._y: np.ndarray | None = None
        self._inv_std: np.ndarray | None = None
        self._training = False

    def param_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        return {
            self.gname: ((self.c,), "ones"),
            self.bname: ((self.c,), "zeros"),
        }

    def state_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        return {
            self.rm_name: ((self.c,), "zeros"),
            self.rv_name: ((self.c,), "ones"),
        }

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        gamma = params[self.gname].astype(np.float64)
        beta = params[self.bname].astype(np.float64)
        dt = x.dtype
        if training:
            n_red = x.shape[0] * x.shape[2] * x.shape[3]
            mu = np.einsum("ncmt->c", x).astype(np.float64) / n_red
            # centered second moment: two passes, but no catastrophic
            # cancellation when the input mean dwarfs its spread
            z = x - mu.astype(dt)[None, :, None, None]
            var = np.einsum("ncmt,ncmt->c", z, z).astype(np.float64) / n_red
            var = np.maximum(var, 0.0)
            unbiased = var * (n_red / (n_red - 1)) if n_red > 1 else var
            rm, rv = params[self.rm_name], params[self.rv_name]
            rm *= 1.0 - BN_MOMENTUM
            rm += (BN_MOMENTUM * mu).astype(rm.dtype)
            rv *= 1.0 - BN_MOMENTUM
            rv += (BN_MOMENTUM * unbiased).astype(rv.dtype)
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            z *= (gamma * inv_std).astype(dt)[None, :, None, None]
            z += beta.astype(dt)[None, :, None, None]
        else:
            mu = params[self.rm_name].astype(np.float64)
            var = params[self.rv_name].astype(np.float64)
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            z = x * (gamma * inv_std).astype(dt)[None, :, None, None]
            z += (beta - mu * gamma * inv_std).astype(dt)[None, :, None, None]
        y = np.maximum(z, 0)
        np.minimum(z, 0, out=z)
        np.expm1(z, out=z)
        y += z
        self._y = y
        self._inv_std = inv_std
        self._training = training
        return y

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        y = self._y
        if y is None:
            raise RuntimeError(f"bnelu {self.name}: backward before forward")
        gamma = params[self.gname].astype(np.float64)
        beta = params[self.bname].astype(np.float64)
        inv_std = self._inv_std
        dt = y.dtype
        one = np.asarray(1.0, dtype=dt)
        deriv = y + one
        np.minimum(deriv, one, out=deriv)
        gz = np.multiply(gy, deriv, out=deriv)
        # recover the pre-activation in place; y is dropped afterwards
        z = np.minimum(y, 0)
        np.log1p(z, out=z)
        np.maximum(y, 0, out=y)
        z += y
        sum_gz = np.einsum("ncmt->c", gz).astype(np.float64)
        sum_gz_z = np.einsum("ncmt,ncmt->c", gz, z).astype(np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            dgamma = (sum_gz_z - beta * sum_gz) / gamma
        dgamma = np.where(np.isfinite(dgamma), dgamma, 0.0)
        grads[self.bname] = sum_gz.astype(params[self.bname].dtype)
        grads[self.gname] = dgamma.astype(params[self.gname].dtype)
        p_coef = gamma * inv_std
        if self._training:
            n_red = y.shape[0] * y.shape[2] * y.shape[3]
            mg = sum_gz / n_red
            mgx = dgamma / n_red
            q_coef = -inv_std * mgx
            r_coef = -p_coef * mg + inv_std * mgx * beta
            gz *= p_coef.astype(dt)[None, :, None, None]
            z *= q_coef.astype(dt)[None, :, None, None]
            gz += z
            gz += r_coef.astype(dt)[None, :, None, None]
        else:
            gz *= p_coef.astype(dt)[None, :, None, None]
        self._y = None
        self._inv_std = None
        return gz


class BatchNorm:
    """Reference (unfused) batch normalization; see BnElu for training."""

    def __init__(self, name: str, c: int):
        self.name = name
        self.c = c
        self.gname = f"{name}.gamma"
        self.bname = f"{name}.beta"
        self.rm_name = f"{name}.running_mean"
        self.rv_name = f"{name}.running_var"
        self._x: np.ndarray | None = None
        self._mu: np.ndarray | None = None
        self._inv_std: np.ndarray | None = None
        self._training = False

    def param_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        return {
            self.gname: ((self.c,), "ones"),
            self.bname: ((self.c,), "zeros"),
        }

    def state_specs(self) -> dict[str, tuple[tuple[int, ...], str]]:
        return {
            self.rm_name: ((self.c,), "zeros"),
            self.rv_name: ((self.c,), "ones"),
        }

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        gamma = params[self.gname].astype(x.dtype, copy=False)
        beta = params[self.bname].astype(x.dtype, copy=False)
        if training:
            mu = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
            n_red = x.shape[0] * x.shape[2] * x.shape[3]
            unbiased = var * (n_red / (n_red - 1)) if n_red > 1 else var
            params[self.rm_name] *= 1.0 - BN_MOMENTUM
            params[self.rm_name] += BN_MOMENTUM * mu.astype(params[self.rm_name].dtype)
            params[self.rv_name] *= 1.0 - BN_MOMENTUM
            params[self.rv_name] += BN_MOMENTUM * unbiased.astype(params[self.rv_name].dtype)
        else:
            mu = params[self.rm_name].astype(x.dtype, copy=False)
            var = params[self.rv_name].astype(x.dtype, copy=False)
        inv_std = (1.0 / np.sqrt(var + BN_EPS)).astype(x.dtype)
        mu = mu.astype(x.dtype, copy=False)
        y = (x - mu[None, :, None, None]) * (gamma * inv_std)[None, :, None, None]
        y += beta[None, :, None, None]
        self._x = x
        self._mu = mu
        self._inv_std = inv_std
        self._training = training
        return y

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        x, mu, inv_std = self._x, self._mu, self._inv_std
        if x is None:
            raise RuntimeError(f"bn {self.name}: backward before forward")
        gamma = params[self.gname].astype(x.dtype, copy=False)
        xhat = (x - mu[None, :, None, None]) * inv_std[None, :, None, None]
        grads[self.bname] = gy.sum(axis=(0, 2, 3)).astype(params[self.bname].dtype)
        grads[self.gname] = (gy * xhat).sum(axis=(0, 2, 3)).astype(params[self.gname].dtype)
        gxhat = gy * gamma[None, :, None, None]
        if self._training:
            mean_g = gxhat.mean(axis=(0, 2, 3))
            mean_gx = (gxhat * xhat).mean(axis=(0, 2, 3))
            gx = gxhat - mean_g[None, :, None, None] - xhat * mean_gx[None, :, None, None]
            gx *= inv_std[None, :, None, None]
        else:
            gx = gxhat * inv_std[None, :, None, None]
        self._x = self._mu = self._inv_std = None
        return gx


class Elu:
    """Reference ELU (alpha=1); the derivative comes from the output."""

    def __init__(self, name: str):
        self.name = name
        self._y: np.ndarray | None = None

    def param_specs(self) -> dict:
        return {}

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        y = _elu(x)
        self._y = y
        return y

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        y = self._y
        if y is None:
            raise RuntimeError(f"elu {self.name}: backward before forward")
        one = np.asarray(1.0, dtype=y.dtype)
        gx = gy * np.minimum(y + one, one)
        self._y = None
        return gx


class AvgPoolAxis:
    """Average-pool by 2 along `axis`; length-1 axes pass through.

    Odd lengths floor: the trailing element is dropped, and its
    gradient is zero.
    """

    def __init__(self, name: str, axis: int):
        if axis not in (2, 3):
            raise ValueError(f"pool: axis must be 2 or 3, got {axis}")
        self.name = name
        self.axis = axis
        self._in_len: int | None = None
        self._in_shape: tuple | None = None

    def param_specs(self) -> dict:
        return {}

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        length = x.shape[self.axis]
        self._in_len = length
        self._in_shape = x.shape
        if length < 2:
            return x
        out = length // 2
        half = np.asarray(0.5, dtype=x.dtype)
        if self.axis == 2:
            y = x[:, :, 0 : 2 * out : 2, :] + x[:, :, 1 : 2 * out : 2, :]
        else:
            y = x[:, :, :, 0 : 2 * out : 2] + x[:, :, :, 1 : 2 * out : 2]
        y *= half
        return y

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        length, shape = self._in_len, self._in_shape
        if length is None:
            raise RuntimeError(f"pool {self.name}: backward before forward")
        self._in_len = self._in_shape = None
        if length < 2:
            return gy
        out = length // 2
        gx = np.zeros(shape, dtype=gy.dtype)
        half = gy * np.asarray(0.5, dtype=gy.dtype)
        if self.axis == 2:
            gx[:, :, 0 : 2 * out : 2, :] = half
            gx[:, :, 1 : 2 * out : 2, :] = half
        else:
            gx[:, :, :, 0 : 2 * out : 2] = half
            gx[:, :, :, 1 : 2 * out : 2] = half
        return gx


def _upsample_table(n_in: int, n_out: int) -> dict:
    """Gather/scatter index tables for align-corners linear upsampling."""
    pos = np.arange(n_out, dtype=np.float64) * (n_in - 1) / (n_out - 1)
    idx = np.minimum(pos.astype(np.int64), n_in - 2)
    frac = pos - idx
    slots = []
    for target_idx, weights in ((idx, 1.0 - frac), (idx + 1, frac)):
        rank = np.zeros(n_out, dtype=np.int64)
        seen: dict[int, int] = {}
        for o, i in enumerate(target_idx):
            r = seen.get(int(i), -1) + 1
            seen[int(i)] = r
            rank[o] = r
        for s in range(int(rank.max()) + 1):
            sel = np.nonzero(rank == s)[0]
            slots.append((sel, target_idx[sel], weights[sel]))
    return {"idx": idx, "frac": frac, "slots": slots}


class UpsampleTime:
    """Linear (align-corners) upsampling of the time axis to `target`.

    The model sets `target` before each forward from the length stack
    recorded at the matching time pool, so pooled odd lengths come
    back to their exact pre-pool size.
    """

    def __init__(self, name: str):
        self.name = name
        self.target: int | None = None
        self._tables: dict[tuple[int, int], dict] = {}
        self._key: tuple[int, int] | None = None

    def param_specs(self) -> dict:
        return {}

    def _table(self, n_in: int, n_out: int) -> dict:
        key = (n_in, n_out)
        tab = self._tables.get(key)
        if tab is None:
            tab = _upsample_table(n_in, n_out)
            self._tables[key] = tab
        return tab

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        if self.target is None:
            raise RuntimeError(f"upsample {self.name}: target length not set")
        n_in = x.shape[3]
        n_out = self.target
        self._key = (n_in, n_out)
        if n_out == n_in:
            return x
        if n_in < 2:
            raise ValueError(f"upsample {self.name}: need >= 2 samples, got {n_in}")
        tab = self._table(n_in, n_out)
        idx, frac = tab["idx"], tab["frac"]
        f = frac.astype(x.dtype)
        return x[..., idx] * (1.0 - f) + x[..., idx + 1] * f

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        key = self._key
        if key is None:
            raise RuntimeError(f"upsample {self.name}: backward before forward")
        self._key = None
        n_in, n_out = key
        if n_out == n_in:
            return gy
        tab = self._table(n_in, n_out)
        gx = np.zeros(gy.shape[:-1] + (n_in,), dtype=gy.dtype)
        for sel, tgt, w in tab["slots"]:
            gx[..., tgt] += gy[..., sel] * w.astype(gy.dtype)
        return gx


class GlobalAvgRoi:
    """Mean over the ROI axis, keeping a singleton dimension."""

    def __init__(self, name: str):
        self.name = name
        self._m: int | None = None

    def param_specs(self) -> dict:
        return {}

    def forward(self, x: np.ndarray, params: dict, training: bool) -> np.ndarray:
        self._m = x.shape[2]
        return x.mean(axis=2, keepdims=True, dtype=x.dtype)

    def backward(self, gy: np.ndarray, params: dict, grads: dict) -> np.ndarray:
        m = self._m
        if m is None:
            raise RuntimeError(f"gavg {self.name}: backward before forward")
        self._m = None
        scale = np.asarray(1.0 / m, dtype=gy.dtype)
        return np.broadcast_to(gy * scale, gy.shape[:2] + (m,) + gy.shape[3:]).copy()
