"""Hot inner loops for the conv layers, JIT-compiled when numba exists.

Only the tap-accumulation of the stacked-GEMM convolution lives here;
everything else stays plain numpy. The numpy fallbacks are exact
(same additions in the same order per output element), so results do
not depend on whether numba is importable.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


@njit(cache=True)
def _acc_taps_last(z, out):
    """out[c, a, j] = sum_k z[k, c, a, j + k] (shifted-slice reduction)."""
    taps, co, a_len, _ = z.shape
    b_len = out.shape[2]
    for c in range(co):
        for a in range(a_len):
            zr = z[0, c, a]
            outr = out[c, a]
            for j in range(b_len):
                outr[j] = zr[j]
            for k in range(1, taps):
                zr = z[k, c, a]
                for j in range(b_len):
                    outr[j] += zr[k + j]


@njit(cache=True)
def _acc_taps_mid(z, out):
    """out[c, a, j] = sum_k z[k, c, a + k, j] (shift along axis 2)."""
    taps, co, _, b_len = z.shape
    a_len = out.shape[1]
    for c in range(co):
        for a in range(a_len):
            zr = z[0, c, a]
            outr = out[c, a]
            for j in range(b_len):
                outr[j] = zr[j]
            for k in range(1, taps):
                zr = z[k, c, a + k]
                for j in range(b_len):
                    outr[j] += zr[j]


def _acc_taps_last_np(z, out):
    taps = z.shape[0]
    b_len = out.shape[2]
    np.copyto(out, z[0, :, :, 0:b_len])
    for k in range(1, taps):
        out += z[k, :, :, k : k + b_len]


def _acc_taps_mid_np(z, out):
    taps = z.shape[0]
    a_len = out.shape[1]
    np.copyto(out, z[0, :, 0:a_len, :])
    for k in range(1, taps):
        out += z[k, :, k : k + a_len, :]


if HAVE_NUMBA:
    acc_taps_last = _acc_taps_last
    acc_taps_mid = _acc_taps_mid
else:  # pragma: no cover
    acc_taps_last = _acc_taps_last_np
    acc_taps_mid = _acc_taps_mid_np
