"""Band-restricted power spectra and the cross-view contrastive objective.

Waves are compared in the frequency domain: each wave is mean-removed,
Hann-windowed, zero-padded to 4096 samples, and its squared-magnitude
DFT is evaluated on the physiological band only, interpolated onto K
uniform points and scaled to unit Euclidean norm. The whole transform
is a pair of fixed matrix products, so it is differentiable and the
training losses below can push gradients back into the network's
output wave.

Unit norm makes the squared-distance geometry independent of K and of
spectral width: d(p, q) = 2 - 2 cos(p, q) lies in [0, 2], reaching 2
only for disjoint spectra, so a fixed temperature contrasts the batch
the same way regardless of grid resolution.

The pair loss treats synchronized views of the same clip as a positive
(numerator distance, to shrink) and every other clip in the batch as a
negative (denominator distances, to grow); distances are squared
Euclidean between normalized spectra, scaled by a temperature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NFFT = 4096
DEFAULT_PSD_POINTS = 128

HR_TRAIN_BAND: "Band"
RR_TRAIN_BAND: "Band"


@dataclass(frozen=True)
class Band:
    """Frequency band in Hz, inclusive."""

    f_lo: float
    f_hi: float

    def __post_init__(self) -> None:
        if not (0.0 < self.f_lo < self.f_hi):
            raise ValueError(f"band: need 0 < f_lo < f_hi, got [{self.f_lo}, {self.f_hi}]")

    def bpm(self) -> tuple[float, float]:
        return self.f_lo * 60.0, self.f_hi * 60.0


HR_TRAIN_BAND = Band(0.667, 2.50)
RR_TRAIN_BAND = Band(0.167, 1.00)


@dataclass
class BandPsd:
    """Unit-norm in-band power spectrum on K uniform frequency points."""

    band: Band
    freqs: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        self.freqs = np.asarray(self.freqs, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.freqs.shape != self.values.shape or self.freqs.ndim != 1:
            raise ValueError("band psd: freqs/values must be matching 1-D arrays")
        if np.any(self.values < -1e-12):
            raise ValueError("band psd: negative power")
        if abs(float(np.linalg.norm(self.values)) - 1.0) > 1e-6:
            raise ValueError("band psd: values must have unit norm")


class BandPsdTransform:
    """Precomputed differentiable wave -> normalized band PSD transform.

    Fixing (n_samples, fs, band, k) fixes the Hann window, the DFT
    bins covering the band, and the interpolation weights, so forward
    is two GEMMs plus elementwise work and backward is their adjoint.
    """

    def __init__(self, n_samples: int, fs: float, band: Band, k: int = DEFAULT_PSD_POINTS):
        if n_samples < 8:
            raise ValueError(f"band psd: need >= 8 samples, got {n_samples}")
        if not (fs > 0 and np.isfinite(fs)):
            raise ValueError(f"band psd: bad sample rate {fs}")
        if band.f_hi > fs / 2 + 1e-12:
            raise ValueError(
                f"band psd: band top {band.f_hi} Hz above Nyquist {fs / 2} Hz"
            )
        if k < 2:
            raise ValueError(f"band psd: need k >= 2 points, got {k}")
        self.n_samples = n_samples
        self.fs = float(fs)
        self.band = band
        self.k = k
        df = self.fs / NFFT
        j_lo = max(int(np.floor(band.f_lo / df)), 0)
        j_hi = min(int(np.ceil(band.f_hi / df)), NFFT // 2)
        if j_hi - j_lo < 1:
            raise ValueError("band psd: band narrower than one DFT bin")
        self._j0 = j_lo
        js = np.arange(j_lo, j_hi + 1, dtype=np.float64)
        t = np.arange(n_samples, dtype=np.float64)
        ang = 2.0 * np.pi * np.outer(js, t) / NFFT
        self._cos = np.cos(ang)
        self._sin = np.sin(ang)
        self._window = np.hanning(n_samples)
        self.freqs = np.linspace(band.f_lo, band.f_hi, k)
        pos = (self.freqs - j_lo * df) / df
        idx = np.minimum(pos.astype(np.int64), js.size - 2)
        idx = np.maximum(idx, 0)
        frac = pos - idx
        interp = np.zeros((k, js.size), dtype=np.float64)
        interp[np.arange(k), idx] = 1.0 - frac
        interp[np.arange(k), idx + 1] += frac
        self._interp = interp

    def forward(self, waves: np.ndarray) -> tuple[np.ndarray, dict]:
        """(N, T) waves -> (N, K) normalized band PSDs plus backward cache."""
        w = np.asarray(waves, dtype=np.float64)
        squeeze = w.ndim == 1
        if squeeze:
            w = w[None, :]
        if w.ndim != 2 or w.shape[1] != self.n_samples:
            raise ValueError(f"band psd: expected (N, {self.n_samples}) waves, got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("band psd: non-finite wave")
        flat = np.ptp(w, axis=1) == 0.0
        if np.any(flat):
            raise ValueError(f"band psd: flat wave at rows {np.nonzero(flat)[0][:5].tolist()}")
        x = (w - w.mean(axis=1, keepdims=True)) * self._window
        re = x @ self._cos.T
        im = x @ self._sin.T
        power = re * re + im * im
        u = power @ self._interp.T
        s = np.sqrt(np.sum(u * u, axis=1, keepdims=True))
        if np.any(s <= 0.0):
            raise ValueError("band psd: flat wave (no in-band energy)")
        p = u / s
        cache = {"re": re, "im": im, "u": u, "s": s, "p": p}
        if squeeze:
            return p[0], cache
        return p, cache

    def backward(self, cache: dict, gpsd: np.ndarray) -> np.ndarray:
        """Adjoint of forward: gradients w.r.t. the input waves."""
        g = np.asarray(gpsd, dtype=np.float64)
        squeeze = g.ndim == 1
        if squeeze:
            g = g[None, :]
        p, s = cache["p"], cache["s"]
        if squeeze:
            p = p.reshape(1, -1)
        gu = (g - (g * p).sum(axis=1, keepdims=True) * p) / s
        gpow = gu @ self._interp
        gre = 2.0 * gpow * cache["re"]
        gim = 2.0 * gpow * cache["im"]
        gx = gre @ self._cos + gim @ self._sin
        gxw = gx * self._window
        gw = gxw - gxw.mean(axis=1, keepdims=True)
        if squeeze:
            return gw[0]
        return gw


_TRANSFORM_CACHE: dict[tuple, BandPsdTransform] = {}


def get_transform(n_samples: int, fs: float, band: Band, k: int = DEFAULT_PSD_POINTS) -> BandPsdTransform:
    key = (int(n_samples), float(fs), band.f_lo, band.f_hi, int(k))
    tr = _TRANSFORM_CACHE.get(key)
    if tr is None:
        tr = BandPsdTransform(n_samples, fs, band, k)
        if len(_TRANSFORM_CACHE) > 64:
            _TRANSFORM_CACHE.clear()
        _TRANSFORM_CACHE[key] = tr
    return tr


def band_psd(values: np.ndarray, fs: float, band: Band, k: int = DEFAULT_PSD_POINTS) -> BandPsd:
    """Normalized in-band PSD of one wave (see BandPsdTransform)."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError(f"band psd: expected 1-D wave, got {values.shape}")
    tr = get_transform(values.size, fs, band, k)
    p, _ = tr.forward(values)
    return BandPsd(band=band, freqs=tr.freqs.copy(), values=p)


def psd_distance(p: np.ndarray | BandPsd, q: np.ndarray | BandPsd) -> float:
    """Squared Euclidean distance between two spectra on the same grid.

    The sum (rather than mean) convention keeps distances between
    unit-mass spectra on the order of one, so dividing by the usual
    temperature of 0.1 produces a softmax that actually contrasts.
    """
    pv = p.values if isinstance(p, BandPsd) else np.asarray(p, dtype=np.float64)
    qv = q.values if isinstance(q, BandPsd) else np.asarray(q, dtype=np.float64)
    if pv.shape != qv.shape:
        raise ValueError(f"psd distance: shape mismatch {pv.shape} vs {qv.shape}")
    return float(np.sum((pv - qv) ** 2))


def _check_psd_batch(p: np.ndarray, name: str) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError(f"contrastive: {name} must be (N, K), got {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError(f"contrastive: non-finite entries in {name}")
    return p


def pairwise_sq_distances(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """d[n, k] = squared Euclidean distance between rows p_n and q_k."""
    diff = p[:, None, :] - q[None, :, :]
    return np.sum(diff * diff, axis=2)


def loss_from_distances(
    d_aa: np.ndarray, d_ab: np.ndarray, d_bb: np.ndarray, tau: float
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    """Pair loss and its gradients as a function of spectral distances.

    d_ab[n, k] is the distance between view-a spectrum n and view-b
    spectrum k; the diagonal holds the positive pairs. Returns
    (loss, dL/d_aa, dL/d_ab, dL/d_bb). Exposing this stage separately
    keeps the distance-level behaviour directly testable.
    """
    n = d_ab.shape[0]
    if d_aa.shape != (n, n) or d_ab.shape != (n, n) or d_bb.shape != (n, n):
        raise ValueError("contrastive: distance matrices must all be (N, N)")
    if tau <= 0:
        raise ValueError(f"contrastive: temperature must be positive, got {tau}")
    x_aa = d_aa / tau
    x_ab = d_ab / tau
    x_bb = d_bb / tau
    off = 1.0 - np.eye(n)
    masked = np.where(off > 0, x_aa, -np.inf)
    # Row-wise max subtraction: besides the usual overflow guard, it
    # makes the N=1 loss and gradients exactly zero, as they are in
    # exact arithmetic (the denominator collapses to the positive term).
    m_a = np.maximum(masked.max(axis=1), x_ab.max(axis=1))
    masked = np.where(off > 0, x_bb, -np.inf)
    m_b = np.maximum(masked.max(axis=1), x_ab.max(axis=0))
    ea_aa = np.exp(x_aa - m_a[:, None]) * off
    ea_ab = np.exp(x_ab - m_a[:, None])
    eb_bb = np.exp(x_bb - m_b[:, None]) * off
    eb_ab = np.exp(x_ab - m_b[None, :])
    z_a = ea_aa.sum(axis=1) + ea_ab.sum(axis=1)
    z_b = eb_bb.sum(axis=1) + eb_ab.sum(axis=0)
    pos = np.diag(x_ab)
    loss = float(np.sum(2.0 * pos - m_a - np.log(z_a) - m_b - np.log(z_b)))
    inv_za = 1.0 / z_a
    inv_zb = 1.0 / z_b
    g_aa = -ea_aa * inv_za[:, None] / tau
    g_bb = -eb_bb * inv_zb[:, None] / tau
    g_ab = -(ea_ab * inv_za[:, None] + eb_ab * inv_zb[None, :]) / tau
    g_ab[np.diag_indices(n)] += 2.0 / tau
    return loss, g_aa, g_ab, g_bb


def contrastive_loss(
    psd_a: np.ndarray, psd_b: np.ndarray, tau: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Batch pair loss over synchronized spectra; returns gradients too.

    Row n of both inputs must come from the same clip. The returned
    gradients are with respect to psd_a and psd_b.
    """
    pa = _check_psd_batch(psd_a, "psd_a")
    pb = _check_psd_batch(psd_b, "psd_b")
    if pa.shape != pb.shape:
        raise ValueError(f"contrastive: batch shapes differ {pa.shape} vs {pb.shape}")
    n, k = pa.shape
    d_aa = pairwise_sq_distances(pa, pa)
    d_ab = pairwise_sq_distances(pa, pb)
    d_bb = pairwise_sq_distances(pb, pb)
    loss, g_aa, g_ab, g_bb = loss_from_distances(d_aa, d_ab, d_bb, tau)
    s_aa = g_aa + g_aa.T
    s_bb = g_bb + g_bb.T
    scale = 2.0
    gpa = scale * (
        (s_aa.sum(axis=1) + g_ab.sum(axis=1))[:, None] * pa - s_aa @ pa - g_ab @ pb
    )
    gpb = scale * (
        (s_bb.sum(axis=1) + g_ab.sum(axis=0))[:, None] * pb - s_bb @ pb - g_ab.T @ pa
    )
    return loss, gpa, gpb


def anchored_loss(
    psd_pred: np.ndarray, psd_truth: np.ndarray, tau: float
) -> tuple[float, np.ndarray]:
    """Pair loss against fixed reference spectra.

    Identical in value to contrastive_loss on the same tensors, but the
    reference side is treated as a constant: only the prediction-side
    gradient is produced.
    """
    loss, gpred, _ = contrastive_loss(psd_pred, psd_truth, tau)
    return loss, gpred
