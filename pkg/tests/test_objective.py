import math

import numpy as np
import pytest

from vitalcam.objective import (
    HR_TRAIN_BAND,
    RR_TRAIN_BAND,
    Band,
    BandPsdTransform,
    anchored_loss,
    band_psd,
    contrastive_loss,
    get_transform,
    loss_from_distances,
    pairwise_sq_distances,
    psd_distance,
)


def brute_force_loss(pa, pb, tau):
    """Scalar-loop reference: per anchor, positive over own-view plus
    cross-view negatives, summed over both anchor directions."""

    def d(u, v):
        return float(np.sum((u - v) ** 2))

    n = pa.shape[0]
    total = 0.0
    for i in range(n):
        za = sum(math.exp(d(pa[i], pa[k]) / tau) for k in range(n) if k != i)
        za += sum(math.exp(d(pa[i], pb[k]) / tau) for k in range(n))
        zb = sum(math.exp(d(pb[i], pb[k]) / tau) for k in range(n) if k != i)
        zb += sum(math.exp(d(pb[i], pa[k]) / tau) for k in range(n))
        total += math.log(math.exp(d(pa[i], pb[i]) / tau) / za)
        total += math.log(math.exp(d(pb[i], pa[i]) / tau) / zb)
    return total


def random_psd_batch(rng, n, k=32):
    p = rng.random((n, k)) + 1e-3
    return p / p.sum(axis=1, keepdims=True)


def test_band_validation():
    with pytest.raises(ValueError):
        Band(0.0, 1.0)
    with pytest.raises(ValueError):
        Band(2.0, 1.0)
    assert HR_TRAIN_BAND.bpm() == pytest.approx((40.02, 150.0))
    assert RR_TRAIN_BAND.bpm() == pytest.approx((10.02, 60.0))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6])
def test_matches_brute_force(n):
    rng = np.random.default_rng(100 + n)
    for trial in range(5):
        pa = random_psd_batch(rng, n)
        pb = random_psd_batch(rng, n)
        tau = float(rng.uniform(0.05, 0.5))
        loss, _, _ = contrastive_loss(pa, pb, tau)
        assert loss == pytest.approx(brute_force_loss(pa, pb, tau), abs=1e-10)


def test_single_pair_is_zero():
    rng = np.random.default_rng(0)
    pa = random_psd_batch(rng, 1)
    pb = random_psd_batch(rng, 1)
    loss, gpa, gpb = contrastive_loss(pa, pb, 0.1)
    assert loss == 0.0
    np.testing.assert_array_equal(gpa, np.zeros_like(pa))
    np.testing.assert_array_equal(gpb, np.zeros_like(pb))


def test_two_identical_pairs_closed_form():
    # all four spectra equal: every distance is 0, each anchor sees
    # exp(0) once in the numerator and three times in the denominator
    p = random_psd_batch(np.random.default_rng(1), 1)
    pa = np.vstack([p, p])
    pb = np.vstack([p, p])
    loss, _, _ = contrastive_loss(pa, pb, 0.1)
    assert abs(loss - 4.0 * math.log(1.0 / 3.0)) < 1e-12


def test_distance_gradient_signs():
    rng = np.random.default_rng(7)
    for _ in range(25):
        n = int(rng.integers(2, 6))
        d_aa = rng.uniform(0, 0.02, (n, n))
        d_bb = rng.uniform(0, 0.02, (n, n))
        d_ab = rng.uniform(0, 0.02, (n, n))
        d_aa = 0.5 * (d_aa + d_aa.T)
        d_bb = 0.5 * (d_bb + d_bb.T)
        np.fill_diagonal(d_aa, 0.0)
        np.fill_diagonal(d_bb, 0.0)
        tau = float(rng.uniform(0.05, 0.3))
        _, g_aa, g_ab, g_bb = loss_from_distances(d_aa, d_ab, d_bb, tau)
        off = ~np.eye(n, dtype=bool)
        assert (np.diag(g_ab) > 0).all()          # positives push together
        assert (g_ab[off] < 0).all()              # cross negatives push apart
        assert (g_aa[off] < 0).all() and (g_bb[off] < 0).all()


def test_loss_prefers_matched_pairs():
    rng = np.random.default_rng(3)
    pa = random_psd_batch(rng, 4)
    noise = rng.normal(size=pa.shape) * 1e-3
    pb_close = pa + noise - noise.mean(axis=1, keepdims=True)
    pb_far = random_psd_batch(rng, 4)
    loss_close, _, _ = contrastive_loss(pa, pb_close, 0.1)
    loss_far, _, _ = contrastive_loss(pa, pb_far, 0.1)
    assert loss_close < loss_far


def test_contrastive_gradients_match_fd():
    rng = np.random.default_rng(9)
    pa = random_psd_batch(rng, 3, k=16)
    pb = random_psd_batch(rng, 3, k=16)
    tau = 0.1
    _, gpa, gpb = contrastive_loss(pa, pb, tau)
    h = 1e-7
    for arr, grad in ((pa, gpa), (pb, gpb)):
        for idx in [(0, 0), (1, 5), (2, 15)]:
            orig = arr[idx]
            arr[idx] = orig + h
            up, _, _ = contrastive_loss(pa, pb, tau)
            arr[idx] = orig - h
            dn, _, _ = contrastive_loss(pa, pb, tau)
            arr[idx] = orig
            fd = (up - dn) / (2 * h)
            assert grad[idx] == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_anchored_matches_contrastive_value_and_grad():
    rng = np.random.default_rng(5)
    pred = random_psd_batch(rng, 4)
    truth = random_psd_batch(rng, 4)
    full, gpa, _ = contrastive_loss(pred, truth, 0.1)
    loss, gpred = anchored_loss(pred, truth, 0.1)
    assert loss == pytest.approx(full, abs=1e-14)
    np.testing.assert_array_equal(gpred, gpa)


def test_pairwise_and_single_distances():
    p = np.array([[0.0, 0.0], [1.0, 1.0]])
    q = np.array([[0.0, 2.0], [3.0, 1.0]])
    d = pairwise_sq_distances(p, q)
    np.testing.assert_allclose(d, [[4.0, 10.0], [2.0, 4.0]])
    assert psd_distance(p[0], q[0]) == pytest.approx(4.0)
    with pytest.raises(ValueError, match="mismatch"):
        psd_distance(np.zeros(3), np.zeros(4))


def test_mismatched_batches_rejected():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        contrastive_loss(random_psd_batch(rng, 2), random_psd_batch(rng, 3), 0.1)
    with pytest.raises(ValueError, match="temperature"):
        contrastive_loss(random_psd_batch(rng, 2), random_psd_batch(rng, 2), 0.0)


def test_band_psd_is_normalized_nonnegative():
    rng = np.random.default_rng(4)
    wave = rng.normal(size=240)
    psd = band_psd(wave, fs=30.0, band=HR_TRAIN_BAND)
    assert np.linalg.norm(psd.values) == pytest.approx(1.0, abs=1e-9)
    assert (psd.values >= -1e-15).all()
    assert psd.freqs[0] == pytest.approx(HR_TRAIN_BAND.f_lo)
    assert psd.freqs[-1] == pytest.approx(HR_TRAIN_BAND.f_hi)


def test_band_psd_peak_at_tone():
    fs, n = 30.0, 300
    t = np.arange(n) / fs
    wave = np.sin(2 * np.pi * 1.2 * t)
    psd = band_psd(wave, fs=fs, band=HR_TRAIN_BAND)
    got = psd.freqs[np.argmax(psd.values)]
    grid_step = psd.freqs[1] - psd.freqs[0]
    assert abs(got - 1.2) <= grid_step


def test_band_restriction_ignores_out_of_band_power():
    # strong 0.3 Hz drift outside the heart band must not displace the peak
    fs, n = 30.0, 300
    t = np.arange(n) / fs
    wave = 10.0 * np.sin(2 * np.pi * 0.3 * t) + np.sin(2 * np.pi * 1.5 * t)
    psd = band_psd(wave, fs=fs, band=HR_TRAIN_BAND)
    got = psd.freqs[np.argmax(psd.values)]
    grid_step = psd.freqs[1] - psd.freqs[0]
    assert abs(got - 1.5) <= 2 * grid_step


def test_band_psd_errors():
    with pytest.raises(ValueError, match="flat"):
        band_psd(np.ones(64), fs=30.0, band=HR_TRAIN_BAND)
    with pytest.raises(ValueError, match="Nyquist"):
        BandPsdTransform(64, fs=4.0, band=HR_TRAIN_BAND)
    tr = BandPsdTransform(64, fs=30.0, band=HR_TRAIN_BAND)
    with pytest.raises(ValueError, match="expected"):
        tr.forward(np.random.default_rng(0).normal(size=(2, 63)))


def test_transform_backward_matches_fd():
    rng = np.random.default_rng(12)
    tr = BandPsdTransform(48, fs=30.0, band=HR_TRAIN_BAND, k=24)
    waves = rng.normal(size=(3, 48))
    gpsd = rng.normal(size=(3, 24))
    _, cache = tr.forward(waves)
    gw = tr.backward(cache, gpsd)
    h = 1e-6
    delta = rng.normal(size=waves.shape)
    up, _ = tr.forward(waves + h * delta)
    dn, _ = tr.forward(waves - h * delta)
    fd = float(((up - dn) * gpsd).sum()) / (2 * h)
    an = float((gw * delta).sum())
    assert an == pytest.approx(fd, rel=1e-6)


def test_get_transform_caches():
    a = get_transform(150, 30.0, HR_TRAIN_BAND)
    b = get_transform(150, 30.0, HR_TRAIN_BAND)
    assert a is b
    c = get_transform(150, 30.0, RR_TRAIN_BAND)
    assert c is not a
