import numpy as np
import pytest

from vitalcam.ppm import read_ppm, read_ppm_dir, write_ppm


def test_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = rng.integers(0, 256, size=(7, 11, 3), dtype=np.uint8)
    path = tmp_path / "a.ppm"
    write_ppm(path, img)
    back = read_ppm(path)
    assert back.dtype == np.uint8
    assert np.array_equal(back, img)


def test_header_comments_and_whitespace(tmp_path):
    img = np.arange(2 * 3 * 3, dtype=np.uint8).reshape(2, 3, 3)
    raw = b"P6 # magic\n# a comment line\n 3\t2 # dims\n255\n" + img.tobytes()
    path = tmp_path / "c.ppm"
    path.write_bytes(raw)
    assert np.array_equal(read_ppm(path), img)


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.ppm"
    path.write_bytes(b"P5\n2 2\n255\n" + bytes(12))
    with pytest.raises(ValueError, match="magic"):
        read_ppm(path)


def test_truncated_raster(tmp_path):
    path = tmp_path / "short.ppm"
    path.write_bytes(b"P6\n4 4\n255\n" + bytes(10))
    with pytest.raises(ValueError, match="truncated"):
        read_ppm(path)


def test_maxval_rejected(tmp_path):
    path = tmp_path / "hdr.ppm"
    path.write_bytes(b"P6\n1 1\n65535\n" + bytes(6))
    with pytest.raises(ValueError, match="maxval"):
        read_ppm(path)


def test_write_rejects_non_uint8(tmp_path):
    with pytest.raises(ValueError, match="uint8"):
        write_ppm(tmp_path / "x.ppm", np.zeros((2, 2, 3), dtype=np.float32))


def test_dir_sorted_and_consistent(tmp_path):
    imgs = []
    for i in (2, 0, 1):
        img = np.full((3, 3, 3), i * 10, dtype=np.uint8)
        write_ppm(tmp_path / f"frame_{i:03d}.ppm", img)
        imgs.append((i, img))
    frames = read_ppm_dir(tmp_path)
    assert len(frames) == 3
    for i, frame in enumerate(frames):
        assert frame[0, 0, 0] == i * 10  # lexicographic == numeric here


def test_dir_size_mismatch(tmp_path):
    write_ppm(tmp_path / "a.ppm", np.zeros((2, 2, 3), dtype=np.uint8))
    write_ppm(tmp_path / "b.ppm", np.zeros((3, 2, 3), dtype=np.uint8))
    with pytest.raises(ValueError, match="mismatch"):
        read_ppm_dir(tmp_path)


def test_dir_empty(tmp_path):
    with pytest.raises(ValueError, match="no .ppm"):
        read_ppm_dir(tmp_path)
