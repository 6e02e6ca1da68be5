import json

import pytest

from vitalcam.landmarks import LandmarkFrame, read_landmarks_jsonl, write_landmarks_jsonl


def make_frame(idx=0):
    return LandmarkFrame(
        frame_index=idx,
        left_eye=(120.0, 60.0),
        right_eye=(80.0, 60.0),
        chin=(100.0, 110.0),
        face_left=(130.0, 80.0),
        face_right=(70.0, 80.0),
    )


def test_pupil_distance():
    assert make_frame().pupil_distance == pytest.approx(40.0)


def test_jsonl_round_trip(tmp_path):
    frames = [make_frame(i) for i in range(3)]
    path = tmp_path / "lm.jsonl"
    write_landmarks_jsonl(path, frames)
    back = read_landmarks_jsonl(path)
    assert back == frames


def test_validate_rejects_swapped_eyes():
    lm = LandmarkFrame(0, left_eye=(80.0, 60.0), right_eye=(120.0, 60.0),
                       chin=(100.0, 110.0), face_left=(130.0, 80.0),
                       face_right=(70.0, 80.0))
    with pytest.raises(ValueError, match="left eye"):
        lm.validate()


def test_validate_rejects_chin_above_eyes():
    lm = LandmarkFrame(0, left_eye=(120.0, 60.0), right_eye=(80.0, 60.0),
                       chin=(100.0, 50.0), face_left=(130.0, 80.0),
                       face_right=(70.0, 80.0))
    with pytest.raises(ValueError, match="chin"):
        lm.validate()


def test_validate_frame_bounds():
    lm = make_frame()
    lm.validate(frame_w=200, frame_h=240)
    with pytest.raises(ValueError, match="outside"):
        lm.validate(frame_w=100, frame_h=240)


def test_read_rejects_missing_key(tmp_path):
    rec = {"frame_index": 0, "left_eye": [120, 60], "right_eye": [80, 60],
           "chin": [100, 110], "face_left": [130, 80]}
    path = tmp_path / "bad.jsonl"
    path.write_text(json.dumps(rec) + "\n")
    with pytest.raises(ValueError):
        read_landmarks_jsonl(path)


def test_read_skips_blank_lines(tmp_path):
    path = tmp_path / "lm.jsonl"
    write_landmarks_jsonl(path, [make_frame(0)])
    path.write_text(path.read_text() + "\n\n")
    assert len(read_landmarks_jsonl(path)) == 1
