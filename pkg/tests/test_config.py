import pytest

from vitalcam.config import as_float, as_floats, as_int, as_str, parse_config_text, read_config


def test_parse_basics():
    cfg = parse_config_text("a=1\n# comment\nb = two words \n\nc=3.5\n")
    assert cfg == {"a": "1", "b": "two words", "c": "3.5"}


def test_inline_values_keep_equals():
    cfg = parse_config_text("expr=a=b\n")
    assert cfg["expr"] == "a=b"


def test_duplicate_key():
    with pytest.raises(ValueError, match="duplicate"):
        parse_config_text("a=1\na=2\n")


def test_missing_equals():
    with pytest.raises(ValueError, match="line 2"):
        parse_config_text("a=1\nnot a pair\n")


def test_empty_key():
    with pytest.raises(ValueError, match="empty key"):
        parse_config_text("=5\n")


def test_typed_accessors():
    cfg = parse_config_text("n=12\nx=0.25\nname=run7\nws=1,2,3.5\n")
    assert as_int(cfg, "n") == 12
    assert as_float(cfg, "x") == 0.25
    assert as_float(cfg, "n") == 12.0
    assert as_str(cfg, "name") == "run7"
    assert as_floats(cfg, "ws") == (1.0, 2.0, 3.5)


def test_accessor_defaults_and_errors():
    cfg = parse_config_text("n=12\nbad=zzz\n")
    assert as_int(cfg, "missing", 7) == 7
    assert as_int(cfg, "missing", None) is None
    assert as_floats(cfg, "missing", (1.0,)) == (1.0,)
    with pytest.raises(ValueError, match="bad"):
        as_int(cfg, "bad")
    with pytest.raises(ValueError, match="bad"):
        as_float(cfg, "bad")


def test_read_config_file(tmp_path):
    path = tmp_path / "c.txt"
    path.write_text("epochs=4\nlr=1e-3\n")
    cfg = read_config(path)
    assert as_int(cfg, "epochs") == 4
    assert as_float(cfg, "lr") == pytest.approx(1e-3)
