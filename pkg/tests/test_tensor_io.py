import numpy as np
import pytest

from orbit4d.errors import InvalidArgument
from orbit4d.tensor_io import MAGIC, read_tensor, write_tensor


def test_roundtrip(tmp_path):
    data = np.random.default_rng(0).normal(size=(3, 5, 4)).astype(np.float32)
    path = tmp_path / "t.orb"
    write_tensor(path, data)
    back = read_tensor(path)
    assert back.dtype == np.float32
    assert np.array_equal(back, data)


def test_header_layout(tmp_path):
    path = tmp_path / "t.orb"
    write_tensor(path, np.zeros((2, 3), dtype=np.float32))
    raw = path.read_bytes()
    assert raw[:8] == MAGIC
    assert int.from_bytes(raw[8:12], "little") == 2
    assert int.from_bytes(raw[12:16], "little") == 2
    assert int.from_bytes(raw[16:20], "little") == 3
    assert len(raw) == 20 + 4 * 6


def test_rejects_bad_magic(tmp_path):
    path = tmp_path / "bad.orb"
    path.write_bytes(b"NOTMAGIC" + b"\x00" * 16)
    with pytest.raises(InvalidArgument):
        read_tensor(path)


def test_rejects_truncated(tmp_path):
    path = tmp_path / "t.orb"
    write_tensor(path, np.ones((4, 4), dtype=np.float32))
    good = path.read_bytes()
    path.write_bytes(good[:-8])
    with pytest.raises(InvalidArgument):
        read_tensor(path)
