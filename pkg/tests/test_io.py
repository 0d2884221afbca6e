import struct

import numpy as np
import pytest

from tvhosvd import io


def test_tensor_roundtrip(tmp_path):
    t = np.random.default_rng(0).standard_normal((3, 4, 2))
    io.write_tensor(tmp_path / "t.bin", t)
    back = io.read_tensor(tmp_path / "t.bin")
    assert back.shape == t.shape and back.tobytes() == t.tobytes()


def test_tensor_layout(tmp_path):
    t = np.arange(6.0).reshape(2, 3)
    io.write_tensor(tmp_path / "t.bin", t)
    raw = (tmp_path / "t.bin").read_bytes()
    assert raw[:5] == b"WTEN1"
    assert struct.unpack("<I", raw[5:9]) == (2,)
    assert struct.unpack("<2Q", raw[9:25]) == (2, 3)
    # last index fastest
    assert struct.unpack("<6d", raw[25:]) == (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)


def test_mask_roundtrip(tmp_path):
    m = np.random.default_rng(1).random((4, 5)) < 0.5
    io.write_mask(tmp_path / "m.bin", m)
    raw = (tmp_path / "m.bin").read_bytes()
    assert raw[:5] == b"WMSK1" and len(raw) == 9 + 16 + 20
    assert np.array_equal(io.read_mask(tmp_path / "m.bin"), m)


@pytest.mark.parametrize("mutate", [
    lambda raw: b"XTEN1" + raw[5:],
    lambda raw: raw[:-1],
    lambda raw: raw + b"\0",
    lambda raw: raw[:7],
])
def test_tensor_validation(tmp_path, mutate):
    path = tmp_path / "t.bin"
    io.write_tensor(path, np.ones((2, 2)))
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(ValueError):
        io.read_tensor(path)


def test_mask_rejects_bad_bytes(tmp_path):
    path = tmp_path / "m.bin"
    io.write_mask(path, np.ones((2, 2), bool))
    raw = bytearray(path.read_bytes())
    raw[-1] = 2
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        io.read_mask(path)


def test_wrong_magic_for_kind(tmp_path):
    io.write_mask(tmp_path / "m.bin", np.ones((2, 2), bool))
    with pytest.raises(ValueError):
        io.read_tensor(tmp_path / "m.bin")


def test_nonfinite_payload_rejected(tmp_path):
    path = tmp_path / "t.bin"
    io.write_tensor(path, np.ones(3))
    raw = bytearray(path.read_bytes())
    raw[-8:] = struct.pack("<d", float("nan"))
    path.write_bytes(bytes(raw))
    with pytest.raises(ValueError):
        io.read_tensor(path)


def test_factor_files(tmp_path):
    prefix = tmp_path / "w"
    factors = [np.array([1.0, 2.0]), np.array([0.5, 0.25, 4.0])]
    io.write_factors(prefix, factors)
    assert (tmp_path / "w.f1").exists() and (tmp_path / "w.f2").exists()
    back = io.read_factors(prefix)
    assert len(back) == 2 and all(np.array_equal(a, b) for a, b in zip(back, factors))
    with pytest.raises(ValueError):
        io.read_factors(tmp_path / "missing")
