import struct

import numpy as np
import pytest

from dctnet import checkpoint
from dctnet.errors import DataError
from dctnet.nn import NetworkConfig, init_params


@pytest.fixture
def params():
    return init_params(NetworkConfig((8, 8, 3), ((4,), (6,)), (5,), 3), 7)


def test_roundtrip(params, tmp_path):
    checkpoint.save(tmp_path / "m.ckpt", params, {"seed": 7})
    back, manifest = checkpoint.load(tmp_path / "m.ckpt")
    assert manifest == {"seed": 7}
    assert back.config == params.config
    assert list(back.tensors) == list(params.tensors)
    for k, v in params.tensors.items():
        assert back.tensors[k].dtype == v.dtype
        np.testing.assert_array_equal(back.tensors[k], v)


def test_layout(params):
    blob = checkpoint.dumps(params)
    assert blob[:8] == b"DCTNETCK"
    version, hlen = struct.unpack_from("<II", blob, 8)
    assert version == 1
    pos = 16 + hlen
    (nlen,) = struct.unpack_from("<I", blob, pos)
    assert blob[pos + 4:pos + 4 + nlen] == b"conv1.W"
    pos += 4 + nlen
    code, ndim = struct.unpack_from("<BI", blob, pos)
    assert (code, ndim) == (0, 4)
    assert struct.unpack_from("<4I", blob, pos + 5) == (3, 3, 3, 4)
    first = struct.unpack_from("<f", blob, pos + 5 + 16)[0]
    assert first == pytest.approx(float(params.tensors["conv1.W"].ravel()[0]))


def test_deterministic_bytes(params):
    assert checkpoint.dumps(params, {"a": 1}) == checkpoint.dumps(params, {"a": 1})


def test_float64(tmp_path):
    p = init_params(NetworkConfig((4, 4, 1), ((2,),), (), 2), 0, dtype=np.float64)
    back, _ = checkpoint.loads(checkpoint.dumps(p))
    assert back.tensors["out.W"].dtype == np.float64


@pytest.mark.parametrize("mangle", [
    lambda b: b"XXXXXXXX" + b[8:],
    lambda b: b[:-3],
    lambda b: b + b"\0",
    lambda b: b[:8] + struct.pack("<I", 99) + b[12:],
])
def test_corruption_detected(params, mangle):
    with pytest.raises(DataError):
        checkpoint.loads(mangle(checkpoint.dumps(params)))


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        checkpoint.load(tmp_path / "none.ckpt")
