import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from swrom import io


def test_header_and_column_major_layout(tmp_path):
    p = tmp_path / "m.swrm"
    io.write_matrix(p, np.array([[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]))
    raw = p.read_bytes()
    assert raw[:4] == b"SWRM"
    assert struct.unpack("<IQQ", raw[4:24]) == (1, 3, 2)
    assert np.frombuffer(raw[24:], "<f8").tolist() == [1.0, 3.0, 5.0, 2.0, 4.0, 6.0]
    assert len(raw) == 24 + 8 * 6


@given(arrays(np.float64, st.tuples(st.integers(1, 7), st.integers(1, 5)), elements=st.floats(allow_nan=True)))
def test_roundtrip_bitwise(tmp_path_factory, M):
    p = tmp_path_factory.mktemp("rt") / "m.swrm"
    io.write_matrix(p, M)
    back = io.read_matrix(p)
    assert back.shape == M.shape
    assert back.tobytes() == np.ascontiguousarray(M).tobytes()


def test_vector_stored_as_column(tmp_path):
    io.write_matrix(tmp_path / "v.swrm", np.arange(4.0))
    assert io.read_matrix(tmp_path / "v.swrm").shape == (4, 1)


def test_streaming_writer_matches_bulk(tmp_path, rng):
    M = rng.standard_normal((6, 4))
    with io.ColumnWriter(tmp_path / "s.swrm", 6) as w:
        assert not (tmp_path / "s.swrm").exists()
        for col in M.T:
            w.append(col)
    io.write_matrix(tmp_path / "b.swrm", M)
    assert (tmp_path / "s.swrm").read_bytes() == (tmp_path / "b.swrm").read_bytes()


def test_aborted_stream_leaves_nothing(tmp_path):
    with pytest.raises(RuntimeError):
        with io.ColumnWriter(tmp_path / "s.swrm", 3) as w:
            w.append(np.ones(3))
            raise RuntimeError("boom")
    assert list(tmp_path.iterdir()) == []
    w = io.ColumnWriter(tmp_path / "t.swrm", 3)
    with pytest.raises(ValueError):
        w.append(np.ones(4))
    w.abort()


def test_corrupt_files(tmp_path):
    p = tmp_path / "m.swrm"
    io.write_matrix(p, np.ones((2, 2)))
    raw = p.read_bytes()
    p.write_bytes(raw[:-8])
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    p.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    p.write_bytes(raw[:10])
    with pytest.raises(io.FormatError):
        io.read_matrix(p)
    p.write_bytes(raw[:4] + struct.pack("<I", 9) + raw[8:])
    with pytest.raises(io.FormatError):
        io.read_matrix(p)


def test_atomic_write_keeps_old_file_on_failure(tmp_path):
    p = tmp_path / "m.swrm"
    io.write_matrix(p, np.ones((2, 2)))
    with pytest.raises(ValueError):
        io.write_matrix(p, np.ones((2, 2, 2)))
    assert io.read_matrix(p).shape == (2, 2)
    assert sorted(x.name for x in tmp_path.iterdir()) == ["m.swrm"]


def test_csv_reports(tmp_path):
    io.write_report(tmp_path / "r.csv", [("error_h", 0.1), ("n", 30)])
    text = (tmp_path / "r.csv").read_text(encoding="utf-8")
    assert text.splitlines()[0] == "quantity,value"
    assert io.read_report(tmp_path / "r.csv") == {"error_h": 0.1, "n": 30.0}
    table = np.arange(8.0).reshape(2, 4)
    io.write_conserved(tmp_path / "c.csv", [0.0, 0.1], table)
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "step,time,H,Z,M,V"
    assert np.array_equal(io.read_conserved(tmp_path / "c.csv"), table)
    (tmp_path / "bad.csv").write_text("a,b\n")
    with pytest.raises(io.FormatError):
        io.read_report(tmp_path / "bad.csv")
