"""Tests for data matrix files."""

import io
import struct

import numpy as np
import pytest

from covspec.datafile import (
    MAGIC,
    detect_format,
    read_binary,
    read_csv,
    read_matrix,
    write_binary,
    write_csv,
    write_matrix,
)
from covspec.exceptions import DataFormatError


def encode(X: np.ndarray) -> bytes:
    buffer = io.BytesIO()
    write_binary(buffer, X)
    return buffer.getvalue()


class TestBinary:
    """Tests for the COVSPEC-MAT format."""

    def test_real_round_trip_is_bitwise(self):
        X = np.random.default_rng(0).standard_normal((3, 5))
        Y = read_binary(io.BytesIO(encode(X)))
        assert Y.shape == (3, 5)
        assert Y.tobytes() == X.tobytes()

    def test_complex_round_trip_is_bitwise(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((4, 2)) + 1j * rng.standard_normal((4, 2))
        Y = read_binary(io.BytesIO(encode(X)))
        assert np.iscomplexobj(Y)
        assert Y.tobytes() == X.tobytes()

    def test_starts_with_magic(self):
        assert encode(np.ones((1, 1))).startswith(MAGIC)

    def test_rejects_empty_matrix(self):
        with pytest.raises(DataFormatError):
            encode(np.ones((0, 3)))

    def test_bad_magic(self):
        with pytest.raises(DataFormatError, match="magic"):
            read_binary(io.BytesIO(b"x" * 40))

    def test_truncated_header_length(self):
        with pytest.raises(DataFormatError, match="truncated"):
            read_binary(io.BytesIO(MAGIC + b"\x01"))

    def test_malformed_header(self):
        body = b"{not json"
        with pytest.raises(DataFormatError, match="header"):
            read_binary(io.BytesIO(MAGIC + struct.pack("<I", len(body)) + body))

    def test_payload_mismatch(self):
        data = encode(np.ones((2, 2)))
        with pytest.raises(DataFormatError) as exc_info:
            read_binary(io.BytesIO(data[:-8]))
        assert exc_info.value.details["p"] == 2


class TestCsv:
    """Tests for CSV matrices."""

    def test_header_row_skipped(self):
        X = read_csv(io.StringIO("s1,s2,s3\n1,2,3\n4,5,6\n"))
        np.testing.assert_array_equal(X, [[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])

    def test_complex_cells(self):
        X = read_csv(io.StringIO("1+2j,3\n0,-1j\n"))
        assert np.iscomplexobj(X)
        assert X[0, 0] == 1 + 2j

    def test_ragged_rows(self):
        with pytest.raises(DataFormatError, match="unequal"):
            read_csv(io.StringIO("1,2\n3\n"))

    def test_bad_cell_after_first_row(self):
        with pytest.raises(DataFormatError, match="row 2"):
            read_csv(io.StringIO("1,2\n3,x\n"))

    @pytest.mark.parametrize("text", ["", "\n\n", "a,b\n"])
    def test_empty(self, text):
        with pytest.raises(DataFormatError):
            read_csv(io.StringIO(text))

    def test_write_then_read(self):
        X = np.array([[0.1, 1.0 / 3.0], [2.5, -7.0]])
        buffer = io.StringIO()
        write_csv(buffer, X)
        buffer.seek(0)
        np.testing.assert_array_equal(read_csv(buffer), X)


class TestFiles:
    """Tests for read_matrix and write_matrix."""

    @pytest.mark.parametrize(("binary", "fmt"), [(True, "binary"), (False, "csv")])
    def test_write_and_detect(self, tmp_path, binary, fmt):
        path = tmp_path / "data.mat"
        X = np.arange(6.0).reshape(2, 3)
        write_matrix(path, X, binary=binary)
        assert detect_format(path) == fmt
        np.testing.assert_array_equal(read_matrix(path), X)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataFormatError, match="not found"):
            read_matrix(tmp_path / "absent.csv")

    def test_csv_with_invalid_utf8(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_bytes(b"\xff\xfe1,2\n3,4\n")
        with pytest.raises(DataFormatError, match="UTF-8"):
            read_matrix(path)
