"""
Data matrix files: CSV (rows = variables, columns = samples) and COVSPEC-MAT binary.

Binary layout:

    16 bytes   magic b"COVSPEC-MAT\\0", zero-padded
     4 bytes   header length L, little-endian uint32
     L bytes   UTF-8 JSON {"p", "n", "dtype": "f64" | "c128", "layout": "column-major"}
     payload   p·n little-endian values in column-major order (complex as re, im)
"""

import csv
import io
import json
import struct
from pathlib import Path
from typing import IO, Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from covspec.exceptions import DataFormatError

MAGIC = b"COVSPEC-MAT\0".ljust(16, b"\0")
HEADER_LENGTH = struct.Struct("<I")

DTYPES: dict[str, np.dtype] = {"f64": np.dtype("<f8"), "c128": np.dtype("<c16")}


class MatrixHeader(BaseModel):
    """JSON header of a binary data matrix."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    p: int = Field(ge=1)
    n: int = Field(ge=1)
    dtype: Literal["f64", "c128"] = "f64"
    layout: Literal["column-major"] = "column-major"


# =============================================================================
# Binary
# =============================================================================


def write_binary(stream: IO[bytes], X: np.ndarray) -> None:
    """Write X in the COVSPEC-MAT format; round-trips bit for bit."""
    X = np.asarray(X)
    if X.ndim != 2 or X.size == 0:
        raise DataFormatError(f"only non-empty 2-d matrices can be written, got shape {X.shape}")
    dtype = "c128" if np.iscomplexobj(X) else "f64"
    header = MatrixHeader(p=X.shape[0], n=X.shape[1], dtype=dtype)
    encoded = header.model_dump_json().encode("utf-8")
    stream.write(MAGIC)
    stream.write(HEADER_LENGTH.pack(len(encoded)))
    stream.write(encoded)
    stream.write(np.asarray(X, dtype=DTYPES[dtype]).tobytes(order="F"))


def read_binary(stream: IO[bytes]) -> np.ndarray:
    """
    Read a COVSPEC-MAT matrix.

    Raises:
        DataFormatError: On a bad magic, header or payload length.
    """
    if stream.read(len(MAGIC)) != MAGIC:
        raise DataFormatError("not a COVSPEC-MAT file (bad magic)")
    raw_length = stream.read(HEADER_LENGTH.size)
    if len(raw_length) != HEADER_LENGTH.size:
        raise DataFormatError("truncated header length")
    (length,) = HEADER_LENGTH.unpack(raw_length)
    try:
        header = MatrixHeader.model_validate(json.loads(stream.read(length).decode("utf-8")))
    except (UnicodeDecodeError, json.JSONDecodeError, ValidationError) as exc:
        raise DataFormatError("malformed COVSPEC-MAT header", cause=str(exc)) from exc

    dtype = DTYPES[header.dtype]
    payload = stream.read()
    expected = header.p * header.n * dtype.itemsize
    if len(payload) != expected:
        raise DataFormatError(
            f"payload has {len(payload)} bytes, header declares {expected}",
            details={"p": header.p, "n": header.n, "dtype": header.dtype},
        )
    flat = np.frombuffer(payload, dtype=dtype)
    return flat.reshape((header.p, header.n), order="F").astype(dtype.newbyteorder("="))


# =============================================================================
# CSV
# =============================================================================


def _parse_cell(cell: str) -> complex | float:
    text = cell.strip()
    if "j" in text:
        return complex(text)
    return float(text)


def read_csv(stream: IO[str]) -> np.ndarray:
    """
    Read a CSV matrix; a first row that does not parse as numbers is a header.

    Cells written as Python complex literals (``1.5+2j``) give a complex matrix.

    Raises:
        DataFormatError: On ragged rows, bad cells or an empty file.
    """
    rows = [row for row in csv.reader(stream) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataFormatError("CSV file has no data rows")
    parsed: list[list[complex | float]] = []
    for index, row in enumerate(rows):
        try:
            parsed.append([_parse_cell(c) for c in row])
        except ValueError as exc:
            if index == 0:
                continue
            raise DataFormatError(f"non-numeric cell in row {index + 1}", cause=str(exc)) from exc
    if not parsed:
        raise DataFormatError("CSV file has a header but no data rows")
    width = len(parsed[0])
    if any(len(row) != width for row in parsed):
        raise DataFormatError("CSV rows have unequal lengths")
    is_complex = any(isinstance(v, complex) for row in parsed for v in row)
    return np.array(parsed, dtype=complex if is_complex else float)


def write_csv(stream: IO[str], X: np.ndarray) -> None:
    """Write X with repr precision (17 significant digits)."""
    writer = csv.writer(stream)
    for row in np.asarray(X):
        writer.writerow([repr(complex(v)) if np.iscomplexobj(row) else repr(float(v)) for v in row])


# =============================================================================
# Format dispatch
# =============================================================================

def _read_csv_file(path: Path) -> np.ndarray:
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"CSV file is not valid UTF-8: {path}", cause=str(exc)) from exc
    return read_csv(io.StringIO(text, newline=""))


READERS: dict[str, Callable[[Path], np.ndarray]] = {
    "binary": lambda path: read_binary(io.BytesIO(path.read_bytes())),
    "csv": _read_csv_file,
}


def detect_format(path: Path) -> str:
    """Return "binary" when the file starts with the COVSPEC-MAT magic, else "csv"."""
    with path.open("rb") as handle:
        return "binary" if handle.read(len(MAGIC)) == MAGIC else "csv"


def read_matrix(path: str | Path) -> np.ndarray:
    """
    Read a data matrix, detecting the format from its first bytes.

    Raises:
        DataFormatError: If the file is missing or malformed.
    """
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"data file not found: {path}")
    return READERS[detect_format(path)](path)


def write_matrix(path: str | Path, X: np.ndarray, binary: bool = True) -> None:
    """Write a data matrix as COVSPEC-MAT or CSV."""
    path = Path(path)
    if binary:
        with path.open("wb") as handle:
            write_binary(handle, X)
    else:
        with path.open("w", encoding="utf-8", newline="") as handle:
            write_csv(handle, X)
