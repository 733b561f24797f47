"""IMAT1: a minimal little-endian float64 matrix file.

Layout: ``b"IMAT1"``, a version byte (1), rows and cols as little-endian
uint32, then ``rows * cols`` little-endian IEEE-754 doubles in row-major order.
"""
import os
import struct
import tempfile

import numpy as np

from ..errors import CorruptFileError, InvalidDataError

MAGIC = b"IMAT1"
VERSION = 1
HEADER = struct.Struct("<5sBII")  # 14 bytes


def encode_matrix(matrix):
    """Bytes of a 2-D finite matrix in IMAT1 format."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise InvalidDataError("only 1-D or 2-D arrays can be stored", shape=list(a.shape))
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.isfinite(a))[0]
        raise InvalidDataError("matrix contains non-finite values", first=bad.tolist())
    if max(a.shape, default=0) > 0xFFFFFFFF:
        raise InvalidDataError("dimension exceeds uint32", shape=list(a.shape))
    return HEADER.pack(MAGIC, VERSION, a.shape[0], a.shape[1]) + a.astype("<f8").tobytes(order="C")


def decode_matrix(data, source="<bytes>"):
    if len(data) < HEADER.size:
        raise CorruptFileError(f"{source}: shorter than the {HEADER.size}-byte header",
                               expected_bytes=HEADER.size, actual_bytes=len(data))
    magic, version, rows, cols = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise CorruptFileError(f"{source}: bad magic {magic!r}")
    if version != VERSION:
        raise CorruptFileError(f"{source}: unsupported version {version}")
    expected = HEADER.size + rows * cols * 8
    if len(data) != expected:
        raise CorruptFileError(f"{source}: payload size mismatch", expected_bytes=expected, actual_bytes=len(data))
    return np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(rows, cols).astype(np.float64)


def atomic_write_bytes(path, data):
    """Write through a temporary file in the same directory, then rename."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_matrix(path, matrix):
    """Store ``matrix`` (1-D arrays become one column). Returns the stored shape."""
    data = encode_matrix(matrix)
    atomic_write_bytes(path, data)
    rows, cols = HEADER.unpack_from(data)[2:]
    return rows, cols


def read_matrix(path):
    with open(path, "rb") as fh:
        return decode_matrix(fh.read(), os.fspath(path))
