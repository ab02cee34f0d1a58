"""STRM binary tensor files and +1/-1 label files.

STRM layout (all integers little-endian uint32)::

    offset 0   magic  b"STRM"
    offset 4   version (1)
    offset 8   ndims   (3)
    offset 12  I1, I2, I3
    offset 24  count M
    offset 28  payload: M * I1*I2*I3 little-endian float64, tube-contiguous,
               tensors concatenated in sample order
"""
import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .tensor_core import LabeledDataset

MAGIC = b"STRM"
VERSION = 1
_HEADER = struct.Struct("<4s6I")
HEADER_SIZE = _HEADER.size


class FormatError(ValueError):
    """Malformed STRM or label file."""


def _atomic_write(path, data):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def encode_tensors(tensors):
    tensors = np.asarray(tensors, dtype=np.float64)
    if tensors.ndim == 3:
        tensors = tensors[None]
    if tensors.ndim != 4:
        raise ValueError(f"expected (M, I1, I2, I3) tensors, got {tensors.shape}")
    m, i1, i2, i3 = tensors.shape
    header = _HEADER.pack(MAGIC, VERSION, 3, i1, i2, i3, m)
    return header + tensors.astype("<f8").tobytes(order="C")


def write_tensors(path, tensors):
    _atomic_write(path, encode_tensors(tensors))


def read_tensors(path):
    """Read a STRM file into an ``(M, I1, I2, I3)`` array.

    The header is validated, and the file length checked against it, before
    any payload is read.
    """
    path = Path(path)
    size = path.stat().st_size
    with open(path, "rb") as fh:
        head = fh.read(HEADER_SIZE)
        if len(head) < HEADER_SIZE:
            raise FormatError(
                f"{path}: header truncated at byte {len(head)}, need {HEADER_SIZE}"
            )
        magic, version, ndims, i1, i2, i3, m = _HEADER.unpack(head)
        if magic != MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r} at byte 0")
        if version != VERSION:
            raise FormatError(f"{path}: unsupported version {version} at byte 4")
        if ndims != 3:
            raise FormatError(f"{path}: ndims must be 3, got {ndims} at byte 8")
        if min(i1, i2, i3) == 0:
            raise FormatError(f"{path}: zero dimension in ({i1}, {i2}, {i3}) at byte 12")
        expected = HEADER_SIZE + m * i1 * i2 * i3 * 8
        if size != expected:
            raise FormatError(
                f"{path}: file is {size} bytes, expected {expected} "
                f"for {m} tensors of {i1}x{i2}x{i3}"
            )
        payload = np.frombuffer(fh.read(), dtype="<f8")
    tensors = payload.astype(np.float64).reshape(m, i1, i2, i3)
    if not np.isfinite(tensors).all():
        bad = int(np.flatnonzero(~np.isfinite(tensors.ravel()))[0])
        raise FormatError(f"{path}: non-finite value at byte {HEADER_SIZE + 8 * bad}")
    return tensors


def encode_labels(labels):
    return "".join("+1\n" if int(v) == 1 else "-1\n" for v in labels).encode()


def write_labels(path, labels):
    labels = np.asarray(labels)
    if not np.isin(labels, (-1, 1)).all():
        raise ValueError("labels must be -1 or +1")
    _atomic_write(path, encode_labels(labels))


def read_labels(path):
    labels = []
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            token = line.rstrip("\r\n")
            if token == "+1":
                labels.append(1)
            elif token == "-1":
                labels.append(-1)
            else:
                raise FormatError(f"{path}: line {lineno}: invalid label {token!r}")
    return np.array(labels, dtype=np.int64)


def dataset_paths(prefix):
    prefix = str(prefix)
    return Path(prefix + ".strm"), Path(prefix + ".labels")


def read_dataset(tensor_path, labels_path):
    samples = read_tensors(tensor_path)
    labels = read_labels(labels_path)
    if labels.size != samples.shape[0]:
        raise FormatError(
            f"{labels_path}: {labels.size} labels for {samples.shape[0]} tensors"
        )
    return LabeledDataset(samples, labels)


def write_dataset(dataset, tensor_path, labels_path):
    write_tensors(tensor_path, dataset.samples)
    write_labels(labels_path, dataset.labels)
