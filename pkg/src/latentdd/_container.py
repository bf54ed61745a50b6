"""Versioned binary container shared by every on-disk artifact.

Layout::

    LATENTDD <kind> <version>\\n
    <json header, one line, sorted keys>\\n
    <raw little-endian array bytes, concatenated in header order>

The JSON header carries user metadata plus an ``arrays`` list of
``[name, dtype, shape]`` triples. Output is byte-for-byte deterministic.
"""
import json
import os

import numpy as np

from .errors import FormatError

MAGIC = b"LATENTDD"


def write_container(path, kind, version, meta, arrays):
    specs = []
    blobs = []
    for name, arr in arrays.items():
        arr = np.ascontiguousarray(arr)
        if arr.dtype.kind == "f":
            arr = arr.astype("<f8")
        elif arr.dtype.kind in "iub":
            arr = arr.astype("<i8")
        else:
            raise TypeError(f"unsupported dtype for {name}: {arr.dtype}")
        specs.append([name, arr.dtype.str, list(arr.shape)])
        blobs.append(arr.tobytes(order="C"))
    header = dict(meta)
    header["arrays"] = specs
    line = json.dumps(header, sort_keys=True, separators=(",", ":"))
    with open(path, "wb") as fh:
        fh.write(MAGIC + f" {kind} {version}\n".encode("ascii"))
        fh.write(line.encode("utf-8") + b"\n")
        for blob in blobs:
            fh.write(blob)


def read_container(path, kind, version):
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        first, rest = data.split(b"\n", 1)
        line, payload = rest.split(b"\n", 1)
        magic, got_kind, got_version = first.decode("ascii").split(" ")
        header = json.loads(line.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as exc:
        raise FormatError(f"{path}: unreadable header") from exc
    if magic.encode("ascii") != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if got_kind != kind:
        raise FormatError(f"{path}: expected a {kind} file, found {got_kind}")
    if int(got_version) != version:
        raise FormatError(
            f"{path}: format version {got_version} unsupported (expected {version})")
    arrays = {}
    offset = 0
    try:
        for name, dtype, shape in header.pop("arrays"):
            dt = np.dtype(dtype)
            count = int(np.prod(shape)) if shape else 1
            nbytes = count * dt.itemsize
            chunk = payload[offset:offset + nbytes]
            if len(chunk) != nbytes:
                raise FormatError(f"{path}: truncated array {name}")
            arrays[name] = np.frombuffer(chunk, dtype=dt).reshape(shape).copy()
            offset += nbytes
    except (KeyError, TypeError) as exc:
        raise FormatError(f"{path}: malformed array table") from exc
    if offset != len(payload):
        raise FormatError(f"{path}: {len(payload) - offset} trailing bytes")
    return header, arrays


def fmt_float(v):
    """Shortest round-tripping text for a float (numpy scalars included)."""
    return repr(float(v))
