"""Reader/writer for the OFDG dataset container wire format.

Independent implementation of the documented format (magic "OFDG", u32
version, u64 header length, UTF-8 JSON header, little-endian float32
payload); this package talks to the dataset tooling only through these
files, never through its internals.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"OFDG"
VERSION = 1


class ContainerError(ValueError):
    pass


def read_container(path) -> tuple[dict, np.ndarray]:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16 or head[:4] != MAGIC:
            raise ContainerError("bad magic: not a dataset container")
        version, hlen = struct.unpack("<IQ", head[4:16])
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version}")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = np.fromfile(fh, dtype="<f4")
    shape = (int(header["count"]),) + tuple(int(s) for s in header["item_shape"])
    if payload.size != np.prod(shape):
        raise ContainerError("truncated or oversized payload")
    return header, payload.reshape(shape)


def write_container(path, header: dict, payload: np.ndarray) -> None:
    payload = np.ascontiguousarray(payload, dtype="<f4")
    header = dict(header)
    header["count"] = int(payload.shape[0])
    header["item_shape"] = list(payload.shape[1:])
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<IQ", VERSION, len(blob)) + blob)
        fh.write(payload.tobytes())
