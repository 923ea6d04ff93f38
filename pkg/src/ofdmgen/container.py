"""Binary dataset container: magic, version, JSON header, float32 payload.

Layout: ``b"OFDG"`` | u32 version (LE) | u64 header length (LE) | UTF-8 JSON
header | payload of little-endian float32.  The header records everything
needed to regenerate and reinterpret the payload: the waveform spec, count,
seed, representation ("raw" or "stft"), per-item shape, and scaling
parameters when the payload is scaled.

Raw payload items are (length, 2) I/Q pairs, i.e. interleaved I/Q on disk;
STFT items are (2, freq, frames) real/imaginary channel grids.
"""

from __future__ import annotations

import json
import struct

import numpy as np

__all__ = [
    "ContainerError",
    "MAGIC",
    "VERSION",
    "complex_to_payload",
    "payload_to_complex",
    "read_container",
    "read_header",
    "write_container",
    "ContainerWriter",
]

MAGIC = b"OFDG"
VERSION = 1


class ContainerError(ValueError):
    """Malformed or truncated dataset container."""


def _encode_header(header: dict) -> bytes:
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    return MAGIC + struct.pack("<IQ", VERSION, len(blob)) + blob


class ContainerWriter:
    """Streamed writer: header first, then payload chunks in order."""

    def __init__(self, path, header: dict):
        self.header = dict(header)
        self._expected = int(self.header["count"]) * int(
            np.prod(self.header["item_shape"])
        )
        self._written = 0
        self._fh = open(path, "wb")
        self._fh.write(_encode_header(self.header))

    def append(self, chunk: np.ndarray) -> None:
        chunk = np.ascontiguousarray(chunk, dtype="<f4")
        self._written += chunk.size
        if self._written > self._expected:
            raise ContainerError("payload exceeds count * item_shape")
        self._fh.write(chunk.tobytes())

    def close(self) -> None:
        try:
            if self._written != self._expected:
                raise ContainerError(
                    f"payload incomplete: wrote {self._written} of {self._expected} values"
                )
        finally:
            self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def write_container(path, header: dict, payload: np.ndarray) -> None:
    """Write a complete container in one call."""
    payload = np.ascontiguousarray(payload, dtype="<f4")
    header = dict(header)
    header.setdefault("count", payload.shape[0])
    header.setdefault("item_shape", list(payload.shape[1:]))
    with ContainerWriter(path, header) as w:
        w.append(payload)


def read_header(path) -> tuple[dict, int]:
    """Parse and validate the header; returns (header, payload_offset)."""
    with open(path, "rb") as fh:
        prefix = fh.read(16)
        if len(prefix) < 16 or prefix[:4] != MAGIC:
            raise ContainerError("bad magic: not a dataset container")
        version, hlen = struct.unpack("<IQ", prefix[4:16])
        if version != VERSION:
            raise ContainerError(f"unsupported container version {version}")
        blob = fh.read(hlen)
        if len(blob) != hlen:
            raise ContainerError("truncated header")
        try:
            header = json.loads(blob.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ContainerError(f"unreadable header: {exc}") from exc
    for key in ("count", "item_shape", "representation"):
        if key not in header:
            raise ContainerError(f"header missing required key {key!r}")
    return header, 16 + hlen


def read_container(path, mmap: bool = True) -> tuple[dict, np.ndarray]:
    """Read a container; payload returned as (count, *item_shape) float32."""
    header, offset = read_header(path)
    shape = (int(header["count"]),) + tuple(int(s) for s in header["item_shape"])
    expected = int(np.prod(shape))
    if mmap:
        try:
            data = np.memmap(path, dtype="<f4", mode="r", offset=offset)
        except ValueError as exc:
            raise ContainerError(f"unreadable payload: {exc}") from exc
    else:
        with open(path, "rb") as fh:
            fh.seek(offset)
            data = np.fromfile(fh, dtype="<f4")
    if data.size != expected:
        raise ContainerError(
            f"payload has {data.size} values, header promises {expected}"
        )
    return header, data.reshape(shape)


def payload_to_complex(payload: np.ndarray) -> np.ndarray:
    """(…, 2) float32 I/Q pairs -> complex128 array."""
    payload = np.asarray(payload)
    if payload.shape[-1] != 2:
        raise ContainerError("expected trailing I/Q axis of size 2")
    return payload[..., 0].astype(np.float64) + 1j * payload[..., 1].astype(np.float64)


def complex_to_payload(waveforms: np.ndarray) -> np.ndarray:
    """Complex array -> (…, 2) float32 I/Q pairs."""
    waveforms = np.asarray(waveforms)
    return np.stack([waveforms.real, waveforms.imag], axis=-1).astype(np.float32)
