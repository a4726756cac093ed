"""Self-describing, byte-deterministic checkpoint container.

Layout (all header lines ASCII, payloads raw little-endian bytes)::

    sftmn-ckpt-1\n
    config <nbytes>\n
    <config payload: "key=value\n" lines, keys sorted>
    tensor <name> <dtype> <shape> <nbytes>\n
    <tensor payload>
    ...                                (tensors sorted by name)
    end\n

Shapes are comma-separated dims, "-" for 0-d tensors. Identical model
state and config always produce identical bytes; nothing time- or
path-dependent is stored (a zip-based container would embed timestamps).
"""

from __future__ import annotations

import os
from typing import Mapping

import numpy as np

FORMAT_VERSION = "sftmn-ckpt-1"


class CheckpointError(ValueError):
    """Malformed checkpoint file or unserializable content."""


def _encode_config(config: Mapping[str, str]) -> bytes:
    lines = []
    for key in sorted(config):
        value = config[key]
        if not key or any(c.isspace() for c in key) or "=" in key:
            raise CheckpointError(f"bad config key {key!r}: keys must be non-empty "
                                  f"with no whitespace or '='")
        if "\n" in value:
            raise CheckpointError(f"config value for {key!r} contains a newline")
        lines.append(f"{key}={value}\n")
    return "".join(lines).encode("utf-8")


def _decode_config(payload: bytes) -> dict[str, str]:
    config: dict[str, str] = {}
    for line in payload.decode("utf-8").splitlines():
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"bad config line {line!r}")
        config[key] = value
    return config


def _to_array(value) -> np.ndarray:
    if hasattr(value, "detach"):
        value = value.detach().cpu().numpy()
    arr = np.asarray(value)
    # normalize to a little-endian contiguous buffer; ascontiguousarray
    # promotes 0-d to (1,), so restore the original shape afterwards
    dtype = arr.dtype.newbyteorder("<")
    return np.ascontiguousarray(arr, dtype=dtype).reshape(arr.shape)


def save_checkpoint(path: str | os.PathLike, config: Mapping[str, str],
                    tensors: Mapping[str, "np.ndarray"]) -> None:
    """Write config plus named tensors. Tensor values may be torch or numpy."""
    config_payload = _encode_config(config)
    with open(path, "wb") as fh:
        fh.write(f"{FORMAT_VERSION}\n".encode("ascii"))
        fh.write(f"config {len(config_payload)}\n".encode("ascii"))
        fh.write(config_payload)
        for name in sorted(tensors):
            if not name or any(c.isspace() for c in name):
                raise CheckpointError(f"bad tensor name {name!r}")
            arr = _to_array(tensors[name])
            shape = ",".join(str(d) for d in arr.shape) if arr.ndim else "-"
            fh.write(f"tensor {name} {arr.dtype.str} {shape} {arr.nbytes}\n"
                     .encode("ascii"))
            fh.write(arr.tobytes())
        fh.write(b"end\n")


def load_checkpoint(path: str | os.PathLike) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    """Read back (config, tensors). Raises CheckpointError on malformed input."""
    with open(path, "rb") as fh:
        first = fh.readline().decode("ascii", errors="replace").rstrip("\n")
        if first != FORMAT_VERSION:
            raise CheckpointError(f"{path}: not a {FORMAT_VERSION} file "
                                  f"(first line {first!r})")
        header = fh.readline().decode("ascii", errors="replace").split()
        if len(header) != 2 or header[0] != "config":
            raise CheckpointError(f"{path}: expected config header, got {header}")
        config_payload = fh.read(int(header[1]))
        if len(config_payload) != int(header[1]):
            raise CheckpointError(f"{path}: truncated config payload")
        config = _decode_config(config_payload)

        tensors: dict[str, np.ndarray] = {}
        while True:
            line = fh.readline().decode("ascii", errors="replace")
            if line == "end\n":
                break
            if not line:
                raise CheckpointError(f"{path}: missing end marker")
            parts = line.split()
            if len(parts) != 5 or parts[0] != "tensor":
                raise CheckpointError(f"{path}: bad tensor header {line!r}")
            _, name, dtype_str, shape_str, nbytes_str = parts
            nbytes = int(nbytes_str)
            payload = fh.read(nbytes)
            if len(payload) != nbytes:
                raise CheckpointError(f"{path}: truncated payload for tensor {name!r}")
            shape = () if shape_str == "-" else tuple(int(d) for d in shape_str.split(","))
            arr = np.frombuffer(payload, dtype=np.dtype(dtype_str))
            expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
            if arr.size != expected:
                raise CheckpointError(f"{path}: tensor {name!r} holds {arr.size} values, "
                                      f"shape {shape} needs {expected}")
            tensors[name] = arr.reshape(shape).copy()
        return config, tensors
