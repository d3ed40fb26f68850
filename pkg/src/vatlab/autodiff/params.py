"""Named parameter sets, Adam, and the on-disk parameter container.

Container layout (all integers little-endian)::

    b"VATP"            magic
    uint32             format version
    uint64             header length in bytes
    header             UTF-8 JSON: {"format_version", "meta", "checksum", "entries": [
                           {"name", "dtype", "shape", "offset", "nbytes"}, ...]}
    padding            zero bytes up to an 8-byte boundary
    data               raw little-endian tensor bytes; offsets are relative to here

``checksum`` is the SHA-256 of the data section.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

ParamSet = dict[str, np.ndarray]

MAGIC = b"VATP"
FORMAT_VERSION = 1


class ParamFileError(ValueError):
    """The parameter file is truncated, corrupt or of an unknown version."""


def copy_params(params: Mapping[str, np.ndarray]) -> ParamSet:
    return {k: v.copy() for k, v in params.items()}


def cast_params(params: Mapping[str, np.ndarray], dtype) -> ParamSet:
    return {k: v.astype(dtype) for k, v in params.items()}


def _check_same_layout(a: Mapping[str, np.ndarray], b: Mapping[str, np.ndarray], what: str) -> None:
    if list(a) != list(b):
        raise ValueError(f"{what}: parameter names differ")
    for k in a:
        if a[k].shape != b[k].shape:
            raise ValueError(f"{what}: shape mismatch for {k!r}: {a[k].shape} vs {b[k].shape}")


def soft_update(target: Mapping[str, np.ndarray], online: Mapping[str, np.ndarray], tau: float) -> ParamSet:
    """Return ``tau * online + (1 - tau) * target`` entry by entry."""
    _check_same_layout(target, online, "soft_update")
    if tau == 1.0:
        return copy_params(online)
    if tau == 0.0:
        return copy_params(target)
    return {k: (tau * online[k] + (1.0 - tau) * target[k]).astype(target[k].dtype) for k in target}


def param_count(params: Mapping[str, np.ndarray]) -> int:
    return int(sum(v.size for v in params.values()))


def params_equal(a: Mapping[str, np.ndarray], b: Mapping[str, np.ndarray]) -> bool:
    return list(a) == list(b) and all(
        a[k].dtype == b[k].dtype and a[k].shape == b[k].shape and np.array_equal(a[k], b[k]) for k in a
    )


# ------------------------------------------------------------------- Adam

@dataclass
class AdamState:
    m: ParamSet
    v: ParamSet
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, params: Mapping[str, np.ndarray], **kw) -> AdamState:
        return cls({k: np.zeros_like(p) for k, p in params.items()},
                   {k: np.zeros_like(p) for k, p in params.items()}, **kw)


def adam_step(params: Mapping[str, np.ndarray], grads: Mapping[str, np.ndarray], state: AdamState,
              lr: float) -> tuple[ParamSet, AdamState]:
    """One bias-corrected Adam step. Inputs are not modified."""
    _check_same_layout(params, grads, "adam_step")
    _check_same_layout(params, state.m, "adam_step")
    t = state.t + 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m = b1 * state.m[k] + (1.0 - b1) * g
        v = b2 * state.v[k] + (1.0 - b2) * g * g
        new_p[k] = (p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps)).astype(p.dtype)
        new_m[k], new_v[k] = m, v
    return new_p, AdamState(new_m, new_v, t, b1, b2, state.eps)


# ------------------------------------------------------------------- persistence

def _to_le(a: np.ndarray) -> np.ndarray:
    return np.asarray(a, dtype=a.dtype.newbyteorder("<"), order="C")  # keeps 0-d shapes


def encode_params(params: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> bytes:
    entries, chunks, offset = [], [], 0
    for name, arr in params.items():
        le = _to_le(np.asarray(arr))
        raw = le.tobytes()
        entries.append({"name": name, "dtype": le.dtype.str, "shape": list(le.shape),
                        "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    data = b"".join(chunks)
    header = json.dumps({
        "format_version": FORMAT_VERSION,
        "meta": dict(meta or {}),
        "checksum": hashlib.sha256(data).hexdigest(),
        "entries": entries,
    }, sort_keys=True).encode("utf-8")
    prefix = MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header)) + header
    pad = (-len(prefix)) % 8
    return prefix + b"\0" * pad + data


def decode_params(blob: bytes) -> tuple[ParamSet, dict[str, Any]]:
    """Parse a container; returns ``(params, header)``."""
    if len(blob) < 16 or blob[:4] != MAGIC:
        raise ParamFileError("not a parameter file (bad magic or too short)")
    version, hlen = struct.unpack("<IQ", blob[4:16])
    if version != FORMAT_VERSION:
        raise ParamFileError(f"unsupported format version {version}")
    if 16 + hlen > len(blob):
        raise ParamFileError("truncated header")
    try:
        header = json.loads(blob[16:16 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParamFileError(f"corrupt header: {exc}") from None
    start = 16 + hlen + ((-(16 + hlen)) % 8)
    data = blob[start:]
    total = sum(e["nbytes"] for e in header["entries"])
    if len(data) < total:
        raise ParamFileError(f"truncated data section: expected {total} bytes, found {len(data)}")
    if hashlib.sha256(data[:total]).hexdigest() != header["checksum"]:
        raise ParamFileError("checksum mismatch")
    params: ParamSet = {}
    for e in header["entries"]:
        dt = np.dtype(e["dtype"])
        arr = np.frombuffer(data, dtype=dt, count=e["nbytes"] // dt.itemsize, offset=e["offset"])
        params[e["name"]] = arr.reshape(e["shape"]).astype(dt.newbyteorder("="))
    return params, header


def save_params(path: str | Path, params: Mapping[str, np.ndarray], meta: Mapping[str, Any] | None = None) -> str:
    """Write a container; returns the data checksum."""
    blob = encode_params(params, meta)
    Path(path).write_bytes(blob)
    return json.loads(blob[16:16 + struct.unpack("<Q", blob[8:16])[0]])["checksum"]


def load_params(path: str | Path) -> tuple[ParamSet, dict[str, Any]]:
    return decode_params(Path(path).read_bytes())


def save_bundle(path: str | Path, sets: Mapping[str, Mapping[str, np.ndarray]],
                meta: Mapping[str, Any] | None = None) -> str:
    """Save several named ParamSets into one container, entries prefixed ``<set>/``."""
    flat = {f"{s}/{k}": v for s, params in sets.items() for k, v in params.items()}
    return save_params(path, flat, meta)


def split_bundle(flat: Mapping[str, np.ndarray]) -> dict[str, ParamSet]:
    out: dict[str, ParamSet] = {}
    for key, v in flat.items():
        s, _, k = key.partition("/")
        out.setdefault(s, {})[k] = v
    return out
