"""Versioned binary model container.

Layout (all integers little-endian unsigned 32-bit unless noted):
  magic "SSRM" | format_version | len(config json) | config json bytes
  | len(vocab json) | vocab json bytes | n arrays
  | per array: len(name) | name bytes | ndim | dims... | float32 LE data
The config blob also carries the run manifest so every artifact records how
it was produced.  Reload is byte-exact: save(load(path)) == read(path).
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..codec import Vocabulary
from .config import ModelConfig

MAGIC = b"SSRM"
FORMAT_VERSION = 1


@dataclass
class Model:
    config: ModelConfig
    vocabulary: Vocabulary
    params: dict[str, np.ndarray]
    format_version: int = FORMAT_VERSION
    manifest: dict = field(default_factory=dict)

    def state_bytes(self) -> bytes:
        return save_bytes(self)


def _pack_str(data: bytes) -> bytes:
    return struct.pack("<I", len(data)) + data


def save_bytes(model: Model) -> bytes:
    config_blob = json.dumps(
        {"config": model.config.to_dict(), "manifest": model.manifest}, sort_keys=True
    ).encode("utf-8")
    vocab_blob = json.dumps(model.vocabulary.token_to_id, sort_keys=True).encode("utf-8")
    out = [MAGIC, struct.pack("<I", model.format_version)]
    out.append(_pack_str(config_blob))
    out.append(_pack_str(vocab_blob))
    names = sorted(model.params)
    out.append(struct.pack("<I", len(names)))
    for name in names:
        arr = np.ascontiguousarray(model.params[name], dtype="<f4")
        out.append(_pack_str(name.encode("utf-8")))
        out.append(struct.pack("<I", arr.ndim))
        out.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        out.append(arr.tobytes())
    return b"".join(out)


def save_model(model: Model, path) -> None:
    Path(path).write_bytes(save_bytes(model))


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ValueError("truncated model file")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def blob(self) -> bytes:
        return self.take(self.u32())


def load_bytes(data: bytes) -> Model:
    r = _Reader(data)
    if r.take(4) != MAGIC:
        raise ValueError("not a model file (bad magic)")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {version}")
    config_obj = json.loads(r.blob().decode("utf-8"))
    vocab_obj = json.loads(r.blob().decode("utf-8"))
    n_arrays = r.u32()
    params: dict[str, np.ndarray] = {}
    for _ in range(n_arrays):
        name = r.blob().decode("utf-8")
        ndim = r.u32()
        shape = tuple(r.u32() for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        arr = np.frombuffer(r.take(count * 4), dtype="<f4").reshape(shape).copy()
        params[name] = arr
    if r.pos != len(data):
        raise ValueError("trailing bytes in model file")
    return Model(
        config=ModelConfig.from_dict(config_obj["config"]),
        vocabulary=Vocabulary(dict(vocab_obj)),
        params=params,
        format_version=version,
        manifest=config_obj.get("manifest", {}),
    )


def load_model(path) -> Model:
    return load_bytes(Path(path).read_bytes())
