"""
Checkpoint container:

    b"HGNNCKPT" | version u32 LE | index length u64 LE | index JSON (UTF-8) | payload

The index maps each parameter name to {"shape": [...], "offset": byte offset into the payload};
payloads are raw little-endian float64.
"""

import json
import logging
import struct
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from hgnnmatch.autodiff.params import ParamStore
from hgnnmatch.config import config
from hgnnmatch.errors import DataError

logger = logging.getLogger(__name__)

_HEADER = struct.Struct("<IQ")


def save_checkpoint(store: ParamStore, path: Path) -> Path:
    path = Path(path)
    index: dict[str, dict] = {}
    chunks: list[bytes] = []
    offset = 0
    for name in store:
        payload = store[name].values.astype("<f8").tobytes()
        index[name] = {"shape": list(store[name].shape), "offset": offset}
        chunks.append(payload)
        offset += len(payload)

    index_bytes = json.dumps(index, separators=(",", ":")).encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(config.CHECKPOINT_MAGIC)
        fh.write(_HEADER.pack(config.CHECKPOINT_VERSION, len(index_bytes)))
        fh.write(index_bytes)
        for chunk in chunks:
            fh.write(chunk)

    logger.info("Saved checkpoint with %d tensors (%d bytes payload) to %s", len(index), offset, path)
    return path


def load_checkpoint(path: Path, expected: Iterable[str] | None = None, dtype=np.float64) -> ParamStore:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except FileNotFoundError as err:
        raise DataError(f"Checkpoint not found: {path}") from err

    magic = config.CHECKPOINT_MAGIC
    if blob[: len(magic)] != magic:
        raise DataError(f"{path} is not a checkpoint (bad magic bytes)")
    try:
        version, index_len = _HEADER.unpack_from(blob, len(magic))
    except struct.error as err:
        raise DataError(f"{path}: truncated checkpoint header") from err
    if version != config.CHECKPOINT_VERSION:
        raise DataError(f"{path}: unsupported checkpoint version {version}")

    start = len(magic) + _HEADER.size
    try:
        index = json.loads(blob[start : start + index_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise DataError(f"{path}: corrupt checkpoint index") from err
    payload = memoryview(blob)[start + index_len :]

    store = ParamStore(dtype=dtype)
    for name, meta in index.items():
        shape = tuple(meta["shape"])
        count = int(np.prod(shape)) if shape else 1
        if meta["offset"] + 8 * count > len(payload):
            raise DataError(f"{path}: payload for {name!r} runs past end of file")
        values = np.frombuffer(payload, dtype="<f8", count=count, offset=meta["offset"]).reshape(shape)
        store.add(name, values.astype(dtype))

    if expected is not None:
        expected = set(expected)
        missing = sorted(expected - set(store))
        if missing:
            raise DataError(f"{path}: checkpoint lacks parameters {missing}")
        store.flag_unused(expected)

    logger.info("Loaded checkpoint with %d tensors from %s", len(store), path)
    return store
