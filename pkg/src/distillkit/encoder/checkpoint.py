"""Checkpoint container: JSON manifest plus a little-endian raw payload."""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path

import numpy as np

from distillkit.encoder.models import CheckpointManifest, ModelState, ParameterEntry
from distillkit.errors import DataFormatError
from distillkit.numerics import Tensor

logger = logging.getLogger(__name__)

PAYLOAD_SUFFIX = ".bin"


def payload_path(manifest_path: str | Path) -> Path:
    path = Path(manifest_path)
    return path.with_name(path.name + PAYLOAD_SUFFIX)


def save_checkpoint(state: ModelState, path: str | Path) -> Path:
    """Write ``state`` to ``path`` (manifest) and ``path.bin`` (payload).

    Values are stored bit-exactly in little-endian byte order at the model's
    dtype. Returns the manifest path.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dtype = state.dtype.newbyteorder("<")
    entries: list[ParameterEntry] = []
    digest = hashlib.sha256()
    offset = 0
    payload = payload_path(path)
    with payload.open("wb") as fh:
        for name, tensor in state.params.items():
            raw = np.ascontiguousarray(tensor.data, dtype=dtype).tobytes()
            fh.write(raw)
            digest.update(raw)
            entries.append(ParameterEntry(name=name, shape=list(tensor.shape), offset=offset, nbytes=len(raw)))
            offset += len(raw)

    manifest = CheckpointManifest(
        config=state.config,
        dtype=dtype.str,
        payload=payload.name,
        sha256=digest.hexdigest(),
        head_labels=dict(state.head_labels),
        params=entries,
    )
    path.write_text(manifest.model_dump_json(indent=2), encoding="utf-8")
    logger.info(f"Saved checkpoint {path} ({len(entries)} tensors, {offset:,} bytes)")
    return path


def load_checkpoint(path: str | Path) -> ModelState:
    """Read a checkpoint written by :func:`save_checkpoint`.

    Raises:
        DataFormatError: The manifest is invalid, the payload is missing or
            truncated, or its digest does not match.
    """
    path = Path(path)
    try:
        manifest = CheckpointManifest.model_validate_json(path.read_text(encoding="utf-8"))
    except ValueError as exc:
        raise DataFormatError(path, None, f"invalid checkpoint manifest: {exc}") from exc

    payload = path.with_name(manifest.payload)
    if not payload.exists():
        raise DataFormatError(payload, None, "checkpoint payload is missing")
    raw = payload.read_bytes()
    if hashlib.sha256(raw).hexdigest() != manifest.sha256:
        raise DataFormatError(payload, None, "checkpoint payload digest mismatch")

    dtype = np.dtype(manifest.dtype)
    params: dict[str, Tensor] = {}
    for entry in manifest.params:
        end = entry.offset + entry.nbytes
        if end > len(raw):
            raise DataFormatError(payload, None, f"{entry.name} runs past the end of the payload")
        values = np.frombuffer(raw[entry.offset : end], dtype=dtype).reshape(entry.shape)
        params[entry.name] = Tensor(values.astype(dtype.newbyteorder("="), copy=True), name=entry.name)

    logger.info(f"Loaded checkpoint {path} ({manifest.config.name}, {len(params)} tensors)")
    return ModelState(config=manifest.config, params=params, head_labels=dict(manifest.head_labels))
