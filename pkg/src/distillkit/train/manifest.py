"""Run manifests: resolved configuration, seed and artifact digests."""

from __future__ import annotations

import hashlib
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from pydantic import BaseModel, Field

from distillkit import __version__

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class RunManifest(BaseModel):
    """Everything needed to re-run a command and check its outputs."""

    model_config = {"extra": "forbid"}

    command: str = Field(..., description="Subcommand that produced the outputs")
    version: str = Field(__version__, description="distillkit version")
    seed: int | None = None
    config: dict[str, Any] = Field(default_factory=dict, description="Resolved configuration")
    artifacts: dict[str, str] = Field(default_factory=dict, description="File name -> sha256 digest")


def sha256_file(path: str | Path) -> str:
    """SHA-256 of a file's bytes as ``sha256:<hex>``."""
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return f"sha256:{digest.hexdigest()}"


def write_run_manifest(
    out_dir: str | Path,
    command: str,
    config: BaseModel | dict[str, Any],
    seed: int | None,
    artifacts: Iterable[str | Path],
) -> Path:
    """Write ``out_dir/manifest.json``; artifact names are relative to ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    resolved = config.model_dump(mode="json") if isinstance(config, BaseModel) else dict(config)
    digests = {}
    for artifact in artifacts:
        path = Path(artifact)
        try:
            name = path.relative_to(out).as_posix()
        except ValueError:
            name = path.as_posix()
        digests[name] = sha256_file(path)
    manifest = RunManifest(command=command, seed=seed, config=resolved, artifacts=dict(sorted(digests.items())))
    path = out / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"Wrote manifest {path} ({len(digests)} artifacts)")
    return path
