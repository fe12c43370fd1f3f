"""Run configuration files and dotted-key overrides."""

from __future__ import annotations

import json
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Any

from distillkit.train.models import RunConfig

logger = logging.getLogger(__name__)


def parse_override(text: str) -> tuple[list[str], Any]:
    """``a.b=value`` -> (["a", "b"], value); the value is JSON when it parses, else a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key.strip():
        raise ValueError(f"override {text!r} is not of the form key=value")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip().split("."), value


def apply_overrides(raw: dict[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Set every dotted key in a copy of ``raw``; intermediate tables are created."""
    result = json.loads(json.dumps(raw))
    for text in overrides:
        path, value = parse_override(text)
        node = result
        for part in path[:-1]:
            child = node.get(part)
            if child is None:
                child = node[part] = {}
            elif not isinstance(child, dict):
                raise ValueError(f"override {text!r}: {part!r} is not a table")
            node = child
        node[path[-1]] = value
    return result


def load_run_config(path: str | Path | None, overrides: Iterable[str] = ()) -> RunConfig:
    """Read a JSON run config (or start from defaults) and apply overrides.

    Raises:
        FileNotFoundError: ``path`` does not exist.
        pydantic.ValidationError: The result has unknown keys or invalid values.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{path}: run config must be a JSON object")
    config = RunConfig.model_validate(apply_overrides(raw, overrides))
    logger.debug(f"Resolved run config: {config.model_dump_json()}")
    return config


def dump_run_config(config: RunConfig) -> str:
    return config.model_dump_json(indent=2)
