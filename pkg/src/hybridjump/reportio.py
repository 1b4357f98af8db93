"""CSV and JSONL emission with reproducibility headers.

Every file starts with a comment row carrying the sha256 of the canonical
config JSON and the library version; floats are written with the shortest
round-trip representation (Python repr).
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def config_hash(config: dict) -> str:
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def header_line(config: dict) -> str:
    return f"# config_sha256={config_hash(config)} version={__version__}"


def write_csv(path, config: dict, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(header_line(config) + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, config: dict, payload: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = {"_meta": {"config_sha256": config_hash(config), "version": __version__}}
    out.update(payload)
    with open(path, "w") as fh:
        json.dump(out, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_jsonl(path, config: dict, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(json.dumps({"_meta": {"config_sha256": config_hash(config),
                                       "version": __version__}}) + "\n")
        for rec in records:
            fh.write(json.dumps(rec) + "\n")
