"""CSV/JSON writers with a fixed decimal format, and the run manifest."""
from __future__ import annotations

import csv
import datetime as _dt
import json
from pathlib import Path
from typing import Iterable, Sequence

from . import __version__


def fmt(x) -> str:
    """12 significant digits; integers and strings pass through."""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _round_floats(obj):
    if isinstance(obj, float):
        return float(fmt(obj))
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])
    return path


def write_json(path, data: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_round_floats(data), indent=2, sort_keys=True) + "\n")
    return path


def now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


class Manifest:
    """Run manifest, written before any result file and rewritten when the run ends."""

    def __init__(self, out_dir: Path, command: str, config: dict, master_seed):
        self.path = Path(out_dir) / "manifest.json"
        self.data = {
            "command": command,
            "resolved_config": config,
            "master_seed": master_seed,
            "output_dir": str(out_dir),
            "tool_version": __version__,
            "start": now(),
            "end": None,
            "outputs": [],
            "status": "running",
        }

    def write(self) -> None:
        self.path.write_text(json.dumps(self.data, indent=2, sort_keys=True) + "\n")

    def add(self, path) -> Path:
        self.data["outputs"].append(Path(path).name)
        self.write()
        return Path(path)

    def finish(self, status: str = "ok") -> None:
        self.data["end"] = now()
        self.data["status"] = status
        self.write()
