"""
Output writers for CLI runs.

Each writer records (name, format, row count) so the run manifest can list
every emitted file. CSV output is fixed to ``\\n`` line endings and full float
precision so reruns are byte-identical.
"""

import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from enum import Enum
from pathlib import Path

import numpy as np
import pandas as pd

from core.utils.logger import debug

MANIFEST_NAME = "manifest.json"


def to_jsonable(obj):
    """Convert dataclasses, enums, numpy scalars and non-finite floats for json.dump."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


@dataclass
class OutputWriter:
    """Writes files into one output directory and remembers what it wrote."""
    output_dir: Path
    emitted_files: list = field(default_factory=list)

    def __post_init__(self):
        self.output_dir = Path(self.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)

    def _record(self, name, fmt, rows):
        self.emitted_files.append((name, fmt, int(rows)))
        debug(f"Wrote {name} ({rows} rows)")
        return rows

    def write_csv(self, name, frame):
        if not isinstance(frame, pd.DataFrame):
            frame = pd.DataFrame(frame)
        frame.to_csv(self.output_dir / name, index=False, lineterminator="\n",
                     float_format="%.12g")
        return self._record(name, "csv", len(frame))

    def write_json(self, name, data):
        payload = to_jsonable(data)
        with open(self.output_dir / name, "w", encoding="utf-8", newline="\n") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
        rows = len(payload) if isinstance(payload, list) else 1
        return self._record(name, "json", rows)

    def write_text(self, name, text):
        if not text.endswith("\n"):
            text += "\n"
        with open(self.output_dir / name, "w", encoding="utf-8", newline="\n") as f:
            f.write(text)
        return self._record(name, "text", text.count("\n"))

    def write_manifest(self, manifest):
        """Write the manifest; must be the last file of a run."""
        with open(self.output_dir / MANIFEST_NAME, "w", encoding="utf-8", newline="\n") as f:
            json.dump(to_jsonable(manifest), f, indent=2, sort_keys=True)
            f.write("\n")
        return self.output_dir / MANIFEST_NAME
