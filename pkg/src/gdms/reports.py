"""Run reports: deterministic JSON/CSV emission with exactness flags."""

from __future__ import annotations

import json
import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy
import scipy


def exact(value, tolerance: float | None = None) -> dict:
    """An exactly computed (or certified-tolerance) numeric result."""
    out = {"value": _plain(value), "kind": "exact"}
    if tolerance is not None:
        out["tolerance"] = tolerance
    return out


def estimate(value, lo, hi, **diagnostics) -> dict:
    """A finite-data estimate; always carries its bracket."""
    out = {
        "value": _plain(value),
        "kind": "estimate",
        "bracket": [_plain(lo), _plain(hi)],
    }
    out.update({k: _plain(v) for k, v in diagnostics.items()})
    return out


def _plain(x):
    """Recursively convert numpy scalars/arrays for JSON emission."""
    if isinstance(x, (numpy.floating, numpy.integer)):
        return x.item()
    if isinstance(x, numpy.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, float) and x != x:  # NaN is not valid strict JSON
        return None
    return x


@dataclass
class RunReport:
    """One command's full output: config echo, results, versions, timing.

    Payloads are byte-identical across reruns of the same config except for
    the wall-time field, which consumers strip before comparing.
    """

    command: str
    config: dict
    results: dict = field(default_factory=dict)
    started: float = field(default_factory=time.perf_counter)

    def finalize(self) -> dict:
        return {
            "command": self.command,
            "config": _plain(self.config),
            "results": _plain(self.results),
            "versions": {
                "gdms": "0.1.0",
                "numpy": numpy.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "wall_time_s": time.perf_counter() - self.started,
        }

    def write(self, outdir: Path) -> Path:
        outdir.mkdir(parents=True, exist_ok=True)
        path = outdir / "report.json"
        path.write_text(
            json.dumps(self.finalize(), indent=2, sort_keys=True) + "\n"
        )
        return path


def write_csv(path: Path, header: list[str], rows) -> None:
    """Minimal deterministic CSV: repr-formatted floats, no quoting needed."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(x) for x in row) + "\n")


def _cell(x) -> str:
    if isinstance(x, float):
        return repr(x)
    if isinstance(x, (numpy.floating,)):
        return repr(float(x))
    if isinstance(x, (numpy.integer,)):
        return str(int(x))
    return str(x)
