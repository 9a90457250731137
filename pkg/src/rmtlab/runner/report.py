"""Metric rows, reports and atomic, hashed output files."""

from __future__ import annotations

import hashlib
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

__all__ = [
    "MetricRow",
    "within",
    "at_most",
    "at_least",
    "reported",
    "Report",
    "OutputError",
    "write_outputs",
]

KINDS = ("within", "at_most", "at_least", "report")


@dataclass(frozen=True)
class MetricRow:
    """One measured quantity with its target, tolerance and verdict.

    ``passed`` is None for report-only rows, which never affect the exit code.
    """

    name: str
    value: float
    target: float | None
    tolerance: float | None
    kind: str
    passed: bool | None

    def to_dict(self) -> dict:
        return {"name": self.name, "value": _num(self.value), "target": _num(self.target),
                "tolerance": _num(self.tolerance), "kind": self.kind, "passed": self.passed}


def _num(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else repr(x)


def within(name: str, value: float, target: float, tolerance: float) -> MetricRow:
    ok = math.isfinite(value) and abs(value - target) <= tolerance
    return MetricRow(name, float(value), float(target), float(tolerance), "within", bool(ok))


def at_most(name: str, value: float, bound: float) -> MetricRow:
    ok = math.isfinite(value) and value <= bound
    return MetricRow(name, float(value), float(bound), 0.0, "at_most", bool(ok))


def at_least(name: str, value: float, bound: float) -> MetricRow:
    ok = math.isfinite(value) and value >= bound
    return MetricRow(name, float(value), float(bound), 0.0, "at_least", bool(ok))


def reported(name: str, value: float, target: float | None = None) -> MetricRow:
    return MetricRow(name, float(value), None if target is None else float(target), None, "report", None)


@dataclass
class Report:
    experiment: str
    anchor: str
    seed: int
    config: dict
    config_hash: str
    metrics: list[MetricRow] = field(default_factory=list)
    error: str | None = None
    wall_clock: float = 0.0
    files: list[dict] = field(default_factory=list)
    # file name -> text content, written next to report.json
    artifacts: dict[str, str] = field(default_factory=dict)
    plots: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.error is None and all(r.passed is not False for r in self.metrics)

    def to_dict(self) -> dict:
        """Deterministic content only; wall-clock time goes to timing.json."""
        return {
            "experiment": self.experiment,
            "anchor": self.anchor,
            "seed": self.seed,
            "config": self.config,
            "config_hash": self.config_hash,
            "passed": self.passed,
            "error": self.error,
            "metrics": [r.to_dict() for r in self.metrics],
            "files": self.files,
        }

    def metrics_csv(self) -> str:
        buf = io.StringIO()
        buf.write("name,value,target,tolerance,kind,passed\n")
        for r in self.metrics:
            cells = [r.name, repr(r.value), "" if r.target is None else repr(r.target),
                     "" if r.tolerance is None else repr(r.tolerance), r.kind,
                     "" if r.passed is None else str(r.passed).lower()]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()

    def summary_lines(self) -> list[str]:
        out = []
        for r in self.metrics:
            verdict = {True: "PASS", False: "FAIL", None: "info"}[r.passed]
            target = "" if r.target is None else f" target={r.target:.6g}"
            tol = "" if not r.tolerance else f" tol={r.tolerance:.3g}"
            out.append(f"[{verdict}] {r.name} = {r.value:.6g} ({r.kind}{target}{tol})")
        if self.error:
            out.append(f"[FAIL] error: {self.error}")
        return out


class OutputError(OSError):
    """Writing an output file failed; the message names the path."""


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _entry(root: Path, rel: str, data: bytes, deterministic: bool = True) -> dict:
    try:
        _atomic_write(root / rel, data)
    except OSError as exc:
        raise OutputError(f"cannot write {root / rel}: {exc}") from exc
    return {"path": rel, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data),
            "deterministic": deterministic}


def write_outputs(report: Report, directory: str | Path, plots: bool = False) -> list[dict]:
    """Write all files for ``report`` and return the manifest.

    Data files go first, then report.json (which lists them), then the
    non-deterministic timing.json, then manifest.json (which lists
    everything, report.json included).  Each file
    is written to a temporary name and renamed, so a file only appears in a
    manifest once it is complete.
    """
    root = Path(directory)
    entries = []
    for name in sorted(report.artifacts):
        entries.append(_entry(root, name, report.artifacts[name].encode()))
    if plots:
        for name in sorted(report.plots):
            entries.append(_entry(root, f"plots/{name}", report.plots[name].encode()))
    entries.append(_entry(root, "metrics.csv", report.metrics_csv().encode()))
    report.files = list(entries)
    body = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    entries.append(_entry(root, "report.json", body.encode()))
    # Wall-clock time varies run to run, so it stays out of report.json.
    timing = json.dumps({"wall_clock_seconds": report.wall_clock}, indent=2) + "\n"
    entries.append(_entry(root, "timing.json", timing.encode(), deterministic=False))
    manifest = json.dumps({"files": entries}, indent=2) + "\n"
    _entry(root, "manifest.json", manifest.encode())
    return entries
