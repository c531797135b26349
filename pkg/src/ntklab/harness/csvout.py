"""CSV serialization with a ``#``-prefixed provenance header."""

from __future__ import annotations

import csv
import io
import math
import subprocess
from pathlib import Path
from typing import IO, Any

import numpy as np

from ntklab import __version__
from ntklab.harness.experiments import SweepResult

SAMPLER = f"numpy.random.PCG64 via default_rng, standard_normal (numpy {np.__version__})"


def version_string() -> str:
    """Package version plus ``git describe`` of the source tree when available."""
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5, check=True,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        desc = ""
    return f"ntklab {__version__}" + (f" ({desc})" if desc else "")


def format_value(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return format(v, ".17g")
    return str(v)


def _echo(v: Any) -> str:
    if isinstance(v, list):
        return "[" + ", ".join(_echo(x) for x in v) + "]"
    if isinstance(v, float):
        return repr(v)
    return format_value(v)


def header_lines(result: SweepResult, version: str | None = None) -> list[str]:
    cfg = result.config
    lines = [
        f"experiment: {result.kind}",
        f"version: {version if version is not None else version_string()}",
        f"sampler: {SAMPLER}",
        f"seed: {cfg.seed}",
        "seed derivation: numpy SeedSequence(master_seed, spawn_key=(stream, cell, sample))",
        f"bootstrap resamples: {cfg.bootstrap}",
    ]
    lines += [f"config.{k}: {_echo(v)}" for k, v in cfg.as_dict().items()]
    lines += [f"note: {n}" for n in result.notes]
    return ["# " + line for line in lines]


def write_csv(result: SweepResult, dest: str | Path | IO[str] | None = None, version: str | None = None) -> str:
    """Serialize ``result``; writes to ``dest`` if given and always returns the text."""
    buf = io.StringIO()
    for line in header_lines(result, version):
        buf.write(line + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(result.columns)
    for row in result.rows:
        writer.writerow([format_value(row[c]) for c in result.columns])
    text = buf.getvalue()
    if dest is not None:
        if hasattr(dest, "write"):
            dest.write(text)
        else:
            Path(dest).write_text(text, encoding="utf-8")
    return text


def read_csv(path: str | Path) -> tuple[list[str], list[dict[str, str]]]:
    """Header comment lines (without ``# ``) and data rows as string dicts."""
    header = []
    body = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                header.append(line[2:].rstrip("\n"))
            else:
                body.append(line)
    return header, list(csv.DictReader(body))
