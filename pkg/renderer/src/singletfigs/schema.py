"""Input readers for the simulator's documented CSV/JSON formats, with
named-column validation."""
from __future__ import annotations

import csv
import json
from pathlib import Path


class MissingColumnsError(ValueError):
    """Input file lacks required columns; ``columns`` names them."""

    def __init__(self, path, columns):
        self.columns = tuple(columns)
        super().__init__(
            f"{path}: missing required column(s): {', '.join(self.columns)}")


class SpecError(ValueError):
    """Plot spec is malformed."""


def read_csv(path, required: tuple[str, ...]) -> dict[str, list]:
    """Read a delimited file into string columns, checking the header."""
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumnsError(path, required) from None
        missing = [c for c in required if c not in header]
        if missing:
            raise MissingColumnsError(path, missing)
        cols = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                cols[name].append(cell)
    return cols


def floats(column: list[str]) -> list[float]:
    return [float(v) if v not in ("", "nan") else float("nan") for v in column]


def read_json(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


PLOT_KINDS = ("heatmap", "robustness", "bloch", "decay", "comparison")
NORMALIZATIONS = ("absolute", "bound_relative")


def load_plot_spec(path) -> dict:
    """Validate and resolve a plot spec file."""
    path = Path(path)
    spec = read_json(path)
    if not isinstance(spec, dict):
        raise SpecError(f"{path}: spec must be a JSON object")
    kind = spec.get("kind")
    if kind not in PLOT_KINDS:
        raise SpecError(f"{path}: kind must be one of {PLOT_KINDS}, got {kind!r}")
    norm = spec.get("normalization", "absolute")
    if norm not in NORMALIZATIONS:
        raise SpecError(f"{path}: normalization must be one of "
                        f"{NORMALIZATIONS}, got {norm!r}")
    inputs = spec.get("inputs")
    if not isinstance(inputs, dict) or "csv" not in inputs:
        raise SpecError(f"{path}: inputs.csv is required")
    output = spec.get("output")
    if not output:
        raise SpecError(f"{path}: output image path is required")
    base = path.parent

    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p

    resolved = {k: resolve(v) for k, v in inputs.items()}
    for key, p in resolved.items():
        if not p.exists():
            raise SpecError(f"{path}: input {key} does not exist: {p}")
    return {
        "kind": kind,
        "normalization": norm,
        "inputs": resolved,
        "output": resolve(output),
        "title": spec.get("title", ""),
    }
