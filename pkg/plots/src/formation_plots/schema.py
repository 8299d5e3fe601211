"""Readers for the simulator's trace CSV and group summary JSON files."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

TRACE_COLUMNS = (
    "run",
    "cycle",
    "slave",
    "ex_m",
    "ey_m",
    "etheta_rad",
    "pos_err_m",
    "ang_err_deg",
    "delivered",
)

SUMMARY_CONFIG_KEYS = (
    "config",
    "max_abs_pos_err_m",
    "max_abs_ang_err_deg",
    "selected_cycles",
    "samples",
    "means",
)


class SchemaError(Exception):
    """Input file does not match the documented schema."""


def read_trace(path) -> dict[str, np.ndarray]:
    """Load a trace CSV into column arrays, validating the exact header."""
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
    columns = tuple(header.split(","))
    for required in TRACE_COLUMNS:
        if required not in columns:
            raise SchemaError(f"{path.name}: missing column '{required}'")
    for extra in columns:
        if extra not in TRACE_COLUMNS:
            raise SchemaError(f"{path.name}: unexpected column '{extra}'")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(columns):
        raise SchemaError(f"{path.name}: rows do not match the header width")
    return {name: data[:, i] for i, name in enumerate(columns)}


def read_summary(path) -> dict:
    """Load a group summary JSON, validating the per-config keys."""
    path = Path(path)
    with open(path) as fh:
        payload = json.load(fh)
    if "configs" not in payload:
        raise SchemaError(f"{path.name}: missing key 'configs'")
    for entry in payload["configs"]:
        for key in SUMMARY_CONFIG_KEYS:
            if key not in entry:
                raise SchemaError(f"{path.name}: config entry missing key '{key}'")
    return payload
