"""
Run-configuration ingestion and artifact writers for the command line.

Floats are written with ``repr`` (shortest round-trip form) so repeated
runs with the same configuration produce byte-identical files.
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from ..core.exceptions import ConfigurationError
from ..core.models import BaselineMode, RunConfig
from ..core.netmodel import Allocation, NetworkArrays
from ..utils.config import get_config_value, load_config, merge_configs

SERIES_FIELDS = ("axis", "mode", "sum_rate_bps", "iters", "max_residual", "wall_ms")
ALLOCATION_FIELDS = ("link", "cluster", "user", "bandwidth_hz", "power_w", "uav_x", "uav_y")
MAX_EXTENDS_DEPTH = 8


def _dotted(loc: Iterable[Any]) -> str:
    return ".".join(str(part) for part in loc)


def _load_with_base(path: Path, depth: int = 0) -> Dict[str, Any]:
    data = load_config(path)
    base = data.pop("extends", None)
    if base is None:
        return data
    if not isinstance(base, str):
        raise ConfigurationError("'extends' must be a file path", config_key="extends",
                                 config_file=str(path))
    if depth >= MAX_EXTENDS_DEPTH:
        raise ConfigurationError(f"'extends' chain deeper than {MAX_EXTENDS_DEPTH} files",
                                 config_key="extends", config_file=str(path))
    return merge_configs(_load_with_base(path.parent / base, depth + 1), data)


def read_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Load and validate a run configuration; validation errors name the dotted field.

    A top-level ``"extends": "other.json"`` (relative to the file) loads that
    file first and merges this one over it section by section.
    """
    data = _load_with_base(Path(path))
    try:
        return RunConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        key = _dotted(first.get("loc", ()))
        got = get_config_value(data, key)
        suffix = f" (got {got!r})" if got is not None else ""
        raise ConfigurationError(f"{key}: {first.get('msg', 'invalid value')}{suffix}",
                                 config_key=key, config_file=str(path)) from exc


def parse_modes(text: Optional[str]) -> Optional[List[BaselineMode]]:
    """Comma-separated mode list such as ``joint,fixed-b``."""
    if not text:
        return None
    modes = []
    for item in text.split(","):
        item = item.strip()
        try:
            modes.append(BaselineMode(item))
        except ValueError as exc:
            choices = ", ".join(m.value for m in BaselineMode)
            raise ConfigurationError(f"unknown mode '{item}' (choose from {choices})",
                                     config_key="modes") from exc
    return modes


def apply_overrides(config: RunConfig, seed: Optional[int] = None,
                    modes: Optional[Sequence[BaselineMode]] = None,
                    out: Optional[str] = None, fmt: Optional[str] = None) -> RunConfig:
    """Command-line flags take precedence over the file."""
    update: Dict[str, Any] = {}
    if seed is not None:
        update["scenario"] = config.scenario.model_copy(update={"seed": seed})
        update["solver"] = config.solver.model_copy(update={"seed": seed})
    if modes:
        update["modes"] = list(modes)
    if out is not None or fmt is not None:
        output = {}
        if out is not None:
            output["directory"] = out
        if fmt is not None:
            output["format"] = fmt
        update["output"] = config.output.model_copy(update=output)
    return config.model_copy(update=update) if update else config


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _jsonable(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, np.generic):
        return value.item()
    return value


def write_json(data: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_jsonable(data), f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def write_series(rows: Sequence[Mapping[str, Any]], out_dir: Union[str, Path],
                 fmt: str = "csv", name: str = "series",
                 fields: Sequence[str] = SERIES_FIELDS) -> Path:
    """Write result rows as ``<name>.csv`` (only ``fields``) or ``<name>.json`` (every key)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        return write_json(list(rows), out_dir / f"{name}.json")
    path = out_dir / f"{name}.csv"
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([format_value(row[field]) for field in fields])
    return path


def allocation_rows(allocation: Allocation, arrays: NetworkArrays) -> List[Dict[str, Any]]:
    """One row per satellite hop (``link=s2r``) and per downlink (``link=user``)."""
    rows: List[Dict[str, Any]] = []
    for n in range(arrays.n_clusters):
        rows.append({
            "link": "s2r", "cluster": n, "user": -1,
            "bandwidth_hz": allocation.b_s2r[n], "power_w": allocation.p_s2r[n],
            "uav_x": allocation.uav_xy[n, 0], "uav_y": allocation.uav_xy[n, 1],
        })
    for u in range(arrays.n_users):
        n = int(arrays.user_cluster[u])
        rows.append({
            "link": "user", "cluster": n, "user": u,
            "bandwidth_hz": allocation.b_user[u], "power_w": allocation.p_user[u],
            "uav_x": allocation.uav_xy[n, 0], "uav_y": allocation.uav_xy[n, 1],
        })
    return rows


def write_allocation(allocation: Allocation, arrays: NetworkArrays,
                     out_dir: Union[str, Path], name: str = "allocation") -> Path:
    return write_series(allocation_rows(allocation, arrays), out_dir, "csv", name, ALLOCATION_FIELDS)


def read_allocation(path: Union[str, Path], arrays: NetworkArrays) -> Allocation:
    """Rebuild an allocation from ``allocation.csv``."""
    alloc = Allocation.zeros(arrays)
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            n = int(row["cluster"])
            if row["link"] == "s2r":
                alloc.b_s2r[n] = float(row["bandwidth_hz"])
                alloc.p_s2r[n] = float(row["power_w"])
                alloc.uav_xy[n] = [float(row["uav_x"]), float(row["uav_y"])]
            else:
                u = int(row["user"])
                alloc.b_user[u] = float(row["bandwidth_hz"])
                alloc.p_user[u] = float(row["power_w"])
    return alloc
