"""File formats: CSV datasets, JSON run configurations and report bundles.

Datasets are RFC-4180 CSV files with a header row. Configurations and
reports are JSON objects; reports are written with sorted keys and no
timestamps so that identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import EmptyAfterFiltering, InvalidArgument, ParseError
from .regression import Dataset

log = logging.getLogger(__name__)

MISSING = frozenset({"", "na", "nan", "n/a", "null", "."})


@dataclass(frozen=True)
class Schema:
    """Column roles. ``candidates=None`` means every column not otherwise used."""

    target: str
    controls: tuple = ()
    candidates: Optional[tuple] = None


@dataclass(frozen=True)
class LoadReport:
    rows_read: int
    rows_dropped: int


def _parse_cell(text: str, row: int, column: str) -> float:
    s = text.strip()
    if s.lower() in MISSING:
        return math.nan
    try:
        v = float(s)
    except ValueError:
        raise ParseError(
            f"non-numeric value {text!r} at row {row}, column {column!r}", row, column
        ) from None
    if math.isinf(v):
        raise ParseError(f"infinite value at row {row}, column {column!r}", row, column)
    return v


def load_table(path, schema: Schema):
    """Read ``path`` into a :class:`Dataset` and report listwise deletions.

    Row numbers in errors are file line numbers (the header is row 1).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8-sig") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path} is empty", 1, None) from None
        if len(set(header)) != len(header):
            raise ParseError("duplicate column names in header", 1, None)
        controls = tuple(schema.controls)
        if schema.candidates is None:
            used = {schema.target, *controls}
            candidates = tuple(h for h in header if h not in used)
        else:
            candidates = tuple(schema.candidates)
        wanted = (schema.target, *controls, *candidates)
        for name in wanted:
            if name not in header:
                raise ParseError(f"column {name!r} not in header", 1, name)
        if len(set(wanted)) != len(wanted):
            raise InvalidArgument("a column is assigned to more than one role")
        pos = [header.index(name) for name in wanted]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if not record:
                continue
            if len(record) != len(header):
                raise ParseError(
                    f"row {lineno} has {len(record)} fields, expected {len(header)}", lineno, None
                )
            rows.append([_parse_cell(record[p], lineno, header[p]) for p in pos])
    data = np.array(rows, dtype=float).reshape(len(rows), len(wanted))
    keep = ~np.isnan(data).any(axis=1)
    dropped = int((~keep).sum())
    if dropped:
        log.info("dropped %d of %d rows with missing values", dropped, len(rows))
    data = data[keep]
    if data.shape[0] == 0:
        raise EmptyAfterFiltering("no complete rows remain after dropping missing values")
    z = 1 + len(controls)
    ds = Dataset(data[:, 0], data[:, 1:z], data[:, z:], candidates, controls)
    return ds, LoadReport(len(rows), dropped)


def load_csv(path, schema: Schema) -> Dataset:
    return load_table(path, schema)[0]


def write_dataset(path, dataset: Dataset, target: str = "y") -> None:
    """Write ``y``, then ``Z``, then ``X`` columns; floats keep full precision."""
    header = [target, *dataset.z_names, *dataset.names]
    block = np.column_stack([dataset.y, dataset.Z, dataset.X])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in block:
            w.writerow([repr(float(v)) for v in row])


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, Mapping):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_hash(config: Mapping) -> str:
    canonical = json.dumps(_clean(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class RunConfig:
    """Validated parameters of one command.

    ``params`` holds plain JSON values; ``allowed`` keys are fixed per
    command and unknown keys are rejected.
    """

    command: str
    params: dict = field(default_factory=dict)

    ALLOWED = {
        "select": {
            "data", "target", "controls", "candidates", "methods", "p", "c", "delta",
            "delta_star", "max_stages", "shrink_n_per_stage", "robust_se", "add_constant",
            "add_trend", "lag_target", "lags_of_candidates", "standardize", "add_first_pc",
            "seed",
        },
        "forecast": {
            "data", "target", "controls", "candidates", "methods", "p", "c", "delta",
            "delta_star", "max_stages", "shrink_n_per_stage", "robust_se", "add_constant",
            "add_trend", "lag_target", "lags_of_candidates", "standardize", "add_first_pc",
            "train_fraction", "train_length", "horizons", "seed",
        },
        "simulate": {
            "T", "n", "k", "alpha", "r2_target", "rho", "vif", "pi", "beta", "burn_in",
            "holdout", "seed", "reps", "workers", "methods", "p", "c", "delta",
            "delta_star", "max_stages", "shrink_n_per_stage", "robust_se", "add_constant",
        },
    }

    def __post_init__(self):
        if self.command not in self.ALLOWED:
            raise InvalidArgument(f"unknown command {self.command!r}")
        unknown = set(self.params) - self.ALLOWED[self.command]
        if unknown:
            raise InvalidArgument(f"unknown configuration keys: {sorted(unknown)}")
        object.__setattr__(self, "params", json.loads(dumps(self.params)))

    def to_json(self) -> str:
        return dumps({"command": self.command, "params": self.params})

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
        if not isinstance(obj, dict):
            raise ParseError("configuration must be a JSON object")
        if set(obj) == {"command", "params"}:
            return cls(obj["command"], obj["params"])
        raise ParseError("configuration needs exactly the keys 'command' and 'params'")

    @classmethod
    def from_file(cls, path, command: str) -> "RunConfig":
        """Read a file holding either a full config or a bare flat params object."""
        text = Path(path).read_text(encoding="utf-8")
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None
        if not isinstance(obj, dict):
            raise ParseError(f"{path}: configuration must be a JSON object")
        if set(obj) == {"command", "params"}:
            if obj["command"] != command:
                raise InvalidArgument(f"{path} is a {obj['command']!r} configuration")
            obj = obj["params"]
        return cls(command, obj)

    @property
    def hash(self) -> str:
        return config_hash({"command": self.command, "params": self.params})


@dataclass(frozen=True)
class MethodReport:
    method: str
    selected: list
    coefficients: dict
    std_errors: dict
    t_stats: dict
    rmse_in_sample: Optional[float]
    bic: Optional[float]
    rmsfe: dict = field(default_factory=dict)
    rmsfe_first_h: dict = field(default_factory=dict)
    r2_oos: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ReportBundle:
    methods: dict
    T: int
    provenance: dict

    def to_dict(self) -> dict:
        return _clean({
            "T": self.T,
            "provenance": self.provenance,
            "methods": {
                name: {
                    "selected": r.selected,
                    "coefficients": r.coefficients,
                    "std_errors": r.std_errors,
                    "t_stats": r.t_stats,
                    "rmse_in_sample": r.rmse_in_sample,
                    "bic": r.bic,
                    "rmsfe": r.rmsfe,
                    "rmsfe_first_h": r.rmsfe_first_h,
                    "r2_oos": r.r2_oos,
                }
                for name, r in self.methods.items()
            },
        })

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj: Mapping) -> "ReportBundle":
        try:
            methods = {
                name: MethodReport(method=name, **fields)
                for name, fields in obj["methods"].items()
            }
            return cls(methods, obj["T"], dict(obj["provenance"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed report bundle: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> "ReportBundle":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from None


def provenance(config: RunConfig, seed: Optional[int] = None) -> dict:
    from . import __version__
    from ._kernels import BACKEND

    return {"config_hash": config.hash, "seed": seed, "version": __version__, "backend": BACKEND}


def write_metric_tables(directory, rows: Sequence[tuple], metrics: Sequence[str], methods) -> list:
    """One CSV per metric: design parameters, then one column per method."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written = []
    keys = ["design", "T", "n", "k", "alpha", "vif", "pi", "reps"]
    for metric in metrics:
        p = directory / f"{metric}.csv"
        with p.open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(keys + list(methods))
            for design, cfg, reports in rows:
                reps = next(iter(reports.values())).reps
                head = [design, cfg.T, cfg.n, cfg.k, cfg.alpha, cfg.vif, cfg.pi, reps]
                vals = [_fmt(getattr(reports[m], metric)) for m in methods]
                w.writerow([str(h) for h in head] + vals)
        written.append(p)
    return written


def _fmt(v) -> str:
    return "" if v is None or (isinstance(v, float) and not math.isfinite(v)) else repr(float(v))
