"""Dataset CSV files and ROM artifacts.

A dataset is a CSV with header ``time_h,TL,TR,s1,...,sN`` and an optional
sidecar ``<stem>.meta.json`` carrying sensor positions, noise figures and,
for synthetic data, the generating parameters.  A ROM artifact is a plain
text file of ``key values...`` lines with full-precision decimal numbers.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import AlignmentError, SchemaError, VersionError
from .rom import ReducedSystem

ROM_MAGIC = "walldiff-rom"
ROM_VERSION = 1


@dataclass(eq=False)
class Dataset:
    """Boundary and sensor series on one time axis (hours, degC)."""

    times_h: np.ndarray
    T_left: np.ndarray
    T_right: np.ndarray
    sensors: np.ndarray
    positions: tuple[float, ...] | None = None
    step_h: float | None = None
    sigma_m: float | None = None
    delta_x: float | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times_h = np.asarray(self.times_h, dtype=float)
        self.T_left = np.asarray(self.T_left, dtype=float)
        self.T_right = np.asarray(self.T_right, dtype=float)
        self.sensors = np.atleast_2d(np.asarray(self.sensors, dtype=float))
        if self.sensors.shape[0] != self.times_h.size:
            self.sensors = self.sensors.reshape(self.times_h.size, -1)
        n = self.times_h.size
        if self.T_left.size != n or self.T_right.size != n:
            raise AlignmentError("boundary and time series differ in length")
        if n < 2 or np.any(np.diff(self.times_h) <= 0):
            raise SchemaError("timestamps must be strictly increasing")
        if self.positions is not None:
            self.positions = tuple(float(p) for p in self.positions)
            if len(self.positions) != self.n_sensors:
                raise AlignmentError(
                    f"{len(self.positions)} positions for {self.n_sensors} sensor columns")
        if self.step_h is None:
            self.step_h = float(np.median(np.diff(self.times_h)))

    @property
    def n_sensors(self):
        return self.sensors.shape[1]

    @property
    def times_s(self):
        return self.times_h * 3600.0

    def window(self, start_h, stop_h):
        """Rows with ``start_h <= t <= stop_h``, times re-origined at ``start_h``."""
        tol = 1e-9 * max(1.0, abs(stop_h))
        keep = (self.times_h >= start_h - tol) & (self.times_h <= stop_h + tol)
        meta = dict(self.meta, window_start_h=float(start_h))
        return Dataset(self.times_h[keep] - start_h, self.T_left[keep], self.T_right[keep],
                       self.sensors[keep], self.positions, self.step_h, self.sigma_m,
                       self.delta_x, meta)


def meta_path(path):
    p = Path(path)
    return p.with_name(p.stem + ".meta.json")


def save_dataset(dataset, path):
    """Write the CSV and, when there is anything to record, its sidecar."""
    path = Path(path)
    header = ["time_h", "TL", "TR"] + [f"s{i + 1}" for i in range(dataset.n_sensors)]
    table = np.column_stack([dataset.times_h, dataset.T_left, dataset.T_right, dataset.sensors])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    meta = dict(dataset.meta)
    meta.update(positions=list(dataset.positions) if dataset.positions is not None else None,
                step_h=dataset.step_h, sigma_m=dataset.sigma_m, delta_x=dataset.delta_x)
    with open(meta_path(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_dataset(path, positions=None):
    """Read and validate a dataset CSV.

    Isolated missing samples (an empty cell, or one absent row inside a gap of
    twice the nominal step) are filled by linear interpolation; larger gaps
    are rejected.

    Parameters
    ----------
    path : str or Path
    positions : sequence of float, optional
        Sensor positions in metres; override the sidecar.
    """
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"dataset not found: {path}")
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    expected = ["time_h", "TL", "TR"]
    if header[:3] != expected:
        bad = next(i for i in range(min(3, len(header) + 1))
                   if i >= len(header) or header[i] != expected[i])
        name = header[bad] if bad < len(header) else "<missing>"
        raise SchemaError(f"{path}: column {bad + 1} is {name!r}, expected {expected[bad]!r}")
    for i, h in enumerate(header[3:]):
        if h != f"s{i + 1}":
            raise SchemaError(f"{path}: column {i + 4} is {h!r}, expected 's{i + 1}'")
    if len(header) < 4:
        raise SchemaError(f"{path}: no sensor columns (expected s1, s2, ...)")
    body = rows[1:]
    data = np.full((len(body), len(header)), np.nan)
    for r, row in enumerate(body):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r + 2} has {len(row)} fields, expected {len(header)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            if cell == "":
                continue
            try:
                data[r, c] = float(cell)
            except ValueError:
                raise SchemaError(f"{path}: row {r + 2}, column {header[c]!r}: "
                                  f"not a number: {cell!r}") from None
    if np.isnan(data[:, 0]).any():
        raise SchemaError(f"{path}: row {int(np.flatnonzero(np.isnan(data[:, 0]))[0]) + 2} "
                          "has no timestamp")
    t = data[:, 0]
    dtt = np.diff(t)
    if np.any(dtt <= 0):
        r = int(np.flatnonzero(dtt <= 0)[0])
        kind = "duplicated" if dtt[r] == 0 else "decreasing"
        raise SchemaError(f"{path}: {kind} timestamp {float(t[r + 1])!r} at row {r + 3}")
    step = float(np.median(dtt))
    data = _fill_gaps(data, step, path)

    meta = {}
    mp = meta_path(path)
    if mp.is_file():
        with open(mp, encoding="utf-8") as fh:
            meta = json.load(fh)
    pos = positions if positions is not None else meta.pop("positions", None)
    meta.pop("positions", None)
    step_h = meta.pop("step_h", None) or step
    sigma_m = meta.pop("sigma_m", None)
    delta_x = meta.pop("delta_x", None)
    return Dataset(data[:, 0], data[:, 1], data[:, 2], data[:, 3:], pos, step_h,
                   sigma_m, delta_x, meta)


def _fill_gaps(data, step, path):
    t = data[:, 0]
    gaps = np.diff(t) / step
    too_big = np.flatnonzero(gaps > 2.0 + 1e-9)
    if too_big.size:
        r = int(too_big[0])
        raise AlignmentError(f"{path}: gap of {t[r + 1] - t[r]:g} h after t={t[r]:g} h "
                             f"exceeds twice the {step:g} h step")
    missing_rows = np.flatnonzero(gaps > 1.5)
    if missing_rows.size:
        new_t = t[missing_rows] + 0.5 * (t[missing_rows + 1] - t[missing_rows])
        filler = np.full((new_t.size, data.shape[1]), np.nan)
        filler[:, 0] = new_t
        data = np.vstack([data, filler])
        data = data[np.argsort(data[:, 0], kind="stable")]
    t = data[:, 0]
    for c in range(1, data.shape[1]):
        col = data[:, c]
        bad = np.isnan(col)
        if not bad.any():
            continue
        runs = np.flatnonzero(bad[1:] & bad[:-1])
        if runs.size or bad[0] or bad[-1]:
            r = int(runs[0] + 1) if runs.size else (0 if bad[0] else len(col) - 1)
            raise AlignmentError(f"{path}: consecutive or edge missing values near "
                                 f"t={t[r]:g} h in column {c + 1}")
        col[bad] = np.interp(t[bad], t[~bad], col[~bad])
    return data


# ---------------------------------------------------------------------------
# ROM artifacts
# ---------------------------------------------------------------------------

def _fmt(values):
    return " ".join(repr(float(v)) for v in np.ravel(values))


def save_rom(reduced, path):
    lines = [
        f"{ROM_MAGIC} {ROM_VERSION}",
        f"order {reduced.order}",
        f"n_sensors {reduced.n_sensors}",
        f"length {float(reduced.length)!r}",
        f"t_ref {float(reduced.t_ref)!r}",
        f"positions {_fmt(reduced.positions)}",
        f"F {_fmt(reduced.F)}",
        f"G {_fmt(reduced.G)}",
        f"H_u {_fmt(reduced.H_u)}",
        f"H_t {_fmt(reduced.H_t)}",
        f"x0 {_fmt(reduced.x0)}",
        "record " + json.dumps(_jsonable(reduced.record), sort_keys=True),
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonable(record):
    out = {}
    for k, v in record.items():
        if isinstance(v, np.ndarray):
            continue
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        out[k] = v
    return out


def load_rom(path, n_sensors=None):
    """Read a ROM artifact; ``n_sensors`` guards against a mismatched dataset."""
    path = Path(path)
    if not path.is_file():
        raise SchemaError(f"ROM artifact not found: {path}")
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 2 or head[0] != ROM_MAGIC:
        raise VersionError(f"{path}: not a ROM artifact (header {lines[0] if lines else ''!r})")
    if head[1] != str(ROM_VERSION):
        raise VersionError(f"{path}: artifact version {head[1]}, expected {ROM_VERSION}")
    fields = {}
    for line in lines[1:]:
        key, _, rest = line.partition(" ")
        fields[key] = rest
    try:
        order = int(fields["order"])
        ns = int(fields["n_sensors"])
        nums = {k: np.array([float(v) for v in fields[k].split()])
                for k in ("positions", "F", "G", "H_u", "H_t", "x0")}
        rom = ReducedSystem(
            F=nums["F"], G=nums["G"].reshape(order, 2), H_u=nums["H_u"].reshape(ns, order),
            H_t=nums["H_t"].reshape(ns, order), positions=tuple(nums["positions"]),
            length=float(fields["length"]), t_ref=float(fields["t_ref"]), x0=nums["x0"],
            record=json.loads(fields.get("record", "{}")),
        )
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"{path}: malformed ROM artifact ({exc})") from None
    if n_sensors is not None and rom.n_sensors != n_sensors:
        raise AlignmentError(f"{path}: ROM has {rom.n_sensors} sensors, data has {n_sensors}")
    return rom
