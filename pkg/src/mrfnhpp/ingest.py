"""Shot-chart CSV parsing and conversion to study-region point patterns.

Court coordinates are in tenths of a foot with the origin at the rim centre;
``x`` spans the sideline-to-sideline width and ``y`` runs from the baseline
(-50) towards half court.
"""
from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .grid import PointPattern, StudyRegion

log = logging.getLogger(__name__)

# first 35 ft of the half court, 50 ft wide
DEFAULT_REGION = StudyRegion(-250.0, 250.0, -50.0, 300.0)
DEFAULT_NX = 50
DEFAULT_NY = 35

FIELDS = ("game_date", "opponent", "period", "minutes_left", "seconds_left", "made",
          "action_type", "shot_type", "shot_distance", "x", "y")
REQUIRED = ("x", "y")

# accepted header spellings, compared case-insensitively
ALIASES = {
    "game_date": ("game_date", "date"),
    "opponent": ("opponent", "opp", "vtm"),
    "period": ("period", "quarter"),
    "minutes_left": ("minutes_left", "minutes_remaining"),
    "seconds_left": ("seconds_left", "seconds_remaining"),
    "made": ("made", "shot_made_flag", "shot_made"),
    "action_type": ("action_type",),
    "shot_type": ("shot_type",),
    "shot_distance": ("shot_distance",),
    "x": ("x", "loc_x"),
    "y": ("y", "loc_y"),
}


class ShotParseError(ValueError):
    def __init__(self, line, message):
        self.line = line
        super().__init__(f"line {line}: {message}")


@dataclass(frozen=True)
class ShotRecord:
    x: int
    y: int
    game_date: str = ""
    opponent: str = ""
    period: int | None = None
    minutes_left: int | None = None
    seconds_left: int | None = None
    made: int | None = None
    action_type: str = ""
    shot_type: int | None = None
    shot_distance: float | None = None


def load_mapping(path) -> dict:
    """Read a JSON ``{field: header}`` mapping for nonstandard exports."""
    with open(path) as fh:
        mapping = json.load(fh)
    unknown = set(mapping) - set(FIELDS)
    if unknown:
        raise ValueError(f"unknown fields in column mapping: {sorted(unknown)}")
    return mapping


def _resolve_columns(header, mapping):
    lower = {h.strip().lower(): h for h in header}
    cols = {}
    for name in FIELDS:
        if mapping and name in mapping:
            if mapping[name] not in header:
                raise ValueError(f"mapped column {mapping[name]!r} for {name!r} not in header")
            cols[name] = mapping[name]
            continue
        for alias in ALIASES[name]:
            if alias in lower:
                cols[name] = lower[alias]
                break
    missing = [r for r in REQUIRED if r not in cols]
    if missing:
        raise ValueError(f"missing required columns: {missing}")
    return cols


def _to_int(text):
    return int(round(float(text)))


def _shot_type(text):
    text = text.strip()
    if text[:1] in "23":
        return int(text[0])
    raise ValueError(f"unrecognised shot type {text!r}")


def _period(text):
    p = _to_int(text)
    if not 1 <= p <= 5:
        raise ValueError(f"period {p} outside 1..5")
    return p


def _made(text):
    m = _to_int(text)
    if m not in (0, 1):
        raise ValueError(f"made flag must be 0 or 1, got {m}")
    return m


_CONVERTERS = {
    "period": _period,
    "minutes_left": _to_int,
    "seconds_left": _to_int,
    "made": _made,
    "shot_type": _shot_type,
    "shot_distance": float,
    "x": _to_int,
    "y": _to_int,
}


def parse_shot_csv(source, mapping: dict | None = None, strict: bool = True):
    """Parse a shot-chart CSV into :class:`ShotRecord` objects.

    ``source`` is a path or an open text stream.  In strict mode the first
    malformed row raises :class:`ShotParseError`; otherwise bad rows are
    skipped and returned as ``(line, message)`` pairs.

    Returns ``(records, errors)``.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            return parse_shot_csv(fh, mapping, strict)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty file: header row required") from None
    cols = _resolve_columns(header, mapping)
    pos = {name: header.index(col) for name, col in cols.items()}

    records, errors = [], []
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        try:
            values = {}
            for name, idx in pos.items():
                if idx >= len(row):
                    raise ValueError(f"row has {len(row)} fields, expected at least {idx + 1}")
                text = row[idx].strip()
                if text == "":
                    if name in REQUIRED:
                        raise ValueError(f"empty {name}")
                    continue
                conv = _CONVERTERS.get(name)
                values[name] = conv(text) if conv else text
            records.append(ShotRecord(**values))
        except ValueError as exc:
            if strict:
                raise ShotParseError(line, str(exc)) from None
            errors.append((line, str(exc)))
            log.warning("skipping line %d: %s", line, exc)
    return records, errors


def to_study_pattern(records, region: StudyRegion = DEFAULT_REGION):
    """Keep shots inside ``region``; returns ``(PointPattern, n_dropped)``."""
    if records:
        xy = np.array([(r.x, r.y) for r in records], dtype=float)
    else:
        xy = np.zeros((0, 2))
    keep = region.contains(xy[:, 0], xy[:, 1])
    return PointPattern(xy[keep], region), int((~keep).sum())


def shot_summary(records) -> dict:
    """Shot count, 2-point share and period shares (percent)."""
    n = len(records)
    typed = [r.shot_type for r in records if r.shot_type is not None]
    periods = Counter(r.period for r in records if r.period is not None)
    n_per = sum(periods.values())
    return {
        "shot_count": n,
        "two_point_pct": round(100.0 * typed.count(2) / len(typed), 1) if typed else None,
        "period_pct": [round(100.0 * periods.get(p, 0) / n_per, 1) if n_per else None for p in range(1, 6)],
    }


def pattern_to_dict(pattern: PointPattern, grid_shape=(DEFAULT_NX, DEFAULT_NY), dropped: int = 0,
                    **extra) -> dict:
    d = {
        "region": pattern.region.to_dict(),
        "n_x": int(grid_shape[0]),
        "n_y": int(grid_shape[1]),
        "points": pattern.points.tolist(),
        "dropped": int(dropped),
    }
    d.update(extra)
    return d


def read_pattern_file(path):
    """Load a pattern JSON; returns ``(PointPattern, (n_x, n_y), raw_dict)``."""
    with open(path) as fh:
        d = json.load(fh)
    region = StudyRegion.from_dict(d["region"])
    pattern = PointPattern(np.asarray(d["points"], dtype=float).reshape(-1, 2), region)
    return pattern, (int(d["n_x"]), int(d["n_y"])), d


def write_pattern_file(path, pattern: PointPattern, grid_shape, dropped=0, **extra):
    with open(path, "w") as fh:
        json.dump(pattern_to_dict(pattern, grid_shape, dropped, **extra), fh)
