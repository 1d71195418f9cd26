"""File outputs: time-series logs, summaries and plot-ready tables.

Formats
-------
``timeseries.csv``
    Comma-separated, one row per simulation tick, header
    :data:`~gimbal_landing.harness.TIMESERIES_COLUMNS`.  Missing values
    (no detection delivered on that tick) are empty cells.
``summary.json``
    UTF-8 JSON object with sorted keys: profile, seed, success,
    termination, landing_radius, duration, phase timeline and the full
    config echo.
``campaign.json``
    Aggregate for one 20-trial campaign plus every trial summary.
Plot data
    ``tracking.csv`` (t, phase, u, v), ``trajectory.csv`` (t, phase,
    target_north, target_east, target_up), ``commands.csv`` (t, phase,
    five channels, flip) and ``radii.csv`` (profile, trial, success,
    landing_radius).

Floats are written with ``repr`` so files are byte-identical for
identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .harness import TIMESERIES_COLUMNS, CampaignResult, TrialResult

TIMESERIES_FILE = "timeseries.csv"
SUMMARY_FILE = "summary.json"
CAMPAIGN_FILE = "campaign.json"
FIGURES = ("radii", "tracking", "trajectory", "commands")

TRACKING_COLUMNS = ("t", "phase", "u", "v")
TRAJECTORY_COLUMNS = ("t", "phase", "target_north", "target_east", "target_up")
COMMAND_COLUMNS = ("t", "phase", "pitch", "roll", "yaw", "throttle", "gimbal_tilt", "flip")
RADII_COLUMNS = ("profile", "trial", "success", "landing_radius")


class ExportError(OSError):
    """An output could not be written or an input could not be read."""


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_cell(v) for v in r])
    return buf.getvalue()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as f:
            f.write(text)
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e.strerror or e}") from e
    return path


def _read(path: Path) -> str:
    path = Path(path)
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise ExportError(f"cannot read {path}: {e.strerror or e}") from e


# -- tables derived from a trial -------------------------------------------


def tracking_rows(result: TrialResult) -> list[tuple]:
    """(t, phase, u, v) on every tick that delivered a detection."""
    i_t, i_p, i_u, i_v = (TIMESERIES_COLUMNS.index(c) for c in ("t", "phase", "det_u", "det_v"))
    return [(r[i_t], r[i_p], r[i_u], r[i_v]) for r in result.rows if r[i_u] is not None]


def trajectory_rows(result: TrialResult) -> list[tuple]:
    cols = ("t", "phase", "target_north", "target_east", "target_up")
    idx = [TIMESERIES_COLUMNS.index(c) for c in cols]
    i_n = TIMESERIES_COLUMNS.index("target_north")
    return [tuple(r[i] for i in idx) for r in result.rows if r[i_n] is not None]


def command_rows(result: TrialResult) -> list[tuple]:
    cols = ("t", "phase", "pitch", "roll", "yaw_cmd", "throttle", "gimbal_cmd", "flip")
    idx = [TIMESERIES_COLUMNS.index(c) for c in cols]
    return [tuple(r[i] for i in idx) for r in result.rows]


def radii_rows(campaigns: Iterable[dict]) -> list[tuple]:
    """One row per trial from campaign summaries (as written to ``campaign.json``)."""
    out = []
    for c in campaigns:
        for k, t in enumerate(c["trial_summaries"]):
            out.append((c["profile"], k, t["success"], t["landing_radius"]))
    return out


# -- writers ----------------------------------------------------------------


def timeseries_text(result: TrialResult) -> str:
    return _csv_text(TIMESERIES_COLUMNS, result.rows)


def write_trial(result: TrialResult, out_dir, run_config: Optional[dict] = None) -> dict[str, Path]:
    """Write the log, summary and per-trial plot data into ``out_dir``."""
    out = Path(out_dir)
    summary = result.summary()
    if run_config is not None:
        summary["run_config"] = run_config
    return {
        "timeseries": _write(out / TIMESERIES_FILE, timeseries_text(result)),
        "summary": _write(out / SUMMARY_FILE, _json_text(summary)),
        "tracking": _write(out / "tracking.csv", _csv_text(TRACKING_COLUMNS, tracking_rows(result))),
        "trajectory": _write(out / "trajectory.csv", _csv_text(TRAJECTORY_COLUMNS, trajectory_rows(result))),
        "commands": _write(out / "commands.csv", _csv_text(COMMAND_COLUMNS, command_rows(result))),
    }


def trial_dir_name(index: int) -> str:
    return f"trial_{index:02d}"


def campaign_document(campaign: CampaignResult, run_config: Optional[dict] = None) -> dict:
    doc = campaign.summary()
    doc["trial_summaries"] = [r.summary() for r in campaign.trials]
    if run_config is not None:
        doc["run_config"] = run_config
    return doc


def write_campaign(campaign: CampaignResult, out_dir, run_config: Optional[dict] = None) -> dict[str, Path]:
    """Per-trial directories, ``campaign.json`` and ``radii.csv``."""
    out = Path(out_dir)
    paths = {}
    for k, r in enumerate(campaign.trials):
        paths[trial_dir_name(k)] = write_trial(r, out / trial_dir_name(k), run_config)["summary"]
    doc = campaign_document(campaign, run_config)
    paths["campaign"] = _write(out / CAMPAIGN_FILE, _json_text(doc))
    paths["radii"] = _write(out / "radii.csv", _csv_text(RADII_COLUMNS, radii_rows([doc])))
    return paths


# -- readers ----------------------------------------------------------------


def read_summary(path) -> dict:
    return json.loads(_read(path))


def read_timeseries(path) -> list[dict]:
    """Rows of a time-series log as dicts; empty cells become None."""
    reader = csv.DictReader(io.StringIO(_read(path)))
    if tuple(reader.fieldnames or ()) != TIMESERIES_COLUMNS:
        raise ExportError(f"unexpected header in {path}")
    rows = []
    for rec in reader:
        row = {}
        for k, v in rec.items():
            if k == "phase":
                row[k] = v
            elif v == "":
                row[k] = None
            elif k == "flip":
                row[k] = int(v)
            else:
                row[k] = float(v)
        rows.append(row)
    return rows


def _find_campaigns(root: Path) -> list[Path]:
    if (root / CAMPAIGN_FILE).is_file():
        return [root / CAMPAIGN_FILE]
    return sorted(root.glob(f"*/{CAMPAIGN_FILE}"))


def plot_data(figure: str, source, dest) -> Path:
    """Regenerate one figure's table from exported outputs.

    ``radii`` reads every ``campaign.json`` at or one level below
    ``source``; the other figures read a trial directory's time series.
    """
    if figure not in FIGURES:
        raise ValueError(f"unknown figure {figure!r}; choose from {', '.join(FIGURES)}")
    src = Path(source)
    if not src.exists():
        raise ExportError(f"input not found: {src}")
    if figure == "radii":
        files = _find_campaigns(src)
        if not files:
            raise ExportError(f"no {CAMPAIGN_FILE} found under {src}")
        rows = radii_rows(read_summary(f) for f in files)
        return _write(Path(dest), _csv_text(RADII_COLUMNS, rows))

    ts = src / TIMESERIES_FILE if src.is_dir() else src
    rows = read_timeseries(ts)
    if figure == "tracking":
        table = [(r["t"], r["phase"], r["det_u"], r["det_v"]) for r in rows if r["det_u"] is not None]
        header = TRACKING_COLUMNS
    elif figure == "trajectory":
        table = [
            (r["t"], r["phase"], r["target_north"], r["target_east"], r["target_up"])
            for r in rows
            if r["target_north"] is not None
        ]
        header = TRAJECTORY_COLUMNS
    else:
        table = [
            (r["t"], r["phase"], r["pitch"], r["roll"], r["yaw_cmd"], r["throttle"], r["gimbal_cmd"], r["flip"])
            for r in rows
        ]
        header = COMMAND_COLUMNS
    return _write(Path(dest), _csv_text(header, table))
