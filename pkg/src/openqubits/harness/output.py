"""CSV output: fingerprint comment, header row, values at 12 significant digits."""
from __future__ import annotations

import csv
import io
from pathlib import Path

from .runner import SweepPoint, TimeSeries, violation_threshold


def _fmt(x: float) -> str:
    return format(float(x), ".12g")


def csv_text(series: TimeSeries) -> str:
    buf = io.StringIO()
    buf.write(f"# config-sha256: {series.config.fingerprint()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(series.names)
    cols = list(series.columns.values())
    for i, t in enumerate(series.times):
        writer.writerow([_fmt(t), *(_fmt(c[i]) for c in cols)])
    return buf.getvalue()


def write_csv(series: TimeSeries, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(csv_text(series), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return path


def read_csv(path) -> tuple[str, list[str], list[list[float]]]:
    """Fingerprint, header and rows of a file written by :func:`write_csv`."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# config-sha256: "):
            raise ValueError(f"{path}: missing config fingerprint line")
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(x) for x in row] for row in reader]
    return first.split(":", 1)[1].strip(), header, rows


def _value_token(v) -> str:
    text = repr(v) if isinstance(v, float) else str(v)
    return "".join(ch if ch.isalnum() or ch in ".-+" else "_" for ch in text)


def point_filename(stem: str, params) -> str:
    """``stem`` plus ``_<key>-<value>`` per swept key, e.g. ``fig2_alpha3-0.5.csv``."""
    parts = [stem] + [f"{key.rsplit('.', 1)[-1]}-{_value_token(v)}" for key, v in params]
    return "_".join(parts) + ".csv"


def write_sweep(points: list[SweepPoint], out_dir, stem: str) -> list[Path]:
    """One CSV per successful point, plus ``<stem>_intervals.csv`` listing violation intervals."""
    out_dir = Path(out_dir)
    written = []
    rows = []
    for p in points:
        if p.series is None:
            continue
        name = point_filename(stem, p.params)
        written.append(write_csv(p.series, out_dir / name))
        for m in p.series.columns:
            if violation_threshold(m) is not None:
                for a, b in p.series.violation_intervals(m):
                    rows.append([name, m, _fmt(a), _fmt(b)])
    if any(violation_threshold(m) is not None for p in points for m in p.config.measures):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["file", "measure", "start", "end"])
        writer.writerows(rows)
        path = out_dir / f"{stem}_intervals.csv"
        try:
            path.write_text(buf.getvalue(), encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
        written.append(path)
    return written
