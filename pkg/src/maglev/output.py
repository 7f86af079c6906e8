"""CSV tables and matplotlib figures for command results.

CSV files have a header row, ``\\n`` line endings and floats written with
``repr`` so that reading them back gives the identical values.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["format_cell", "csv_text", "emit_csv", "parse_csv", "read_csv", "Series", "emit_figure",
           "emit_svg", "branch_series"]


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _row(record, columns):
    if isinstance(record, dict):
        return [record[c] for c in columns]
    if hasattr(record, "_asdict"):
        d = record._asdict()
        return [d[c] for c in columns]
    values = list(record)
    if len(values) != len(columns):
        raise ValueError(f"row has {len(values)} cells for {len(columns)} columns")
    return values


def csv_text(records, columns) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in records:
        w.writerow([format_cell(v) for v in _row(r, columns)])
    return buf.getvalue()


def emit_csv(records, columns, path=None) -> str:
    """Write ``records`` under the header ``columns``; return the text.

    Records may be dicts, named tuples or plain sequences. With ``path``
    None nothing is written.
    """
    text = csv_text(records, list(columns))
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def _parse_cell(s):
    if s in ("true", "false"):
        return s == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def parse_csv(text) -> tuple[list, list]:
    """Inverse of :func:`csv_text`: ``(columns, rows)`` with typed cells."""
    rows = list(csv.reader(io.StringIO(text, newline="")))
    return rows[0], [[_parse_cell(c) for c in r] for r in rows[1:]]


def read_csv(path) -> tuple[list, list]:
    return parse_csv(Path(path).read_text(encoding="utf-8"))


@dataclass(frozen=True)
class Series:
    x: object
    y: object
    label: str = ""
    kind: str = "line"  # "line" or "scatter"
    dashed: bool = False
    color: str | None = None


def branch_series(sigma, values, stable, label, colors=("C0", "C3")):
    """Split a frequency-response curve into solid stable and dashed unstable series.

    Equilibria are grouped by rank within each sigma1 so coexisting branches
    are drawn as separate lines; NaN gaps break a line where stability changes.
    """
    sigma = np.asarray(sigma, float)
    values = np.asarray(values, float)
    stable = np.asarray(stable, bool)
    grid = np.unique(sigma)
    ranks = np.zeros(len(sigma), dtype=int)
    for s in grid:
        idx = np.nonzero(sigma == s)[0]
        ranks[idx[np.argsort(values[idx])]] = np.arange(len(idx))
    out = []
    for r in range(ranks.max(initial=-1) + 1):
        sel = ranks == r
        for flag in (True, False):
            y = np.full(len(grid), np.nan)
            pos = np.searchsorted(grid, sigma[sel])
            y[pos] = np.where(stable[sel] == flag, values[sel], np.nan)
            if np.isfinite(y).any():
                tag = "stable" if flag else "unstable"
                out.append(Series(grid, y, f"{label} {tag}" if r == 0 else "",
                                  dashed=not flag, color=colors[0] if flag else colors[1]))
    return out


def emit_figure(series, style, path, fmt=None):
    """Render ``series`` to ``path``; the format follows the suffix unless given.

    ``style`` may hold ``title``, ``xlabel``, ``ylabel``, ``xlim`` and ``ylim``.
    Each artist gets the SVG id ``series-<i>``.
    """
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    style = dict(style or {})
    with matplotlib.rc_context({"svg.hashsalt": "maglev", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=style.get("size", (6.4, 4.0)))
        try:
            for i, s in enumerate(series):
                color = s.color or f"C{i % 10}"
                if s.kind == "scatter":
                    art = ax.scatter(s.x, s.y, s=style.get("marker_size", 2.0),
                                     label=s.label or None, color=color)
                else:
                    (art,) = ax.plot(s.x, s.y, linestyle="--" if s.dashed else "-",
                                     label=s.label or None, color=color)
                art.set_gid(f"series-{i}")
            ax.set_title(style.get("title", ""))
            ax.set_xlabel(style.get("xlabel", ""))
            ax.set_ylabel(style.get("ylabel", ""))
            for key, setter in (("xlim", ax.set_xlim), ("ylim", ax.set_ylim)):
                if key in style:
                    setter(*style[key])
            if any(s.label for s in series):
                ax.legend(loc="best", fontsize="small")
            fig.tight_layout()
            fmt = fmt or Path(path).suffix.lstrip(".") or "svg"
            fig.savefig(path, format=fmt, metadata={"Date": None} if fmt == "svg" else None)
        finally:
            plt.close(fig)
    return path


def emit_svg(series, style, path):
    return emit_figure(series, style, path, fmt="svg")
