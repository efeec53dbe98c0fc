"""Line charts of experiment CSVs.

Figures are built on a bare ``Figure`` (no pyplot state) and saved with a
fixed SVG hash salt and no date stamp, so identical input gives identical bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Optional, Sequence, Union

import matplotlib
from matplotlib.figure import Figure

from .errors import UsageError
from .experiments import read_csv_columns

_RC = {
    "svg.hashsalt": "hypwalk",
    "svg.fonttype": "none",
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _floats(values: Sequence[str], column: str) -> list[float]:
    try:
        return [float(v) for v in values]
    except ValueError as exc:
        raise UsageError(f"column {column!r} is not numeric: {exc}") from exc


def line_chart(series: dict[str, tuple[list[float], list[float], Optional[list[float]]]],
               xlabel: str, ylabel: str, title: Optional[str] = None) -> Figure:
    """One line with markers per series; error bars where given."""
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=(6.0, 4.0))
        ax = fig.add_subplot()
        for i, (label, (xs, ys, errs)) in enumerate(series.items()):
            if errs is not None:
                line = ax.errorbar(xs, ys, yerr=errs, marker="o", markersize=4, capsize=3, linewidth=1.2,
                                   label=label).lines[0]
            else:
                (line,) = ax.plot(xs, ys, marker="o", markersize=4, linewidth=1.2, label=label)
            line.set_gid(f"series_{i}")  # stable SVG group id for the data line
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(frameon=False)
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
    return fig


def save_figure(fig: Figure, path: Union[str, Path]) -> Path:
    path = Path(path)
    fmt = path.suffix.lstrip(".").lower() or "svg"
    metadata = {"Date": None} if fmt in ("svg", "pdf") else None
    with matplotlib.rc_context(_RC):
        fig.savefig(path, format=fmt, metadata=metadata)
    return path


def plot_csv(in_csv: Union[str, Path], out_path: Union[str, Path], x_column: str, y_column: str,
             errorbar_column: Optional[str] = None, group_column: Optional[str] = None,
             title: Optional[str] = None) -> Path:
    """Render columns of a CSV file as a line chart (one line per value of ``group_column``)."""
    return plot_columns(read_csv_columns(in_csv), out_path, x_column, y_column, errorbar_column,
                        group_column, title, source=str(in_csv))


def plot_columns(cols: dict[str, list[str]], out_path: Union[str, Path], x_column: str, y_column: str,
                 errorbar_column: Optional[str] = None, group_column: Optional[str] = None,
                 title: Optional[str] = None, source: str = "input") -> Path:
    for name in (x_column, y_column, errorbar_column, group_column):
        if name is not None and name not in cols:
            raise UsageError(f"{source} has no column {name!r} (columns: {', '.join(cols)})")
    nrows = len(cols[x_column])
    if nrows == 0:
        raise UsageError(f"{source} has no data rows")
    groups = cols[group_column] if group_column else [y_column] * nrows
    series: dict[str, tuple[list[float], list[float], Optional[list[float]]]] = {}
    xs = _floats(cols[x_column], x_column)
    ys = _floats(cols[y_column], y_column)
    es = _floats(cols[errorbar_column], errorbar_column) if errorbar_column else None
    for i, g in enumerate(groups):
        sx, sy, se = series.setdefault(g, ([], [], [] if es is not None else None))
        sx.append(xs[i])
        sy.append(ys[i])
        if se is not None:
            se.append(es[i])
    fig = line_chart(series, x_column, y_column, title)
    return save_figure(fig, out_path)
