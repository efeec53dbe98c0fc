import xml.etree.ElementTree as ET

import pytest

from hypwalk.errors import UsageError
from hypwalk.plotting import plot_columns, plot_csv

SVG = "{http://www.w3.org/2000/svg}"


def series_group(path, i=0):
    root = ET.parse(path).getroot()
    return next(g for g in root.iter(SVG + "g") if g.get("id") == f"series_{i}")


def test_svg_structure(tmp_path):
    src = tmp_path / "c.csv"
    src.write_text("n,p_hat,stderr\n4,0.2,0.05\n8,0.6,0.04\n16,0.9,0.02\n")
    out = plot_csv(src, tmp_path / "c.svg", "n", "p_hat", "stderr")
    text = out.read_text()
    assert text.startswith("<?xml") and "<svg" in text
    assert ">n<" in text and ">p_hat<" in text  # axis labels kept as text
    line = series_group(out)
    assert len(line.findall(f".//{SVG}use")) == 3
    assert " L " in line.find(SVG + "path").get("d").replace("\n", " ")


def test_single_row_has_one_marker_and_no_segment(tmp_path):
    src = tmp_path / "c.csv"
    src.write_text("n,p_hat\n4,0.5\n")
    out = plot_csv(src, tmp_path / "c.svg", "n", "p_hat")
    line = series_group(out)
    assert len(line.findall(f".//{SVG}use")) == 1
    assert "L" not in line.find(SVG + "path").get("d")


def test_deterministic_bytes(tmp_path):
    src = tmp_path / "c.csv"
    src.write_text("n,p_hat,stderr\n4,0.2,0.05\n8,0.6,0.04\n")
    a = plot_csv(src, tmp_path / "a.svg", "n", "p_hat", "stderr", title="t").read_bytes()
    b = plot_csv(src, tmp_path / "b.svg", "n", "p_hat", "stderr", title="t").read_bytes()
    assert a == b


def test_groups_make_separate_lines(tmp_path):
    cols = {"n": ["100", "100", "200", "200"], "case": ["pp", "mm", "pp", "mm"], "p_hat": ["0.9", "0.8", "1", "0.95"]}
    out = plot_columns(cols, tmp_path / "g.svg", "n", "p_hat", group_column="case")
    assert len(series_group(out, 0).findall(f".//{SVG}use")) == 2
    assert len(series_group(out, 1).findall(f".//{SVG}use")) == 2


def test_errors(tmp_path):
    src = tmp_path / "c.csv"
    src.write_text("n,p_hat\n")
    with pytest.raises(UsageError, match="no data rows"):
        plot_csv(src, tmp_path / "c.svg", "n", "p_hat")
    src.write_text("n,p_hat\n4,0.5\n")
    with pytest.raises(UsageError, match="no column"):
        plot_csv(src, tmp_path / "c.svg", "n", "stderr")
    src.write_text("n,p_hat\n4,abc\n")
    with pytest.raises(UsageError, match="not numeric"):
        plot_csv(src, tmp_path / "c.svg", "n", "p_hat")
    src.write_text("")
    with pytest.raises(UsageError):
        plot_csv(src, tmp_path / "c.svg", "n", "p_hat")
    with pytest.raises(UsageError):
        plot_csv(tmp_path / "missing.csv", tmp_path / "c.svg", "n", "p_hat")


def test_png_by_suffix(tmp_path):
    out = plot_columns({"n": ["1", "2"], "y": ["0", "1"]}, tmp_path / "c.png", "n", "y")
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
