import math
import re

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maglev.output import (Series, branch_series, csv_text, emit_csv, emit_svg, format_cell,
                           parse_csv, read_csv)
from maglev.slowflow import FreqRespPoint


def test_format_cell():
    assert [format_cell(v) for v in (None, True, np.bool_(False), 3, np.int64(4), 0.1)] == \
        ["", "true", "false", "3", "4", "0.1"]
    assert format_cell(np.float64(1 / 3)) == repr(1 / 3)
    assert format_cell(math.nan) == "nan"


def test_empty_records_give_header_only():
    assert csv_text([], ["a", "b"]) == "a,b\n"


def test_named_tuple_header():
    text = csv_text([FreqRespPoint(0.1, 0.0, 0.2, 0.3, True)], FreqRespPoint._fields)
    assert text.splitlines() == ["sigma1,p1,p2,p3,stable", "0.1,0.0,0.2,0.3,true"]


def test_dict_and_sequence_rows():
    assert csv_text([{"b": 2, "a": 1}, (3, 4)], ["a", "b"]) == "a,b\n1,2\n3,4\n"
    with pytest.raises(ValueError):
        csv_text([(1, 2, 3)], ["a", "b"])


def test_line_endings(tmp_path):
    p = tmp_path / "t.csv"
    emit_csv([(1.5, "x")], ["v", "s"], p)
    raw = p.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    assert read_csv(p) == (["v", "s"], [[1.5, "x"]])


def test_emit_csv_without_path_writes_nothing(tmp_path):
    assert emit_csv([(1,)], ["a"]) == "a\n1\n"


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(st.floats(allow_nan=False), st.integers(-10**9, 10**9),
                          st.booleans()), max_size=20))
def test_csv_round_trip_bit_exact(rows):
    cols, back = parse_csv(csv_text(rows, ["x", "n", "flag"]))
    assert cols == ["x", "n", "flag"]
    assert len(back) == len(rows)
    for (x, n, f), (bx, bn, bf) in zip(rows, back):
        assert float(bx) == x and math.copysign(1, float(bx)) == math.copysign(1, x)
        assert bn == n and bf is f


# figures

def group(svg, i):
    m = re.search(rf'<g id="series-{i}">(.*?)\n   </g>', svg, re.S)
    assert m, f"series-{i} missing"
    return m.group(1)


def render(tmp_path, series, name="f.svg"):
    p = tmp_path / name
    emit_svg(series, {"title": "t"}, p)
    return p.read_text(encoding="utf-8")


def test_line_series_is_one_path(tmp_path):
    svg = render(tmp_path, [Series([0.0, 1.0], [0.0, 1.0])])
    body = group(svg, 0)
    paths = re.findall(r'<path d="([^"]*)"', body)
    assert len(paths) == 1
    assert len(re.findall(r"[ML] ", paths[0])) == 2


def test_scatter_series_uses_markers(tmp_path):
    svg = render(tmp_path, [Series([0.0, 1.0, 2.0], [1.0, 0.0, 1.0], kind="scatter")])
    body = group(svg, 0)
    assert body.count("<use ") == 3
    assert "<path d=" not in body.split("</defs>", 1)[1]


def test_branch_stability_styles(tmp_path):
    sigma = [0.0, 0.1, 0.2, 0.3]
    series = branch_series(sigma, [1.0, 2.0, 3.0, 4.0], [True, True, False, False], "p3")
    assert [s.dashed for s in series] == [False, True]
    svg = render(tmp_path, series)
    assert "stroke-dasharray" not in group(svg, 0)
    assert "stroke-dasharray" in group(svg, 1)


def test_branch_ranks_coexisting_equilibria():
    sigma = [0.0, 0.0, 0.0, 0.1]
    series = branch_series(sigma, [3.0, 1.0, 2.0, 1.5], [True, False, True, True], "p3")
    labelled = [s for s in series if s.label]
    assert [s.label for s in labelled] == ["p3 stable", "p3 unstable"]
    np.testing.assert_array_equal(labelled[0].y, [np.nan, 1.5])
    np.testing.assert_array_equal(labelled[1].y, [1.0, np.nan])
    upper = [s.y for s in series if not s.label]
    np.testing.assert_array_equal(upper, [[2.0, np.nan], [3.0, np.nan]])


def test_figure_bytes_reproducible(tmp_path):
    s = [Series(np.linspace(0, 1, 50), np.sin(np.linspace(0, 1, 50)), "a"),
         Series([0.5], [0.5], kind="scatter")]
    assert render(tmp_path, s, "a.svg") == render(tmp_path, s, "b.svg")


def test_png_output(tmp_path):
    from maglev.output import emit_figure
    p = emit_figure([Series([0, 1], [0, 1])], {}, tmp_path / "f.png")
    assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
