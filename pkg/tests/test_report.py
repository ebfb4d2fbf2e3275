import json
from fractions import Fraction

import numpy as np
import pytest

from utils.report import ReportExporter, to_plain


def test_to_plain_conversions():
    data = to_plain({
        "array": np.array([1.5, 2.0]),
        "int": np.int64(3),
        "flag": np.bool_(True),
        "complex": 1 - 2j,
        "exact": Fraction(1, 3),
        "nan": float("nan"),
        1: (np.float64(0.25),),
    })
    assert data["array"] == [1.5, 2.0]
    assert data["int"] == 3 and isinstance(data["int"], int)
    assert data["flag"] is True
    assert data["complex"] == {"re": 1.0, "im": -2.0}
    assert data["exact"] == {"value": 1 / 3, "exact": "1/3"}
    assert data["nan"] == "nan"
    assert data["1"] == [0.25]


def test_json_is_sorted_and_newline_terminated():
    text = ReportExporter.render_json({"b": 1, "a": {"d": 0.1, "c": 2}})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"c"') < text.index('"d"')
    assert json.loads(text)["a"]["d"] == 0.1


def test_exports(tmp_path):
    exporter = ReportExporter(output_dir=str(tmp_path / "nested"), name="slln")
    json_path = exporter.export_json({"passed": None, "value": 0.5})
    assert json.loads(open(json_path, encoding="utf-8").read()) == {"passed": None, "value": 0.5}

    rows = [{"n": 1, "value": 0.5, "extra": "x"}, {"n": 2, "value": 0.25, "extra": "y"}]
    csv_path = exporter.export_csv(rows, columns=["n", "value"])
    assert open(csv_path, encoding="utf-8").read() == "n,value\n1,0.5\n2,0.25\n"

    md_path = exporter.export_markdown("qevar slln", {"S_N/N": 0.001}, rows, ["n", "value"])
    summary = open(md_path, encoding="utf-8").read()
    assert summary.startswith("# qevar slln\n")
    assert "| n | value |" in summary
    assert "**S_N/N:** 0.001" in summary


def test_empty_exports_are_rejected(tmp_path):
    exporter = ReportExporter(output_dir=str(tmp_path), name="empty")
    with pytest.raises(ValueError):
        exporter.export_json({})
    with pytest.raises(ValueError):
        exporter.export_csv([])
