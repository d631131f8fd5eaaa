"""Tests for report rendering and value formatting."""

import hashlib
import json

import numpy as np
import pytest

from crlscore.formatting import (
    format_block,
    format_edge,
    format_independence,
    format_number,
    format_triple,
    format_value,
    jsonable,
    round_sig,
)
from crlscore.report import (
    SCHEMA,
    Report,
    emit_report,
    file_digest,
    render_json,
    render_text,
    write_report,
)


def sample_report(**kwargs):
    report = Report(version="0.1.0", command=["crlscore", "graph", "census"], **kwargs)
    report.add_section("census", {"chains": 0, "forks": 1, "ok": True})
    return report


class TestFormatting:
    """Tests for value formatting helpers."""

    def test_round_sig(self):
        """Test rounding to six significant digits."""
        assert round_sig(0.123456789) == 0.123457
        assert round_sig(15.348123) == 15.3481
        assert round_sig(0.0) == 0.0
        assert np.isnan(round_sig(float("nan")))

    def test_format_number(self):
        """Test the shortest six-digit rendering."""
        assert format_number(0.5) == "0.5"
        assert format_number(2.0) == "2"
        assert format_number(1234567.0) == "1.23457e+06"

    def test_edge_and_triple(self):
        """Test edge and triple rendering."""
        assert format_edge(("age", "bald")) == "age -> bald"
        assert format_triple(("bald", "age", "beard")) == "bald, age, beard"

    def test_independence(self):
        """Test the independence query notation."""
        assert format_independence("x", "y", ()) == "x _||_ y"
        assert format_independence("x", "y", ("a", "b")) == "x _||_ y | a, b"

    @pytest.mark.parametrize(
        ("value", "text"),
        [
            (None, "none"),
            (True, "true"),
            (False, "false"),
            (0.25, "0.25"),
            ([], "[]"),
            ([1, 0.5, "a"], "[1, 0.5, a]"),
            ("text", "text"),
        ],
    )
    def test_format_value(self, value, text):
        """Test rendering of JSON-ready values."""
        assert format_value(value) == text

    def test_jsonable(self):
        """Test conversion of tuples and numpy values."""
        value = jsonable(
            {
                "pair": ("a", "b"),
                "array": np.array([0.1234567, 2.0]),
                "count": np.int64(3),
                "flag": np.bool_(True),
                1: None,
            }
        )
        assert value == {
            "pair": ["a", "b"],
            "array": [0.123457, 2.0],
            "count": 3,
            "flag": True,
            "1": None,
        }
        json.dumps(value)

    def test_format_block_nested(self):
        """Test indentation of nested mappings and lists of mappings."""
        lines = format_block(
            {
                "score": 0.5,
                "models": {"m1": {"area": 0.25}},
                "entries": [{"query": "x _||_ y", "p": 0.01}],
            }
        )
        assert lines == [
            "  score: 0.5",
            "  models:",
            "    m1:",
            "      area: 0.25",
            "  entries:",
            "    - query: x _||_ y",
            "      p: 0.01",
        ]

    def test_format_block_truncates_labels(self):
        """Test that long keys are shortened with an ellipsis."""
        (line,) = format_block({"k" * 50: 1})
        label = line.strip().split(":")[0]
        assert len(label) == 40
        assert label.endswith("...")


class TestReport:
    """Tests for the report structure."""

    def test_to_dict(self):
        """Test the envelope keys and ordering of inputs."""
        report = sample_report(inputs={"b.csv": "sha256:2", "a.csv": "sha256:1"})
        data = report.to_dict()
        assert data["schema"] == SCHEMA
        assert data["tool"] == {"name": "crlscore", "version": "0.1.0"}
        assert list(data["inputs"]) == ["a.csv", "b.csv"]
        assert data["sections"]["census"]["forks"] == 1
        assert "warnings" not in data

    def test_warnings_included_when_present(self):
        """Test that warnings appear only when there are some."""
        report = sample_report(warnings=["low expected counts"])
        assert report.to_dict()["warnings"] == ["low expected counts"]

    def test_file_digest(self, tmp_path):
        """Test the content hash format."""
        path = tmp_path / "data.csv"
        path.write_bytes(b"a,b\n1,2\n")
        expected = hashlib.sha256(b"a,b\n1,2\n").hexdigest()
        assert file_digest(path) == f"sha256:{expected}"

    def test_add_input(self, tmp_path):
        """Test that inputs are recorded with their digest and None is skipped."""
        path = tmp_path / "g.json"
        path.write_text("{}")
        report = sample_report()
        report.add_input(path)
        report.add_input(None)
        assert report.inputs == {str(path): file_digest(path)}


class TestRendering:
    """Tests for text and JSON rendering."""

    def test_json_is_sorted(self):
        """Test stable key order and trailing newline."""
        text = render_json(sample_report())
        assert text.endswith("}\n")
        data = json.loads(text)
        assert list(data) == sorted(data)
        assert text == json.dumps(data, indent=2, sort_keys=True) + "\n"

    def test_text_layout(self):
        """Test the header, sections and warning lines."""
        report = sample_report(
            inputs={"g.json": "sha256:abc"}, warnings=["constant column z"]
        )
        assert render_text(report).splitlines() == [
            "crlscore 0.1.0",
            "command: crlscore graph census",
            "inputs:",
            "  g.json: sha256:abc",
            "[census]",
            "  chains: 0",
            "  forks: 1",
            "  ok: true",
            "warnings:",
            "  - constant column z",
        ]

    def test_emit_bytes(self):
        """Test that emitted reports are UTF-8 bytes."""
        data = emit_report(sample_report(), "json")
        assert json.loads(data.decode("utf-8"))["schema"] == SCHEMA

    def test_write_to_file(self, tmp_path):
        """Test writing a report to a path."""
        out = tmp_path / "report.txt"
        write_report(sample_report(), "text", out)
        assert out.read_text(encoding="utf-8").startswith("crlscore 0.1.0\n")

    def test_write_to_stdout(self, capsysbinary):
        """Test that "-" writes to standard output."""
        write_report(sample_report(), "json", "-")
        assert json.loads(capsysbinary.readouterr().out)["schema"] == SCHEMA
