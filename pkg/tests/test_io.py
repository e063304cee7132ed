from __future__ import annotations

import numpy as np
import pytest

from conftest import random_upper
from qubocompress import io as qio
from qubocompress.core import QuboInstance
from qubocompress.errors import ParseError


class TestTextFormat:
    def test_roundtrip_exact(self, tmp_path):
        q = random_upper(np.random.default_rng(0), 6)
        path = tmp_path / "q.txt"
        qio.write_qubo(q, path, comment="random")
        assert qio.read_qubo(path) == q

    def test_parse_example(self, three_var):
        text = "# example\n3\n0 0 -1\n0 1 0.4\n0 2 1\n1 1 0.4\n1 2 -0.8\n2 2 -1.5\n"
        assert qio.loads_text(text) == three_var

    def test_omitted_entries_are_zero(self):
        q = qio.loads_text("2\n0 1 3\n")
        assert np.array_equal(q.matrix, [[0, 3], [0, 0]])

    @pytest.mark.parametrize("text,line", [
        ("3\n0 0 1\n1 0 2\n", 3),
        ("3\n0 0 x\n", 2),
        ("2\n0 1\n", 2),
        ("two\n", 1),
        ("2\n0 5 1\n", 2),
    ])
    def test_errors_name_the_line(self, text, line):
        with pytest.raises(ParseError) as exc:
            qio.loads_text(text)
        assert exc.value.line == line
        assert f"line {line}" in str(exc.value)

    def test_missing_dimension(self):
        with pytest.raises(ParseError):
            qio.loads_text("# nothing\n")


class TestJsonFormat:
    def test_roundtrip(self, tmp_path):
        q = random_upper(np.random.default_rng(1), 4)
        path = tmp_path / "q.json"
        qio.write_qubo(q, path)
        assert qio.read_qubo(path) == q

    def test_invalid(self):
        with pytest.raises(ParseError):
            qio.loads_json('{"n": 2, "entries": [[1, 0, 3]]}')
        with pytest.raises(ParseError):
            qio.loads_json("{not json")

    def test_zero_matrix(self):
        q = QuboInstance.zeros(3)
        assert qio.to_json_obj(q) == {"n": 3, "entries": []}
        assert qio.loads_json(qio.dumps_json(q)) == q
