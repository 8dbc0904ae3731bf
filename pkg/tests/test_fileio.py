import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mabk_entropy.entropy import bound_F, bound_G
from mabk_entropy.ghz import tau_state, to_density_matrix
from mabk_entropy.fileio import (
    CSV_HEADER,
    FIXTURES,
    CurveRow,
    StateFileError,
    emit_csv,
    format_number,
    format_state,
    parse_csv,
    parse_state,
    quantize,
    read_state,
    write_state,
)
from mabk_entropy.linalg import NotDensityMatrixError, random_density_matrix

finite = st.floats(allow_nan=False, allow_infinity=False)


class TestFormatNumber:
    @pytest.mark.parametrize(
        "x, text",
        [(0.0, "0.0"), (2.0, "2.0"), (0.1, "0.1"), (1 / 3, "0.333333333333"), (2 * math.sqrt(2), "2.82842712475"), (1e-20, "1e-20")],
    )
    def test_examples(self, x, text):
        assert format_number(x) == text

    @given(finite)
    def test_twelve_digits(self, x):
        assert format_number(x) == repr(float(format_number(x)))
        assert float(format_number(x)) == pytest.approx(x, rel=1e-11, abs=0)
        assert quantize(quantize(x)) == quantize(x)

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            format_number(float("nan"))


class TestStateFiles:
    def test_round_trip(self, rng):
        rho = random_density_matrix(8, rng)
        text = format_state(rho, comments=["random"])
        assert text.splitlines()[0] == "QSTATE 1 8"
        assert text.splitlines()[-1] == "# random"
        assert np.array_equal(parse_state(text), rho)

    def test_write_read(self, tmp_path, rng):
        rho = random_density_matrix(4, rng)
        path = tmp_path / "s.qstate"
        write_state(path, rho)
        assert np.array_equal(read_state(path), rho)

    def test_fixtures(self, ghz3, id8, fixed_outcome_state):
        expected = {
            "ghz3": ghz3,
            "tau_half": to_density_matrix(tau_state(0.5)),
            "id8": id8,
            "remark1_state": fixed_outcome_state,
        }
        assert set(expected) == set(FIXTURES)
        for name, rho in expected.items():
            assert np.allclose(read_state(name), rho, atol=1e-15), name

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "QSTATE 2 1\n1,0\n",
            "QSTATE 1 x\n",
            "QSTATE 1 0\n",
            "QSTATE 1 2\n1,0 0,0\n",
            "QSTATE 1 2\n1,0 0,0\n0,0\n",
            "QSTATE 1 2\n1,0 0;0\n0,0 0,0\n",
            "QSTATE 1 2\n1,0 a,0\n0,0 0,0\n",
            "QSTATE 1 1\n1,0\ntrailing\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(StateFileError):
            parse_state(text)

    def test_comments_and_blank_lines_allowed(self):
        assert parse_state("QSTATE 1 1\n1,0\n\n# note\n")[0, 0] == 1

    def test_not_a_state(self):
        with pytest.raises(NotDensityMatrixError):
            parse_state("QSTATE 1 2\n1,0 0,0\n0,0 1,0\n")

    def test_tolerance_flag(self):
        text = "QSTATE 1 2\n0.5000001,0 0,0\n0,0 0.5,0\n"
        with pytest.raises(NotDensityMatrixError):
            parse_state(text, tol=1e-9)
        assert parse_state(text, tol=1e-5).shape == (2, 2)
        assert parse_state(text, check=False)[0, 0] == 0.5000001

    def test_missing_file(self, tmp_path):
        with pytest.raises(OSError):
            read_state(tmp_path / "absent.qstate")


class TestCurveCsv:
    def _rows(self):
        ms = np.linspace(2.0, 4.0, 7)
        return [CurveRow(float(m), bound_F(m), bound_G(m), None, 0.5 if m > 3 else None) for m in ms]

    def test_header_and_empty_cells(self):
        text = emit_csv(self._rows())
        lines = text.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert lines[1] == "2.0,0.0,0.0,,,"
        assert len(lines) == 8

    def test_round_trip_exact(self):
        rows = self._rows()
        parsed = parse_csv(emit_csv(rows))
        assert emit_csv(parsed) == emit_csv(rows)
        assert parse_csv(emit_csv(parsed)) == parsed

    @given(st.lists(finite, min_size=1, max_size=6, unique=True))
    def test_round_trip_property(self, values):
        ms = sorted({quantize(v) for v in values})
        rows = [CurveRow(m, quantize(m / 3), None, None, None, quantize(-m)) for m in ms]
        assert parse_csv(emit_csv(rows)) == rows

    def test_cells_match_bounds(self):
        ms = np.linspace(2.0, 4.0, 7)
        for m, row in zip(ms, parse_csv(emit_csv(self._rows()))):
            assert row.F == quantize(bound_F(m)) and row.G == quantize(bound_G(m))

    def test_m_strictly_increasing(self):
        with pytest.raises(ValueError):
            emit_csv([CurveRow(3.0), CurveRow(3.0)])
        with pytest.raises(ValueError):
            emit_csv([CurveRow(3.0), CurveRow(2.5)])

    @pytest.mark.parametrize("text", ["a,b\n1,2\n", ",".join(CSV_HEADER) + "\n1,2\n", ",".join(CSV_HEADER) + "\n,1,,,,\n"])
    def test_parse_errors(self, text):
        with pytest.raises(ValueError):
            parse_csv(text)
