import math

import pytest

from emdarp.model import build_model
from emdarp.mps import format_mps, write_mps
from emdarp.tools.solve_mps import read_mps

from conftest import make_instance


@pytest.fixture
def small_model():
    return build_model(make_instance(n_requests=2, n_stations=1, dups=1))


def _write_and_read(model, tmp_path):
    path = tmp_path / "model.mps"
    write_mps(model, str(path))
    return read_mps(str(path))


def test_round_trip_rows_and_columns(small_model, tmp_path):
    prob = _write_and_read(small_model, tmp_path)
    assert prob.name == "EMDARP"
    assert len(prob.row_order) == len(small_model.constraints)
    sense_map = {"<=": "L", ">=": "G", "=": "E"}
    for row_name, con in zip(prob.row_order, small_model.constraints):
        assert prob.row_sense[row_name] == sense_map[con.sense]
        assert prob.rhs.get(row_name, 0.0) == con.rhs

    assert prob.col_order == list(small_model.catalog.variables)
    for row_name, con in zip(prob.row_order, small_model.constraints):
        for var, coef in con.coeffs.items():
            if coef != 0.0:
                assert prob.columns[var][row_name] == coef


def test_round_trip_objective(small_model, tmp_path):
    prob = _write_and_read(small_model, tmp_path)
    obj_row = prob.objective_row
    for var, coef in small_model.objective.items():
        if coef != 0.0:
            assert prob.columns[var][obj_row] == coef
    assert prob.objective_constant == pytest.approx(small_model.objective_constant)


def test_round_trip_bounds_and_integrality(small_model, tmp_path):
    prob = _write_and_read(small_model, tmp_path)
    for var in small_model.catalog.variables.values():
        assert prob.integer.get(var.name, False) == var.integer, var.name
        lo = prob.lower.get(var.name, 0.0)
        hi = prob.upper.get(var.name, math.inf)
        assert lo == pytest.approx(var.lb)
        if math.isfinite(var.ub):
            assert hi == pytest.approx(var.ub)
        else:
            assert not math.isfinite(hi)


def test_export_is_deterministic(small_model):
    again = build_model(make_instance(n_requests=2, n_stations=1, dups=1))
    assert format_mps(small_model) == format_mps(again)


def test_free_format_is_plain_ascii(small_model):
    text = format_mps(small_model)
    assert text.startswith("NAME")
    assert text.rstrip().endswith("ENDATA")
    assert text.isascii()
    sections = [line for line in text.splitlines() if line and not line[0].isspace()]
    assert sections == ["NAME EMDARP", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]
