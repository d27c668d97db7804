import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from liebcavity import sweeps
from liebcavity.model import ModelParams

FAST = sweeps.EngineSettings(n_c=3, n_max=3, convergence="none")


@pytest.mark.parametrize("kwargs", [
    dict(swept_parameter="gamma", grid=(1.0,)),
    dict(swept_parameter="u", grid=()),
    dict(swept_parameter="u", grid=(0.1, 0.3, 0.2)),
    dict(swept_parameter="u", grid=(0.1, 0.1)),
    dict(swept_parameter="u", grid=(0.1,), engines=("exact",)),
    dict(swept_parameter="u", grid=(0.1,), engines=()),
])
def test_sweep_spec_validation(kwargs):
    with pytest.raises(ValueError):
        sweeps.SweepSpec(**kwargs)


def test_descending_grid_allowed():
    spec = sweeps.SweepSpec("delta", (1.0, 0.0, -1.0))
    assert spec.params_at(0.0).delta == 0.0


def test_settings_validation():
    with pytest.raises(ValueError):
        sweeps.EngineSettings(convergence="both")
    with pytest.raises(ValueError):
        sweeps.EngineSettings(n_c=1)
    assert sweeps.EngineSettings(n_max=3).total_cap == 3
    assert sweeps.EngineSettings(n_max=3, n_cap=5).total_cap == 5


def test_sweep_rows_in_grid_order():
    spec = sweeps.SweepSpec("u", (0.0, 0.1, 0.2), engines=("hierarchy", "meanfield"))
    rows = sweeps.run_sweep(spec, FAST)
    assert [(r["value"], r["engine"]) for r in rows] == [
        (u, e) for u in (0.0, 0.1, 0.2) for e in ("hierarchy", "meanfield")]
    h = sweeps.column(rows, "g2_11", "hierarchy")
    assert h[0] == pytest.approx(1.0, abs=1e-8) and h[1] > 1 and h[2] > 1
    assert np.all(sweeps.column(rows, "g2_11", "meanfield") == 1.0)
    assert all(r["status"] == "ok" for r in rows)


def test_failure_is_recorded_in_row():
    # hierarchy memory budget overflows at this cutoff; the sweep still returns rows
    settings = sweeps.EngineSettings(n_c=12, convergence="none")
    rows = sweeps.run_sweep(sweeps.SweepSpec("u", (0.1,), engines=("hierarchy", "meanfield")),
                            settings)
    assert rows[0]["status"] == "failed" and "MemoryError" in rows[0]["error"]
    assert math.isnan(rows[0]["g2_11"])
    assert rows[1]["status"] == "ok"


def test_convergence_column():
    row = sweeps.engine_row("hierarchy", ModelParams(), sweeps.EngineSettings(n_c=3))
    assert 0 < row["convergence_delta"] < 0.1
    prev = sweeps.engine_row("hierarchy", ModelParams(),
                             sweeps.EngineSettings(n_c=3, convergence="previous"))
    assert prev["convergence_delta"] > row["convergence_delta"]


def test_g2_undefined_status():
    row = sweeps.engine_row("hierarchy", ModelParams(f=0.0), FAST)
    assert row["status"] == "g2_undefined"


def test_threads_give_identical_rows():
    spec = sweeps.SweepSpec("delta", (-0.5, 0.5), engines=("hierarchy",))
    a = sweeps.run_sweep(spec, FAST, threads=1)
    b = sweeps.run_sweep(spec, FAST, threads=2)
    assert sweeps.rows_to_csv(a, sweeps.SWEEP_COLUMNS) == sweeps.rows_to_csv(b, sweeps.SWEEP_COLUMNS)


def test_local_maxima():
    x = [0, 1, 2, 3, 4, 5]
    assert sweeps.local_maxima(x, [0, 2, 1, 1, 3, 0]) == [1.0, 4.0]
    assert sweeps.local_maxima(x, [0, 1, 2, 3, 4, 5]) == []


@pytest.mark.parametrize("u, f", [(0.0, 0.5), (0.2, 0.0)])
def test_compare_limits(u, f):
    report = sweeps.compare(ModelParams(u=u, f=f), FAST)
    rows = {r["observable"]: r for r in report["rows"]}
    assert report["reliable"] == (f > 0)
    for name in ("n_tot", "n_b"):
        assert rows[name]["hierarchy"] == pytest.approx(rows[name]["oracle"], rel=1e-8, abs=1e-14)
        assert rows[name]["meanfield"] == pytest.approx(rows[name]["oracle"], rel=1e-8, abs=1e-14)
    if f > 0:
        assert rows["g2_11"]["rel_dev_hierarchy"] < 1e-7


def test_compare_default_point():
    report = sweeps.compare(ModelParams(), sweeps.EngineSettings(n_c=4, n_max=4))
    rows = {r["observable"]: r for r in report["rows"]}
    assert report["reliable"]
    assert rows["g2_11"]["rel_dev_hierarchy"] < 0.01
    assert rows["g2_11"]["rel_dev_meanfield"] > 0.9


def test_engine_tables():
    deltas = (-0.5, 0.0, 0.5)
    for engine, columns in (("hierarchy", sweeps.HIERARCHY_COLUMNS),
                            ("meanfield", sweeps.MEANFIELD_COLUMNS),
                            ("oracle", sweeps.ORACLE_COLUMNS)):
        rows = sweeps.engine_table(engine, ModelParams(), deltas, FAST)
        assert [r["delta"] for r in rows] == list(deltas)
        assert set(columns) <= set(rows[0]) | {"error"}


def test_spectrum_tables():
    t = sweeps.spectrum_tables(ModelParams())
    assert len(t["single_particle"]) == 6
    assert len(t["two_photon"]) == 21
    assert len(t["resonant_cluster"]) == 5 * len(sweeps.CLUSTER_U_GRID)
    assert sorted(r["energy"] for r in t["single_particle"])[2] == pytest.approx(0.0, abs=1e-12)


def test_disorder_scan_small():
    out = sweeps.disorder_scan(ModelParams(), "freq", n_realizations=3, w_grid=(0.0, 0.5),
                               settings=FAST, spot_checks=1)
    assert len(out["rows"]) == 2 * 5
    assert {r["status"] for r in out["spot"]} <= {"ok", "cutoff_saturated"}
    zero = [r for r in out["rows"] if r["w"] == 0.0]
    assert all(r["std"] == 0.0 for r in zero)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_csv_float_round_trip(x):
    assert float(sweeps.format_value(x)) == x


def test_csv_write_read(tmp_path):
    rows = [{"a": 0.1, "b": 3, "c": float("nan"), "d": True, "e": "x"}]
    path = sweeps.write_csv(tmp_path / "sub" / "t.csv", rows, "abcde")
    back = sweeps.read_csv(path)[0]
    assert float(back["a"]) == 0.1 and back["b"] == "3" and back["c"] == "nan"
    assert back["d"] == "1" and back["e"] == "x"
