"""Sweep tables: content, determinism, row regeneration, serialization."""

import csv
import json
import math

import pytest

from qdphotocell import (
    INFINITE,
    maximize_power,
    params_from_scaled,
    run_fig2,
    run_fig3a,
    run_fig3b,
)
from qdphotocell.errors import ConfigError, OutputExistsError
from qdphotocell.experiments import default_eta_c_grid, default_r_grid

FAST_OPT = {"seeds_per_dim": 8, "refine_top": 4}


@pytest.fixture(scope="module")
def small_fig2():
    return run_fig2([0.0, 0.5, 1.0], workers=1, **FAST_OPT)


class TestGrids:
    def test_default_r_grid(self):
        grid = default_r_grid()
        assert len(grid) == 21
        assert grid[0] == 0.0 and grid[-1] == 1.0

    def test_default_eta_c_grid(self):
        grid = default_eta_c_grid()
        assert len(grid) == 19
        assert grid[0] == 0.05 and grid[-1] == 0.95

    def test_bad_step_rejected(self):
        with pytest.raises(ConfigError):
            default_r_grid(0.3)
        with pytest.raises(ConfigError):
            default_eta_c_grid(step=-0.1)


class TestFig2:
    def test_smoke_grid(self, small_fig2):
        assert len(small_fig2.rows) == 9
        names = small_fig2.column_names()
        for required in ("r_p", "r_l", "x_l", "x_r", "p_max", "eta",
                         "abs_rho12", "j", "converged"):
            assert required in names

    def test_diagonal_rows_have_no_coherence(self, small_fig2):
        for row in small_fig2.rows:
            if row["r_p"] == row["r_l"] and row["eta"] is not None:
                assert row["abs_rho12"] < 1e-12

    def test_rows_regenerate_from_echoed_inputs(self, small_fig2):
        cfg = small_fig2.provenance["config"]
        for row in small_fig2.rows:
            if row["eta"] is None:
                continue
            params = params_from_scaled(
                row["x_g"], 0.0, 0.0, temp=cfg["temp"], temp_p=cfg["temp_p"],
                gamma=cfg["gamma"], r_p=row["r_p"], r_l=row["r_l"], tau=cfg["tau"])
            res = maximize_power(params, free=("x_l", "x_r"), **cfg["optimizer"])
            assert res.p_max == row["p_max"]          # bit-identical regeneration
            assert res.x_opt["x_l"] == row["x_l"]
            assert res.x_opt["x_r"] == row["x_r"]

    def test_determinism(self, small_fig2):
        again = run_fig2([0.0, 0.5, 1.0], workers=1, **FAST_OPT)
        assert again.rows == small_fig2.rows

    def test_parallel_matches_serial(self, small_fig2):
        parallel = run_fig2([0.0, 0.5, 1.0], workers=2, **FAST_OPT)
        assert parallel.rows == small_fig2.rows

    def test_dark_state_corner_has_a_value(self, small_fig2):
        corner = [r for r in small_fig2.rows
                  if r["r_p"] == 1.0 and r["r_l"] == 1.0]
        assert len(corner) == 1
        assert corner[0]["eta"] is not None
        assert corner[0]["abs_rho12"] < 1e-12

    def test_bad_grid_rejected(self):
        with pytest.raises(ConfigError):
            run_fig2([0.0, 1.5], workers=1)


class TestFig3:
    def test_fig3a_smoke(self):
        table = run_fig3a(r_l_values=(0.0, 0.9), eta_c_grid=(0.3, 0.6),
                          workers=2, **FAST_OPT)
        assert len(table.rows) == 4
        for row in table.rows:
            assert row["eta_ca"] == pytest.approx(
                1.0 - math.sqrt(1.0 - row["eta_c"]), rel=1e-12)
            assert row["eta_at_pmax"] is not None
            assert row["temp"] == pytest.approx((1.0 - row["eta_c"]) * 5780.0)
        # coherent lead decoupling wins at both grid points
        by = {(r["r_l"], r["eta_c"]): r["eta_at_pmax"] for r in table.rows}
        assert by[(0.0, 0.6)] >= by[(0.9, 0.6)] - 1e-7

    def test_fig3b_smoke(self):
        table = run_fig3b(tau_values=(0.0, INFINITE), eta_c_grid=(0.6,),
                          workers=1, **FAST_OPT)
        assert len(table.rows) == 2
        by_tau = {r["tau"]: r["eta_at_pmax"] for r in table.rows}
        assert set(by_tau) == {0.0, "inf"}
        assert by_tau[0.0] >= by_tau["inf"] - 1e-7


class TestSerialization:
    def test_csv_round_trip(self, small_fig2, tmp_path):
        path = tmp_path / "fig2.csv"
        small_fig2.to_csv(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            rows = list(reader)
        assert len(rows) == len(small_fig2.rows)
        for got, want in zip(rows, small_fig2.rows):
            assert float(got["p_max"]) == want["p_max"]  # 17 digits round-trip
            assert got["eta"] == ("" if want["eta"] is None
                                  else format(want["eta"], ".17g"))

    def test_json_document(self, small_fig2, tmp_path):
        path = tmp_path / "fig2.json"
        small_fig2.to_json(path)
        doc = json.loads(path.read_text())
        assert {c["name"] for c in doc["columns"]} == set(small_fig2.column_names())
        assert len(doc["rows"]) == 9
        prov = doc["provenance"]
        assert prov["package"] == "qdphotocell"
        assert prov["config"]["sweep"] == "fig2"
        assert "created_utc" in prov

    def test_infinite_tau_serializes(self, tmp_path):
        table = run_fig3b(tau_values=(INFINITE,), eta_c_grid=(0.5,),
                          workers=1, **FAST_OPT)
        jpath = tmp_path / "t.json"
        table.to_json(jpath)
        doc = json.loads(jpath.read_text())
        assert doc["rows"][0]["tau"] == "inf"
        cpath = tmp_path / "t.csv"
        table.to_csv(cpath)
        header, row = cpath.read_text().splitlines()[:2]
        assert row.split(",")[header.split(",").index("tau")] == "inf"

    def test_overwrite_refusal_and_force(self, small_fig2, tmp_path):
        path = tmp_path / "out.csv"
        small_fig2.to_csv(path)
        with pytest.raises(OutputExistsError):
            small_fig2.to_csv(path)
        small_fig2.to_csv(path, force=True)

    def test_byte_identical_reruns(self, small_fig2, tmp_path):
        again = run_fig2([0.0, 0.5, 1.0], workers=1, **FAST_OPT)
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        small_fig2.to_csv(a)
        again.to_csv(b)
        assert a.read_bytes() == b.read_bytes()
        # JSON differs only in the provenance timestamp
        ja, jb = tmp_path / "a.json", tmp_path / "b.json"
        small_fig2.to_json(ja)
        again.to_json(jb)
        da, db = json.loads(ja.read_text()), json.loads(jb.read_text())
        da["provenance"].pop("created_utc")
        db["provenance"].pop("created_utc")
        assert da == db

    def test_unknown_format_rejected(self, small_fig2, tmp_path):
        with pytest.raises(ConfigError):
            small_fig2.write(tmp_path / "x.xml", "xml")
