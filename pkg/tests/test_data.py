import numpy as np
import pytest

from heatshift.clock import DT_HOURS, QUARTERS_PER_YEAR
from heatshift.data import (DATA_SEEDS, FIXTURE_HOUSES, MAX_QUARTER_DRAW_L,
                            PRETRAIN_PROFILE, SynthProfile, YearDataset,
                            dataset_metrics, fixture_dataset, load_csv,
                            save_csv, synth_year)
from .conftest import make_year


class TestSynthYear:
    def test_same_seed_is_identical(self):
        a = synth_year(7, PRETRAIN_PROFILE)
        b = synth_year(7, PRETRAIN_PROFILE)
        assert np.array_equal(a.pv_kw, b.pv_kw)
        assert np.array_equal(a.load_kw, b.load_kw)
        assert np.array_equal(a.dhw_l, b.dhw_l)

    def test_different_seed_differs(self):
        a = synth_year(7, PRETRAIN_PROFILE)
        b = synth_year(8, PRETRAIN_PROFILE)
        assert not np.array_equal(a.pv_kw, b.pv_kw)

    def test_zero_pv_scale_gives_zero_pv(self):
        profile = SynthProfile("nopv", pv_scale_kwp=0.0, daily_load_kwh=10.0,
                               daily_dhw_l=100.0, inverter_kw=4.0)
        ds = synth_year(3, profile)
        assert ds.pv_kw.max() == 0.0

    def test_dhw_calibration(self):
        profile = SynthProfile("cal", pv_scale_kwp=4.0, daily_load_kwh=10.0,
                               daily_dhw_l=120.0)
        metrics = dataset_metrics(synth_year(11, profile))
        assert abs(metrics.dhw_l_per_day - 120.0) <= 10.0

    def test_load_calibration_is_exact(self):
        profile = SynthProfile("cal", pv_scale_kwp=4.0, daily_load_kwh=12.5,
                               daily_dhw_l=80.0)
        metrics = dataset_metrics(synth_year(11, profile))
        assert metrics.annual_load_kwh == pytest.approx(12.5 * 365, rel=1e-9)

    def test_pv_calibration_within_ten_percent(self):
        profile = SynthProfile("cal", pv_scale_kwp=5.0, daily_load_kwh=10.0,
                               daily_dhw_l=80.0)
        metrics = dataset_metrics(synth_year(11, profile))
        assert abs(metrics.annual_pv_kwh - 5000.0) / 5000.0 <= 0.10

    def test_quarter_draw_cap(self):
        ds = synth_year(5, SynthProfile("big", pv_scale_kwp=4.0,
                                        daily_load_kwh=10.0, daily_dhw_l=190.0))
        assert ds.dhw_l.max() <= MAX_QUARTER_DRAW_L + 1e-12

    def test_pv_respects_inverter(self):
        profile = SynthProfile("inv", pv_scale_kwp=8.0, daily_load_kwh=10.0,
                               daily_dhw_l=80.0, inverter_kw=3.0)
        ds = synth_year(2, profile)
        assert ds.pv_kw.max() <= 3.0 + 1e-12


class TestDatasetMetrics:
    def test_zero_dataset(self, zero_year):
        m = dataset_metrics(zero_year)
        assert (m.dhw_l_per_day, m.annual_load_kwh, m.annual_pv_kwh) == (0, 0, 0)

    def test_constant_load(self):
        m = dataset_metrics(make_year(load=0.5))
        assert m.annual_load_kwh == pytest.approx(0.5 * DT_HOURS * QUARTERS_PER_YEAR)  # 4380


class TestValidation:
    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="35040"):
            YearDataset(np.zeros(100), np.zeros(100), np.zeros(100))

    def test_negative_values_rejected(self):
        pv = np.zeros(QUARTERS_PER_YEAR)
        pv[5] = -0.1
        with pytest.raises(ValueError, match="negative"):
            YearDataset(pv, np.zeros(QUARTERS_PER_YEAR), np.zeros(QUARTERS_PER_YEAR))

    def test_pv_sanity_bound(self):
        pv = np.full(QUARTERS_PER_YEAR, 3.0)  # 26 MWh/year
        with pytest.raises(ValueError, match="sanity"):
            YearDataset(pv, np.zeros(QUARTERS_PER_YEAR), np.zeros(QUARTERS_PER_YEAR))

    def test_record_accessor(self):
        ds = make_year(pv=1.0, load=0.5, dhw=2.0)
        rec = ds.record(100)
        assert (rec.pv_kw, rec.load_kw, rec.dhw_l) == (1.0, 0.5, 2.0)


class TestCsv:
    def test_round_trip_identity(self, tmp_path):
        ds = synth_year(9, PRETRAIN_PROFILE)
        first = tmp_path / "a.csv"
        second = tmp_path / "b.csv"
        save_csv(ds, first)
        loaded = load_csv(first)
        save_csv(loaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_row_count_error_names_counts(self, tmp_path):
        path = tmp_path / "short.csv"
        lines = ["quarter,pv_kw,load_kw,dhw_l"]
        lines += [f"{q},0.000000,0.000000,0.000000" for q in range(QUARTERS_PER_YEAR - 1)]
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match=r"expected 35040 data rows, found 35039"):
            load_csv(path)

    def test_negative_value_cites_row(self, tmp_path):
        ds = make_year()
        path = tmp_path / "neg.csv"
        save_csv(ds, path)
        lines = path.read_text().splitlines()
        lines[100] = "99,-1.000000,0.000000,0.000000"  # data row 100
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="row 100.*negative pv_kw"):
            load_csv(path)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,pv,load,dhw\n")
        with pytest.raises(ValueError, match="header"):
            load_csv(path)

    def test_bad_column_count_cites_row(self, tmp_path):
        ds = make_year()
        path = tmp_path / "cols.csv"
        save_csv(ds, path)
        lines = path.read_text().splitlines()
        lines[1] = "0,0.000000,0.000000"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="row 1.*4 columns"):
            load_csv(path)


class TestFixtures:
    def test_all_fixture_houses_registered(self):
        assert set(FIXTURE_HOUSES) == {"house1", "house2", "house3", "house4", "house5"}
        assert set(DATA_SEEDS) == set(FIXTURE_HOUSES) | {"pretrain"}

    def test_fixtures_span_documented_ranges(self):
        dhw, load, pv = [], [], []
        for name in FIXTURE_HOUSES:
            m = dataset_metrics(fixture_dataset(name))
            dhw.append(m.dhw_l_per_day)
            load.append(m.annual_load_kwh)
            pv.append(m.annual_pv_kwh)
        assert min(dhw) <= 35 and max(dhw) >= 180
        assert all(3000 <= x <= 6000 for x in load)
        assert all(7000 <= x <= 8300 for x in pv)

    def test_unknown_fixture_rejected(self):
        with pytest.raises(KeyError):
            fixture_dataset("house9")
