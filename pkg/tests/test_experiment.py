import json
import math

import numpy as np
import pytest

from heatshift.clock import QUARTERS_PER_YEAR, month_bounds
from heatshift.config import Settings
from heatshift.data import PRETRAIN_PROFILE, fixture_dataset, synth_year
from heatshift.env import EnvConfig, Simulation
from heatshift.experiment import (ExperimentPlan, MonthlyMetrics, RunReport,
                                  build_report, compare, evaluate, pearson,
                                  pretrain, pretrain_test_correlation)
from heatshift.tariff import Bill, BillingLedger, mmp, yearly_bill
from heatshift.agents import Critic, PolicyParams, create_actor
from heatshift.experiment import _training_rngs

from .conftest import make_year


def fake_report(controller, house, seed, bill_total, mmp_kw=3.0, scr=0.5,
                pretrain_trace=()):
    fixed = 100.0
    energy = bill_total - fixed - 47.78 * mmp_kw
    bill = Bill(energy_eur=energy, capacity_eur=47.78 * mmp_kw,
                tax_energy_eur=0.0, tax_fixed_eur=fixed, mmp_kw=mmp_kw)
    return RunReport(
        controller=controller, house=house, seed=seed, online=False,
        backend="test", monthly=[], mmp_kw=mmp_kw, bill=bill,
        billed_energy_kwh=energy / 0.1 if energy else 0.0, ewh_kwh=1000.0,
        sc_kwh=scr * 1000.0, self_consumption_ratio=scr, mean_reward=0.05,
        comfort_fraction=1.0, min_sensor_c=44.0,
        pretrain_years=3 if pretrain_trace else 0,
        pretrain_yearly_mean_rewards=list(pretrain_trace),
    )


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3], [1, 2, 3]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_hand_computed_four_points(self):
        # x = [1,2,3,5], y = [2,1,4,6]: deviations give sum(dx*dy) = 10.25,
        # sum(dx^2) = 8.75, sum(dy^2) = 14.75 (spreadsheet-style arithmetic)
        expected = 10.25 / math.sqrt(8.75 * 14.75)
        assert pearson([1, 2, 3, 5], [2, 1, 4, 6]) == pytest.approx(expected, abs=1e-12)

    def test_zero_variance_undefined(self):
        assert pearson([1, 1, 1], [1, 2, 3]) is None

    def test_too_few_points_undefined(self):
        assert pearson([1], [2]) is None


class TestCompare:
    def test_identical_reports_zero_deltas(self):
        reports = [fake_report("hc", "h1", 0, 100.0),
                   fake_report("rl-expert", "h1", 0, 100.0)]
        table = compare(reports)
        row = table.houses["h1"]["rl-expert"]
        assert row["d_bill_vs_hc_pct"] == pytest.approx(0.0)
        assert row["d_mmp_vs_hc_pct"] == pytest.approx(0.0)

    def test_headline_style_percentage(self):
        reports = [fake_report("hc", "h1", 0, 100.0),
                   fake_report("rl-expert", "h1", 0, 85.49)]
        table = compare(reports)
        assert table.houses["h1"]["rl-expert"]["d_bill_vs_hc_pct"] == pytest.approx(-14.51)

    def test_best_rbc_minimises_bill_per_house(self):
        reports = [fake_report("hc", "h1", 0, 100.0),
                   fake_report("rbc:10", "h1", 0, 95.0),
                   fake_report("rbc:11", "h1", 0, 90.0),
                   fake_report("rbc:12", "h1", 0, 93.0)]
        table = compare(reports)
        assert table.best_rbc["h1"] == "rbc:11"

    def test_missing_reference_rejected(self):
        with pytest.raises(ValueError, match="hc"):
            compare([fake_report("rbc:10", "h1", 0, 95.0)])

    def test_seed_statistics(self):
        reports = [fake_report("hc", "h1", 0, 100.0)]
        reports += [fake_report("rl-expert", "h1", s, 90.0 + s) for s in range(3)]
        table = compare(reports)
        row = table.houses["h1"]["rl-expert"]
        assert row["n_runs"] == 3
        assert row["bill_mean_eur"] == pytest.approx(91.0)
        assert row["bill_std_eur"] == pytest.approx(np.std([90, 91, 92], ddof=1))

    def test_averaged_rows(self):
        reports = []
        for house, hc_bill, rl_bill in (("h1", 100.0, 90.0), ("h2", 200.0, 150.0)):
            reports.append(fake_report("hc", house, 0, hc_bill))
            reports.append(fake_report("rl-expert", house, 0, rl_bill))
        table = compare(reports)
        avg = table.averaged["rl-expert"]
        assert avg["bill_mean_eur"] == pytest.approx(120.0)
        assert avg["d_bill_vs_hc_pct"] == pytest.approx(100 * (120 - 150) / 150)

    def test_csv_and_json_outputs(self, tmp_path):
        reports = [fake_report("hc", "h1", 0, 100.0),
                   fake_report("rbc:10", "h1", 0, 95.0)]
        table = compare(reports)
        table.save_json(tmp_path / "t.json")
        table.save_csv(tmp_path / "t.csv")
        body = json.loads((tmp_path / "t.json").read_text())
        assert body["reference"] == "hc"
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0].startswith("house,controller")
        assert len(lines) == 1 + 2 + 2  # header, two house rows, two averaged


class TestCorrelation:
    def test_groups_and_average(self):
        reports = []
        xs = [0.1, 0.2, 0.3, 0.5]
        ys = [0.2, 0.1, 0.4, 0.6]
        for seed, (x, y) in enumerate(zip(xs, ys)):
            r = fake_report("rl-expert", "h1", seed, 100.0,
                            pretrain_trace=[0.0, x])
            r.mean_reward = y
            reports.append(r)
        summary = pretrain_test_correlation(reports)
        assert "rl-expert/h1" in summary.per_group
        assert summary.average == pytest.approx(pearson(xs, ys))

    def test_too_few_runs_skipped(self):
        reports = [fake_report("rl-expert", "h1", s, 100.0, pretrain_trace=[0.1])
                   for s in range(2)]
        summary = pretrain_test_correlation(reports)
        assert summary.per_group == {}
        assert summary.average is None

    def test_zero_variance_reported_as_undefined(self):
        reports = []
        for seed in range(3):
            r = fake_report("rl-expert", "h1", seed, 100.0, pretrain_trace=[0.5])
            r.mean_reward = 0.3
            reports.append(r)
        summary = pretrain_test_correlation(reports)
        assert summary.per_group["rl-expert/h1"] is None
        assert summary.average is None


class TestEvaluate:
    def test_report_matches_trace_recomputation(self):
        settings = Settings()
        ds = fixture_dataset("house1")
        env = Simulation(ds, settings.tank_params(), settings.env_config(7.9),
                         record=True)
        from heatshift.baselines import HysteresisController

        controller = HysteresisController(settings.t_min_c, settings.t_max_c)
        obs = env.observation()
        while env.remaining() > 0:
            obs = env.step(controller.act(obs)).observation
        report = build_report(env.trace, settings, ds, "hc", "house1", 0, False)

        # independent re-billing from the same trace
        net = env.trace.net_kw
        peaks = [float(max(np.max(net[a:b]), 0.0)) for a, b in month_bounds()]
        ledger = BillingLedger(monthly_peaks=peaks,
                               lambda_cap=settings.lambda_cap,
                               lambda_e=settings.lambda_e,
                               lambda_tax_e=settings.lambda_tax_e,
                               lambda_tax_fixed=settings.lambda_tax_fixed,
                               total_energy_kwh=float(np.maximum(net, 0).sum() * 0.25))
        recomputed = yearly_bill(ledger)
        assert report.bill.total_eur == recomputed.total_eur
        assert report.mmp_kw == mmp(peaks)
        assert all(report.monthly[i].p_max_kw == peaks[i] for i in range(12))

    def test_hc_determinism_bytewise(self, tmp_path):
        settings = Settings()
        ds = fixture_dataset("house3")
        a = evaluate("hc", ds, "house3", 0, settings, inverter_kw=7.5)
        b = evaluate("hc", ds, "house3", 0, settings, inverter_kw=7.5)
        pa, pb = tmp_path / "a.json", tmp_path / "b.json"
        a.save(pa)
        b.save(pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_zero_draw_zero_ewh_scr_convention(self):
        settings = Settings(loss_w_per_k=0.0)
        ds = make_year()  # nothing happens all year
        report = evaluate("hc", ds, "empty", 0, settings, inverter_kw=4.0)
        assert report.ewh_kwh == 0.0
        assert report.self_consumption_ratio == 0.0
        assert report.comfort_fraction == 1.0

    def test_rbc_full_pv_coverage_gives_unit_scr(self):
        settings = Settings()
        pv = np.zeros(QUARTERS_PER_YEAR)
        dhw = np.zeros(QUARTERS_PER_YEAR)
        for day in range(365):
            pv[day * 96 + 40:day * 96 + 64] = 5.0   # 10:00 - 16:00
            dhw[day * 96 + 68] = 4.0                # small evening draw
        ds = make_year(pv=pv, load=0.1, dhw=dhw)
        report = evaluate("rbc:12", ds, "sunny", 0, settings, inverter_kw=5.0)
        assert report.ewh_kwh > 0
        assert report.self_consumption_ratio == pytest.approx(1.0)

    def test_unknown_controller_rejected(self, zero_year):
        with pytest.raises(ValueError, match="controller"):
            evaluate("magic", zero_year, "h", 0, Settings(), inverter_kw=4.0)

    def test_monthly_peak_brute_force_oracle(self):
        settings = Settings()
        ds = fixture_dataset("house2")
        report = evaluate("rbc:11", ds, "house2", 0, settings, inverter_kw=8.3)
        env = Simulation(ds, settings.tank_params(), settings.env_config(8.3),
                         record=True)
        from heatshift.baselines import RuleBasedController

        controller = RuleBasedController(11)
        obs = env.observation()
        while env.remaining() > 0:
            obs = env.step(controller.act(obs)).observation
        net = env.trace.net_kw
        for i, (a, b) in enumerate(month_bounds()):
            brute = 0.0
            for q in range(a, b):
                brute = max(brute, net[q])
            assert report.monthly[i].p_max_kw == pytest.approx(max(brute, 0.0))


class TestPretrain:
    def test_zero_years_returns_fresh_parameters(self):
        settings = Settings()
        ds = make_year()
        result = pretrain(ds, "rl-expert", 3, settings, inverter_kw=4.0, years=0)
        rng_actor, rng_critic, _ = _training_rngs(3)
        fresh = PolicyParams(create_actor("expert", rng_actor,
                                          settings.t_min_c, settings.t_max_c),
                             Critic.create(rng_critic))
        assert result.params.actor.to_dict() == fresh.actor.to_dict()
        assert result.params.critic.to_dict() == fresh.critic.to_dict()
        assert result.yearly_mean_rewards == []

    def test_plan_seed_consistency(self):
        plan = ExperimentPlan(repeats=3)
        assert plan.seeds == (0, 1, 2)
        with pytest.raises(ValueError):
            ExperimentPlan(repeats=2, seeds=(1, 2, 3))


class TestReportSerialization:
    def test_round_trip(self, tmp_path):
        report = fake_report("rl-expert", "h1", 4, 123.456, pretrain_trace=[0.1, 0.2])
        report.monthly = [MonthlyMetrics("Oct", 3.0, 0.5, 100, 200, 50, 25, 80)]
        path = tmp_path / "r.json"
        report.save(path)
        loaded = RunReport.load(path)
        assert loaded.controller == report.controller
        assert loaded.bill.total_eur == pytest.approx(report.bill.total_eur)
        assert loaded.monthly[0].p_max_kw == 3.0
        assert loaded.pretrain_yearly_mean_rewards == [0.1, 0.2]
        path2 = tmp_path / "r2.json"
        loaded.save(path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_filename_convention(self):
        report = fake_report("rbc:11", "house2", 7, 100.0)
        assert report.filename() == "rbc-11_house2_7.json"
