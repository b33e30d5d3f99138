"""Experiment protocol: pre-train on synthetic data, transfer, test, compare.

A full run pre-trains each RL variant for a number of simulation-years on
the synthetic profile (one seed per repeat), then lets every controller
face each fixture house for one test year. RL agents keep learning online
during the test year by default; a frozen-policy mode exists for
ablation. Billing, self-consumption and comfort metrics are computed from
the logged trace, and the comparison table reports percentage deltas
against the hysteresis reference and the best rule-based window.
"""

import json
import os
import zlib
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from .agents import Critic, PolicyParams, PpoConfig, Trainer, create_actor
from .baselines import RBC_SWEEP_HOURS, HysteresisController, RuleBasedController
from .clock import DT_HOURS, MONTH_LABELS, QUARTERS_PER_YEAR, month_bounds
from .config import Settings
from .data import DATA_SEEDS, PROFILES, fixture_dataset
from .env import Simulation
from .tariff import Bill, BillingLedger, mmp, monthly_peak, yearly_bill

RL_CONTROLLERS = ("rl-expert", "rl-plain")
COMFORT_MARGIN_K = 5.0


class TrainingDiverged(Exception):
    """A training run produced a non-finite loss."""


@dataclass(frozen=True)
class ExperimentPlan:
    pretrain_years: int = 3
    test_years: int = 1
    repeats: int = 5
    seeds: tuple = ()
    controllers: tuple = ("hc", "rbc", "rl-expert", "rl-plain")
    rbc_hours: tuple = RBC_SWEEP_HOURS
    houses: tuple = ("house1", "house2", "house3", "house4", "house5")
    pretrain_profile: str = "pretrain"

    def __post_init__(self):
        if not self.seeds:
            object.__setattr__(self, "seeds", tuple(range(self.repeats)))
        if len(self.seeds) != self.repeats:
            raise ValueError("repeats must equal the number of seeds")
        if self.pretrain_years < 0:
            raise ValueError("pretrain_years must be non-negative")


@dataclass
class MonthlyMetrics:
    month: str
    p_max_kw: float
    self_consumption_ratio: float
    pv_kwh: float
    load_kwh: float
    ewh_kwh: float
    sc_kwh: float
    dhw_l_per_day: float

    def to_dict(self) -> dict:
        return {
            "month": self.month,
            "p_max_kw": self.p_max_kw,
            "self_consumption_ratio": self.self_consumption_ratio,
            "pv_kwh": self.pv_kwh,
            "load_kwh": self.load_kwh,
            "ewh_kwh": self.ewh_kwh,
            "sc_kwh": self.sc_kwh,
            "dhw_l_per_day": self.dhw_l_per_day,
        }


@dataclass
class RunReport:
    controller: str
    house: str
    seed: int
    online: bool
    backend: str
    monthly: list
    mmp_kw: float
    bill: Bill
    billed_energy_kwh: float
    ewh_kwh: float
    sc_kwh: float
    self_consumption_ratio: float
    mean_reward: float
    comfort_fraction: float
    min_sensor_c: float
    iteration_mean_rewards: list = field(default_factory=list)
    iteration_actor_loss: list = field(default_factory=list)
    iteration_critic_loss: list = field(default_factory=list)
    pretrain_years: int = 0
    pretrain_yearly_mean_rewards: list = field(default_factory=list)
    note: str = ""

    @property
    def pretrain_final_year_mean_reward(self):
        if self.pretrain_yearly_mean_rewards:
            return self.pretrain_yearly_mean_rewards[-1]
        return None

    def to_dict(self) -> dict:
        return {
            "controller": self.controller,
            "house": self.house,
            "seed": int(self.seed),
            "online": bool(self.online),
            "backend": self.backend,
            "monthly": [m.to_dict() for m in self.monthly],
            "yearly": {
                "mmp_kw": self.mmp_kw,
                "bill": self.bill.to_dict(),
                "billed_energy_kwh": self.billed_energy_kwh,
                "ewh_kwh": self.ewh_kwh,
                "sc_kwh": self.sc_kwh,
                "self_consumption_ratio": self.self_consumption_ratio,
                "mean_reward": self.mean_reward,
                "comfort_fraction": self.comfort_fraction,
                "min_sensor_c": self.min_sensor_c,
            },
            "iterations": {
                "mean_reward": [float(x) for x in self.iteration_mean_rewards],
                "actor_loss": [float(x) for x in self.iteration_actor_loss],
                "critic_loss": [float(x) for x in self.iteration_critic_loss],
            },
            "pretrain": {
                "years": int(self.pretrain_years),
                "yearly_mean_rewards": [float(x) for x in self.pretrain_yearly_mean_rewards],
            },
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        y = d["yearly"]
        b = y["bill"]
        return cls(
            controller=d["controller"], house=d["house"], seed=d["seed"],
            online=d["online"], backend=d.get("backend", ""),
            monthly=[MonthlyMetrics(**m) for m in d["monthly"]],
            mmp_kw=y["mmp_kw"],
            bill=Bill(b["energy_eur"], b["capacity_eur"], b["tax_energy_eur"],
                      b["tax_fixed_eur"], b["mmp_kw"]),
            billed_energy_kwh=y["billed_energy_kwh"], ewh_kwh=y["ewh_kwh"],
            sc_kwh=y["sc_kwh"], self_consumption_ratio=y["self_consumption_ratio"],
            mean_reward=y["mean_reward"], comfort_fraction=y["comfort_fraction"],
            min_sensor_c=y["min_sensor_c"],
            iteration_mean_rewards=d["iterations"]["mean_reward"],
            iteration_actor_loss=d["iterations"]["actor_loss"],
            iteration_critic_loss=d["iterations"]["critic_loss"],
            pretrain_years=d["pretrain"]["years"],
            pretrain_yearly_mean_rewards=d["pretrain"]["yearly_mean_rewards"],
            note=d.get("note", ""),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "RunReport":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def filename(self) -> str:
        return f"{self.controller.replace(':', '-')}_{self.house}_{self.seed}.json"


@dataclass
class PretrainResult:
    actor_kind: str
    seed: int
    years: int
    params: PolicyParams
    yearly_mean_rewards: list

    @property
    def final_year_mean_reward(self):
        return self.yearly_mean_rewards[-1] if self.yearly_mean_rewards else None


def _training_rngs(seed, house: str | None = None):
    entropy = (seed,) if house is None else (seed, zlib.crc32(house.encode()))
    kids = np.random.SeedSequence(entropy).spawn(3)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in kids)


def pretrain(dataset, actor_kind: str, seed: int, settings: Settings,
             inverter_kw: float | None = None, years: int | None = None) -> PretrainResult:
    """Train a fresh agent by cycling the dataset for the given years.

    The per-year reward trace buckets iterations by the simulation-year in
    which their rollout started. Raises TrainingDiverged on non-finite loss.
    """
    years = settings.pretrain_years if years is None else years
    rng_actor, rng_critic, rng_train = _training_rngs(seed)
    actor = create_actor(actor_kind.replace("rl-", ""), rng_actor,
                         settings.t_min_c, settings.t_max_c)
    critic = Critic.create(rng_critic)
    params = PolicyParams(actor, critic)
    if years == 0:
        return PretrainResult(actor_kind, seed, 0, params, [])

    env = Simulation(dataset, settings.tank_params(), settings.env_config(inverter_kw),
                     initial_temp_c=settings.initial_temp_c, wrap=True)
    trainer = Trainer(actor, critic, settings.ppo_config(), rng_train)
    total_steps = years * QUARTERS_PER_YEAR
    year_reward = np.zeros(years)
    year_steps = np.zeros(years, dtype=np.int64)
    taken = 0
    while taken < total_steps:
        stats = trainer.iteration(env)
        if stats is None:
            break
        if stats.diverged:
            raise TrainingDiverged(f"{actor_kind} seed {seed}: non-finite loss "
                                   f"after {taken} steps")
        year = min(taken // QUARTERS_PER_YEAR, years - 1)
        year_reward[year] += stats.reward_sum
        year_steps[year] += stats.steps
        taken += stats.steps
    yearly = [float(year_reward[y] / year_steps[y]) if year_steps[y] else 0.0
              for y in range(years)]
    return PretrainResult(actor_kind, seed, years, params, yearly)


def _run_controller_year(env, controller) -> None:
    obs = env.observation()
    while env.remaining() > 0:
        res = env.step(controller.act(obs))
        obs = res.observation


def _run_frozen_policy_year(env, actor, rng, greedy: bool) -> None:
    obs = env.observation()
    while env.remaining() > 0:
        p = actor.action_prob(obs)
        u = 1 if (p >= 0.5 if greedy else rng.random() < p) else 0
        res = env.step(u)
        obs = res.observation


def build_report(trace, settings: Settings, dataset, controller: str, house: str,
                 seed: int, online: bool) -> RunReport:
    """All reported metrics, derived from the logged trace alone."""
    n = trace.n
    if n != QUARTERS_PER_YEAR:
        raise ValueError(f"expected a full-year trace, got {n} steps")
    net = trace.net_kw[:n]
    ewh = trace.ewh_kw[:n]
    sc = trace.sc_kw[:n]
    sensor = trace.sensor_temp()

    monthly = []
    peaks = []
    for (a, b), label in zip(month_bounds(), MONTH_LABELS):
        peak = monthly_peak(net[a:b])
        peaks.append(peak)
        ewh_kwh = float(ewh[a:b].sum() * DT_HOURS)
        sc_kwh = float(sc[a:b].sum() * DT_HOURS)
        monthly.append(MonthlyMetrics(
            month=label,
            p_max_kw=peak,
            self_consumption_ratio=sc_kwh / ewh_kwh if ewh_kwh > 0 else 0.0,
            pv_kwh=float(trace.pv_kw[a:b].sum() * DT_HOURS),
            load_kwh=float(trace.load_kw[a:b].sum() * DT_HOURS),
            ewh_kwh=ewh_kwh,
            sc_kwh=sc_kwh,
            dhw_l_per_day=float(dataset.dhw_l[a:b].sum() / ((b - a) / 96)),
        ))

    billed_energy = float(np.maximum(net, 0.0).sum() * DT_HOURS)
    ledger = BillingLedger(
        monthly_peaks=peaks,
        lambda_cap=settings.lambda_cap,
        lambda_e=settings.lambda_e,
        lambda_tax_e=settings.lambda_tax_e,
        lambda_tax_fixed=settings.lambda_tax_fixed,
        total_energy_kwh=billed_energy,
    )
    bill = yearly_bill(ledger)
    ewh_total = float(ewh.sum() * DT_HOURS)
    sc_total = float(sc.sum() * DT_HOURS)
    return RunReport(
        controller=controller, house=house, seed=seed, online=online,
        backend=kernels.BACKEND,
        monthly=monthly,
        mmp_kw=mmp(peaks),
        bill=bill,
        billed_energy_kwh=billed_energy,
        ewh_kwh=ewh_total,
        sc_kwh=sc_total,
        self_consumption_ratio=sc_total / ewh_total if ewh_total > 0 else 0.0,
        mean_reward=float(trace.reward[:n].mean()),
        comfort_fraction=float(np.mean(sensor >= settings.t_min_c - COMFORT_MARGIN_K)),
        min_sensor_c=float(sensor.min()),
    )


def evaluate(controller: str, dataset, house: str, seed: int, settings: Settings,
             inverter_kw: float | None = None, params: PolicyParams | None = None,
             online: bool | None = None, pretrain_result: PretrainResult | None = None,
             trace_csv=None) -> RunReport:
    """Closed-loop test year for one controller on one house dataset.

    RL controllers continue learning online unless disabled. The caller's
    params are never mutated; online learning operates on a copy.
    """
    env = Simulation(dataset, settings.tank_params(), settings.env_config(inverter_kw),
                     initial_temp_c=settings.initial_temp_c, wrap=False, record=True)
    iter_rewards, iter_aloss, iter_closs = [], [], []
    is_rl = controller in RL_CONTROLLERS
    online_eff = (settings.online_learning if online is None else online) and is_rl

    if controller == "hc":
        _run_controller_year(env, HysteresisController(
            settings.t_min_c, settings.t_max_c, latched=settings.hc_latched))
    elif controller.startswith("rbc:"):
        _run_controller_year(env, RuleBasedController(int(controller.split(":", 1)[1])))
    elif is_rl:
        rng_actor, rng_critic, rng_train = _training_rngs(seed, house)
        if params is None:
            actor = create_actor(controller.replace("rl-", ""), rng_actor,
                                 settings.t_min_c, settings.t_max_c)
            critic = Critic.create(rng_critic)
        else:
            copied = params.copy()
            actor, critic = copied.actor, copied.critic
        if online_eff:
            trainer = Trainer(actor, critic, settings.ppo_config(), rng_train)
            log = trainer.train_steps(env, QUARTERS_PER_YEAR)
            if trainer.diverged:
                raise TrainingDiverged(f"{controller} seed {seed} on {house}: "
                                       "non-finite loss in the test year")
            iter_rewards = [s.mean_reward for s in log.iterations]
            iter_aloss = [s.actor_loss for s in log.iterations]
            iter_closs = [s.critic_loss for s in log.iterations]
        else:
            _run_frozen_policy_year(env, actor, rng_train, settings.greedy_eval)
    else:
        raise ValueError(f"unknown controller {controller!r}")

    report = build_report(env.trace, settings, dataset, controller, house, seed,
                          online_eff)
    report.iteration_mean_rewards = iter_rewards
    report.iteration_actor_loss = iter_aloss
    report.iteration_critic_loss = iter_closs
    if pretrain_result is not None:
        report.pretrain_years = pretrain_result.years
        report.pretrain_yearly_mean_rewards = list(pretrain_result.yearly_mean_rewards)
    if trace_csv:
        env.trace.write_csv(trace_csv)
    return report


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------

def _pct(x, ref):
    if ref == 0:
        return None
    return 100.0 * (x - ref) / ref


def _mean_std(values):
    arr = np.asarray(values, dtype=np.float64)
    if arr.size >= 2:
        return float(arr.mean()), float(arr.std(ddof=1))
    return float(arr.mean()), 0.0


@dataclass
class ControllerSummary:
    n_runs: int
    bill_mean: float
    bill_std: float
    mmp_mean: float
    mmp_std: float
    scr_mean: float
    scr_std: float

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "bill_mean_eur": self.bill_mean, "bill_std_eur": self.bill_std,
            "mmp_mean_kw": self.mmp_mean, "mmp_std_kw": self.mmp_std,
            "scr_mean": self.scr_mean, "scr_std": self.scr_std,
        }


def _summarise(reports) -> ControllerSummary:
    bills = [r.bill.total_eur for r in reports]
    mmps = [r.mmp_kw for r in reports]
    scrs = [r.self_consumption_ratio for r in reports]
    bm, bs = _mean_std(bills)
    mm, ms = _mean_std(mmps)
    sm, ss = _mean_std(scrs)
    return ControllerSummary(len(reports), bm, bs, mm, ms, sm, ss)


CSV_FIELDS = ("house", "controller", "n_runs", "bill_mean_eur", "bill_std_eur",
              "mmp_mean_kw", "mmp_std_kw", "scr_mean", "scr_std",
              "d_bill_vs_hc_pct", "d_mmp_vs_hc_pct", "d_scr_vs_hc_pct",
              "d_bill_vs_best_rbc_pct", "d_mmp_vs_best_rbc_pct", "d_scr_vs_best_rbc_pct")


@dataclass
class ComparisonTable:
    houses: dict          # house -> controller -> row dict
    averaged: dict        # controller -> row dict
    best_rbc: dict        # house -> controller key of the cheapest RBC window

    def to_dict(self) -> dict:
        return {"houses": self.houses, "averaged": self.averaged,
                "best_rbc": self.best_rbc, "reference": "hc"}

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def save_csv(self, path) -> None:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float):
                return f"{v:.6f}"
            return str(v)

        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(CSV_FIELDS) + "\n")
            for house in sorted(self.houses):
                for controller in sorted(self.houses[house]):
                    row = self.houses[house][controller]
                    fh.write(",".join(fmt(row.get(f)) for f in CSV_FIELDS) + "\n")
            for controller in sorted(self.averaged):
                row = self.averaged[controller]
                fh.write(",".join(fmt(row.get(f)) for f in CSV_FIELDS) + "\n")


def compare(reports) -> ComparisonTable:
    """Per-house and averaged deltas against HC and the best RBC window."""
    by_house = {}
    for r in reports:
        by_house.setdefault(r.house, {}).setdefault(r.controller, []).append(r)
    if not by_house:
        raise ValueError("no reports to compare")

    houses = {}
    best_rbc = {}
    summaries = {}
    for house, by_ctrl in sorted(by_house.items()):
        if "hc" not in by_ctrl:
            raise ValueError(f"house {house}: missing the hc reference controller")
        summaries[house] = {c: _summarise(rs) for c, rs in by_ctrl.items()}
        rbc_keys = sorted(c for c in by_ctrl if c.startswith("rbc:"))
        best = None
        if rbc_keys:
            best = min(rbc_keys, key=lambda c: (summaries[house][c].bill_mean, c))
        best_rbc[house] = best

        hc_s = summaries[house]["hc"]
        best_s = summaries[house][best] if best else None
        houses[house] = {}
        for controller, summary in summaries[house].items():
            row = {"house": house, "controller": controller, **summary.to_dict()}
            row["d_bill_vs_hc_pct"] = _pct(summary.bill_mean, hc_s.bill_mean)
            row["d_mmp_vs_hc_pct"] = _pct(summary.mmp_mean, hc_s.mmp_mean)
            row["d_scr_vs_hc_pct"] = _pct(summary.scr_mean, hc_s.scr_mean)
            if best_s is not None:
                row["d_bill_vs_best_rbc_pct"] = _pct(summary.bill_mean, best_s.bill_mean)
                row["d_mmp_vs_best_rbc_pct"] = _pct(summary.mmp_mean, best_s.mmp_mean)
                row["d_scr_vs_best_rbc_pct"] = _pct(summary.scr_mean, best_s.scr_mean)
            else:
                row["d_bill_vs_best_rbc_pct"] = None
                row["d_mmp_vs_best_rbc_pct"] = None
                row["d_scr_vs_best_rbc_pct"] = None
            houses[house][controller] = row

    # averaged over houses; "best-rbc" averages each house's own best window
    controllers = sorted({c for by_ctrl in summaries.values() for c in by_ctrl})
    averaged = {}

    def house_means(metric, controller):
        vals = [getattr(summaries[h][controller], metric)
                for h in summaries if controller in summaries[h]]
        return float(np.mean(vals)) if vals else None

    hc_avg = {m: house_means(m, "hc") for m in ("bill_mean", "mmp_mean", "scr_mean")}
    best_avg = None
    if all(best_rbc.get(h) for h in summaries):
        best_avg = {m: float(np.mean([getattr(summaries[h][best_rbc[h]], m)
                                      for h in summaries]))
                    for m in ("bill_mean", "mmp_mean", "scr_mean")}
    for controller in controllers:
        row = {
            "house": "(average)", "controller": controller,
            "n_runs": sum(len(by_house[h][controller]) for h in by_house
                          if controller in by_house[h]),
            "bill_mean_eur": house_means("bill_mean", controller),
            "bill_std_eur": house_means("bill_std", controller),
            "mmp_mean_kw": house_means("mmp_mean", controller),
            "mmp_std_kw": house_means("mmp_std", controller),
            "scr_mean": house_means("scr_mean", controller),
            "scr_std": house_means("scr_std", controller),
        }
        row["d_bill_vs_hc_pct"] = _pct(row["bill_mean_eur"], hc_avg["bill_mean"])
        row["d_mmp_vs_hc_pct"] = _pct(row["mmp_mean_kw"], hc_avg["mmp_mean"])
        row["d_scr_vs_hc_pct"] = _pct(row["scr_mean"], hc_avg["scr_mean"])
        if best_avg:
            row["d_bill_vs_best_rbc_pct"] = _pct(row["bill_mean_eur"], best_avg["bill_mean"])
            row["d_mmp_vs_best_rbc_pct"] = _pct(row["mmp_mean_kw"], best_avg["mmp_mean"])
            row["d_scr_vs_best_rbc_pct"] = _pct(row["scr_mean"], best_avg["scr_mean"])
        else:
            row["d_bill_vs_best_rbc_pct"] = None
            row["d_mmp_vs_best_rbc_pct"] = None
            row["d_scr_vs_best_rbc_pct"] = None
        averaged[controller] = row

    return ComparisonTable(houses=houses, averaged=averaged, best_rbc=best_rbc)


def pearson(xs, ys):
    """Pearson correlation; None when undefined (fewer than 2 points or
    zero variance in either series)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.size < 2:
        return None
    dx = x - x.mean()
    dy = y - y.mean()
    den = float(np.sqrt((dx * dx).sum() * (dy * dy).sum()))
    if den == 0.0:
        return None
    return float((dx * dy).sum() / den)


@dataclass
class CorrelationSummary:
    per_group: dict  # "controller/house" -> r or None
    average: float | None

    def to_dict(self) -> dict:
        return {"per_group": self.per_group, "average": self.average}


def pretrain_test_correlation(reports, min_runs: int = 3) -> CorrelationSummary:
    """Pearson r between final pre-training reward and test reward, per
    (controller, house) group over seeds, averaged across groups."""
    groups = {}
    for r in reports:
        if r.controller in RL_CONTROLLERS and r.pretrain_yearly_mean_rewards:
            groups.setdefault((r.controller, r.house), []).append(
                (r.pretrain_final_year_mean_reward, r.mean_reward))
    per_group = {}
    defined = []
    for (controller, house), pairs in sorted(groups.items()):
        if len(pairs) < min_runs:
            continue
        r = pearson([p[0] for p in pairs], [p[1] for p in pairs])
        per_group[f"{controller}/{house}"] = r
        if r is not None:
            defined.append(r)
    return CorrelationSummary(per_group, float(np.mean(defined)) if defined else None)


# ---------------------------------------------------------------------------
# Full protocol
# ---------------------------------------------------------------------------

@dataclass
class ExperimentResult:
    reports: list
    comparison: ComparisonTable
    pretrains: dict      # (actor_kind, seed) -> PretrainResult
    correlation: CorrelationSummary
    notes: list


def run_full_experiment(plan: ExperimentPlan, settings: Settings,
                        out_dir=None, progress=None) -> ExperimentResult:
    """The whole protocol: pre-train, evaluate every controller on every
    house, compare. Failed (diverged) runs are excluded with a note."""
    def say(msg):
        if progress:
            progress(msg)

    pretrain_ds = fixture_dataset(plan.pretrain_profile)
    pretrain_inv = PROFILES[plan.pretrain_profile].effective_inverter_kw
    notes = []
    pretrains = {}
    for kind in (c for c in plan.controllers if c in RL_CONTROLLERS):
        for seed in plan.seeds:
            say(f"pretrain {kind} seed {seed} ({plan.pretrain_years} years)")
            try:
                pretrains[(kind, seed)] = pretrain(
                    pretrain_ds, kind, seed, settings,
                    inverter_kw=pretrain_inv, years=plan.pretrain_years)
            except TrainingDiverged as exc:
                pretrains[(kind, seed)] = None
                notes.append(f"pretrain failed: {exc}")

    reports = []
    for house in plan.houses:
        dataset = fixture_dataset(house)
        inverter = PROFILES[house].effective_inverter_kw
        if "hc" in plan.controllers:
            say(f"evaluate hc on {house}")
            reports.append(evaluate("hc", dataset, house, 0, settings, inverter))
        if "rbc" in plan.controllers:
            for hour in plan.rbc_hours:
                say(f"evaluate rbc:{hour} on {house}")
                reports.append(evaluate(f"rbc:{hour}", dataset, house, 0,
                                        settings, inverter))
        for kind in (c for c in plan.controllers if c in RL_CONTROLLERS):
            for seed in plan.seeds:
                pre = pretrains.get((kind, seed))
                if pre is None:
                    notes.append(f"skipped {kind} seed {seed} on {house}: "
                                 "pretraining failed")
                    continue
                say(f"evaluate {kind} seed {seed} on {house}")
                try:
                    reports.append(evaluate(kind, dataset, house, seed, settings,
                                            inverter, params=pre.params,
                                            pretrain_result=pre))
                except TrainingDiverged as exc:
                    notes.append(f"run failed: {exc}")

    comparison = compare(reports)
    correlation = pretrain_test_correlation(reports)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        for report in reports:
            report.save(os.path.join(out_dir, report.filename()))
        comparison.save_json(os.path.join(out_dir, "comparison.json"))
        comparison.save_csv(os.path.join(out_dir, "comparison.csv"))
        summary = {"notes": notes, "correlation": correlation.to_dict()}
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            fh.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return ExperimentResult(reports, comparison, pretrains, correlation, notes)
