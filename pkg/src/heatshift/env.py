"""The control environment.

Couples the two-layer tank with one household's dataset at 15-minute
steps. Each step: the commanded on/off action goes through the safety
override, the tank advances with the current draw, and the reward is
computed from the physical heater power:

    reward = min(p_c - p_net, 0) + p_sc   if the heater drew power,
             0                            otherwise,

with p_net the net household consumption and p_sc the PV-covered share of
the heater power. Observations carry a short mean-temperature history,
the margin above the safety minimum, two day-level PV forecast features
and the time of day projected on a circle.

The PV "forecast" is a perfect-foresight oracle over the dataset's
current day; a real forecaster can be substituted by precomputing the two
per-day feature arrays.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import thermal
from .clock import DT_HOURS, DAYS_PER_YEAR, QUARTERS_PER_DAY, QUARTERS_PER_YEAR
from .data import YearDataset
from .thermal import TankParams, TankState


@dataclass(frozen=True)
class EnvConfig:
    p_c_kw: float = 2.5        # capacity anchor in the reward
    inverter_kw: float = 7.5
    dt_hours: float = DT_HOURS
    # Reward on the commanded instead of the physical heater power
    # (alternative reading; off by default).
    reward_on_commanded: bool = False

    def __post_init__(self):
        if self.p_c_kw <= 0 or self.inverter_kw <= 0 or self.dt_hours <= 0:
            raise ValueError("p_c_kw, inverter_kw and dt_hours must be positive")


@dataclass(frozen=True)
class Observation:
    """Full state vector of one quarter."""

    mean_temp_history: tuple  # (mu_t, mu_{t-1}, mu_{t-2}, mu_{t-3}) degC
    delta_backup: float       # sensor temperature minus t_min, K
    f_e_pv: float             # day energy forecast, dimensionless
    pv_ratio: float           # current PV power over the day's forecast peak
    t_cos: float
    t_sin: float
    t: int                    # quarter of day, 0..95


def pv_forecasts(day_pv_energy_kwh, inverter_kw: float, dt_hours: float = DT_HOURS):
    """Day-level forecast features from one day of per-quarter PV energy.

    Returns (f_e_pv, f_p_pv_kw): the day's energy scaled by a rough
    maximum-production estimate, and the day's peak production power.
    """
    day = np.asarray(day_pv_energy_kwh, dtype=np.float64)
    if day.shape != (QUARTERS_PER_DAY,):
        raise ValueError(f"expected {QUARTERS_PER_DAY} per-quarter energies, got {day.shape}")
    f_e = float(day.sum() / (48.0 * dt_hours * inverter_kw))
    f_p = float(day.max() / dt_hours)
    return f_e, f_p


def net_power(p_ewh: float, p_load: float, p_pv: float) -> float:
    return p_ewh + p_load - p_pv


def self_consumption(p_ewh: float, p_load: float, p_pv: float) -> float:
    """PV surplus captured by the heater, in kW."""
    surplus = p_pv - p_load
    if surplus < 0.0:
        surplus = 0.0
    return surplus if surplus < p_ewh else p_ewh


def reward(p_ewh: float, p_load: float, p_pv: float, p_c: float) -> float:
    """Peak-avoidance plus self-consumption reward; zero when the heater is off."""
    if p_ewh == 0.0:
        return 0.0
    shortfall = p_c - net_power(p_ewh, p_load, p_pv)
    if shortfall > 0.0:
        shortfall = 0.0
    return shortfall + self_consumption(p_ewh, p_load, p_pv)


class DatasetExhausted(Exception):
    """Raised when stepping past the end of a non-wrapping dataset."""


@dataclass(frozen=True)
class StepInfo:
    u_phys: int
    p_ewh_kw: float
    p_net_kw: float
    p_sc_kw: float


@dataclass(frozen=True)
class StepResult:
    observation: Observation  # of the next quarter
    reward: float
    info: StepInfo
    done: bool                # true at the last quarter of a day


TRACE_COLUMNS = ("quarter", "temp_lower_c", "temp_upper_c", "u", "u_phys",
                 "pv_kw", "load_kw", "ewh_kw", "net_kw", "sc_kw", "reward")


class Trace:
    """Per-step log of a simulation run."""

    def __init__(self, capacity: int):
        self.quarter = np.zeros(capacity, dtype=np.int64)
        self.temp_lower_c = np.zeros(capacity)
        self.temp_upper_c = np.zeros(capacity)
        self.u = np.zeros(capacity, dtype=np.int8)
        self.u_phys = np.zeros(capacity, dtype=np.int8)
        self.pv_kw = np.zeros(capacity)
        self.load_kw = np.zeros(capacity)
        self.ewh_kw = np.zeros(capacity)
        self.net_kw = np.zeros(capacity)
        self.sc_kw = np.zeros(capacity)
        self.reward = np.zeros(capacity)
        self.n = 0

    def append(self, quarter, state, u, u_phys, pv, load, ewh, net, sc, rew):
        i = self.n
        self.quarter[i] = quarter
        self.temp_lower_c[i] = state.temp_lower_c
        self.temp_upper_c[i] = state.temp_upper_c
        self.u[i] = u
        self.u_phys[i] = u_phys
        self.pv_kw[i] = pv
        self.load_kw[i] = load
        self.ewh_kw[i] = ewh
        self.net_kw[i] = net
        self.sc_kw[i] = sc
        self.reward[i] = rew
        self.n += 1

    def sensor_temp(self):
        n = self.n
        return (self.temp_lower_c[:n] + self.temp_upper_c[:n]) / 2.0

    def write_csv(self, path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(TRACE_COLUMNS) + "\n")
            for i in range(self.n):
                fh.write(f"{self.quarter[i]},{self.temp_lower_c[i]:.6f},"
                         f"{self.temp_upper_c[i]:.6f},{self.u[i]},{self.u_phys[i]},"
                         f"{self.pv_kw[i]:.6f},{self.load_kw[i]:.6f},{self.ewh_kw[i]:.6f},"
                         f"{self.net_kw[i]:.6f},{self.sc_kw[i]:.6f},{self.reward[i]:.9f}\n")


_T_COS = np.cos(2.0 * math.pi * np.arange(QUARTERS_PER_DAY) / QUARTERS_PER_DAY)
_T_SIN = np.sin(2.0 * math.pi * np.arange(QUARTERS_PER_DAY) / QUARTERS_PER_DAY)


class Simulation:
    """One household plus tank stepping through a dataset.

    Days of 96 quarters are the episode unit for training bookkeeping; the
    physical tank state persists across day boundaries. With wrap=True the
    dataset cycles forever (pre-training); otherwise stepping past the end
    raises DatasetExhausted.
    """

    def __init__(self, dataset: YearDataset, tank: TankParams, env: EnvConfig,
                 start_quarter: int = 0, initial_temp_c: float = 50.0,
                 wrap: bool = False, record: bool = False):
        if not 0 <= start_quarter < QUARTERS_PER_YEAR:
            raise ValueError("start_quarter out of range")
        self.dataset = dataset
        self.tank = tank
        self.env = env
        self.wrap = wrap
        self.q = start_quarter
        self.steps_taken = 0
        self.state = TankState(initial_temp_c, initial_temp_c, False)
        mu0 = thermal.mean_temp(self.state, tank)
        self._mu_hist = [mu0, mu0, mu0, mu0]  # newest first
        self.trace = Trace(QUARTERS_PER_YEAR) if record else None

        # perfect-foresight day features
        pv_energy = dataset.pv_kw.reshape(DAYS_PER_YEAR, QUARTERS_PER_DAY) * env.dt_hours
        self._f_e_pv = pv_energy.sum(axis=1) / (48.0 * env.dt_hours * env.inverter_kw)
        self._f_p_pv = dataset.pv_kw.reshape(DAYS_PER_YEAR, QUARTERS_PER_DAY).max(axis=1)

    def remaining(self) -> int:
        if self.wrap:
            return QUARTERS_PER_YEAR
        return QUARTERS_PER_YEAR - self.q

    def observation(self) -> Observation:
        q = self.q
        day = q // QUARTERS_PER_DAY
        t = q % QUARTERS_PER_DAY
        f_p = self._f_p_pv[day]
        ratio = float(self.dataset.pv_kw[q] / f_p) if f_p > 0.0 else 0.0
        return Observation(
            mean_temp_history=tuple(self._mu_hist),
            delta_backup=thermal.sensor_temp(self.state) - self.tank.t_min_c,
            f_e_pv=float(self._f_e_pv[day]),
            pv_ratio=ratio,
            t_cos=float(_T_COS[t]),
            t_sin=float(_T_SIN[t]),
            t=t,
        )

    def step(self, u: int) -> StepResult:
        if not self.wrap and self.q >= QUARTERS_PER_YEAR:
            raise DatasetExhausted(f"dataset {self.dataset.label!r} ended at quarter {self.q}")
        q = self.q
        t = q % QUARTERS_PER_DAY
        u = 1 if u else 0
        t_b = thermal.sensor_temp(self.state)
        u_phys = thermal.backup_override(t_b, u, self.tank.t_min_c, self.tank.t_max_c)

        pv = float(self.dataset.pv_kw[q])
        load = float(self.dataset.load_kw[q])
        draw = float(self.dataset.dhw_l[q])
        prev_state = self.state
        self.state, _energy = thermal.step(self.state, self.tank, u_phys, draw)

        p_phys = self.tank.heater_kw if u_phys else 0.0
        p_reward = (self.tank.heater_kw if u else 0.0) if self.env.reward_on_commanded else p_phys
        rew = reward(p_reward, load, pv, self.env.p_c_kw)
        net = net_power(p_phys, load, pv)
        sc = self_consumption(p_phys, load, pv)

        if self.trace is not None:
            self.trace.append(q, prev_state, u, u_phys, pv, load, p_phys, net, sc, rew)

        self._mu_hist.pop()
        self._mu_hist.insert(0, thermal.mean_temp(self.state, self.tank))
        self.q += 1
        self.steps_taken += 1
        if self.wrap and self.q >= QUARTERS_PER_YEAR:
            self.q = 0
        done = (t == QUARTERS_PER_DAY - 1)
        info = StepInfo(u_phys=u_phys, p_ewh_kw=p_phys, p_net_kw=net, p_sc_kw=sc)
        next_obs = self.observation() if (self.wrap or self.q < QUARTERS_PER_YEAR) else None
        return StepResult(next_obs, rew, info, done)
