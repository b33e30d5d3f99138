"""Quarter-hourly household datasets.

A year of data is three aligned series at 15-minute resolution: PV
production (kW), inflexible household load (kW) and hot-water draw
(litres per quarter). Real data is read from CSV; for pre-training and
for the shipped fixture houses a seeded synthetic generator produces
plausible profiles (clear-sky PV with seasonal envelope and cloud noise,
base load with morning/evening peaks, and clustered draw events).

CSV format: header ``quarter,pv_kw,load_kw,dhw_l`` followed by exactly
35040 data rows, values formatted with 6 decimals.
"""

import math
from dataclasses import dataclass

import numpy as np

from .clock import DT_HOURS, DAYS_PER_YEAR, QUARTERS_PER_DAY, QUARTERS_PER_YEAR

CSV_HEADER = "quarter,pv_kw,load_kw,dhw_l"
PV_ANNUAL_SANITY_KWH = 20_000.0
# Per-quarter draw cap; events longer than this spill into the following
# quarters. Keeps a single quarter's draw enthalpy below what the heater
# can replace in one step.
MAX_QUARTER_DRAW_L = 12.0
# Seasonal peak of PV production: day index of late June in a year that
# starts on 1 October.
PV_PEAK_DAY = 268
# Generator calibration: annual PV energy scales to roughly this many kWh
# per kWp before inverter clipping.
PV_KWH_PER_KWP = 1000.0


@dataclass(frozen=True)
class QuarterRecord:
    """One 15-minute slot of exogenous data."""

    pv_kw: float
    load_kw: float
    dhw_l: float


@dataclass(frozen=True)
class SynthProfile:
    """Knobs of the synthetic year generator."""

    label: str
    pv_scale_kwp: float
    daily_load_kwh: float
    daily_dhw_l: float
    inverter_kw: float = 0.0  # 0 means "same as pv_scale_kwp"

    def __post_init__(self):
        if self.pv_scale_kwp < 0 or self.daily_load_kwh <= 0 or self.daily_dhw_l < 0:
            raise ValueError("profile parameters must be positive (pv may be zero)")

    @property
    def effective_inverter_kw(self) -> float:
        return self.inverter_kw if self.inverter_kw > 0 else max(self.pv_scale_kwp, 1e-9)


class YearDataset:
    """One immutable year of quarter-hourly records."""

    def __init__(self, pv_kw, load_kw, dhw_l, label="unnamed"):
        self.pv_kw = np.ascontiguousarray(pv_kw, dtype=np.float64)
        self.load_kw = np.ascontiguousarray(load_kw, dtype=np.float64)
        self.dhw_l = np.ascontiguousarray(dhw_l, dtype=np.float64)
        self.label = label
        for name, arr in (("pv_kw", self.pv_kw), ("load_kw", self.load_kw),
                          ("dhw_l", self.dhw_l)):
            if arr.shape != (QUARTERS_PER_YEAR,):
                raise ValueError(f"{name} must have {QUARTERS_PER_YEAR} entries, got {arr.shape}")
            if np.any(arr < 0):
                raise ValueError(f"{name} contains negative values")
        annual_pv = float(self.pv_kw.sum() * DT_HOURS)
        if annual_pv > PV_ANNUAL_SANITY_KWH:
            raise ValueError(f"annual PV energy {annual_pv:.0f} kWh fails the sanity bound")
        for arr in (self.pv_kw, self.load_kw, self.dhw_l):
            arr.setflags(write=False)

    def __len__(self):
        return QUARTERS_PER_YEAR

    def record(self, quarter: int) -> QuarterRecord:
        return QuarterRecord(float(self.pv_kw[quarter]),
                             float(self.load_kw[quarter]),
                             float(self.dhw_l[quarter]))


@dataclass(frozen=True)
class DatasetMetrics:
    dhw_l_per_day: float
    annual_load_kwh: float
    annual_pv_kwh: float


def dataset_metrics(ds: YearDataset) -> DatasetMetrics:
    return DatasetMetrics(
        dhw_l_per_day=float(ds.dhw_l.sum() / DAYS_PER_YEAR),
        annual_load_kwh=float(ds.load_kw.sum() * DT_HOURS),
        annual_pv_kwh=float(ds.pv_kw.sum() * DT_HOURS),
    )


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def save_csv(ds: YearDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for q in range(QUARTERS_PER_YEAR):
            fh.write(f"{q},{ds.pv_kw[q]:.6f},{ds.load_kw[q]:.6f},{ds.dhw_l[q]:.6f}\n")


def load_csv(path, label=None) -> YearDataset:
    """Parse and validate a dataset CSV; errors cite the offending data row."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise ValueError(f"{path}: expected header '{CSV_HEADER}', got '{header}'")
        pv = np.empty(QUARTERS_PER_YEAR)
        load = np.empty(QUARTERS_PER_YEAR)
        dhw = np.empty(QUARTERS_PER_YEAR)
        count = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if count >= QUARTERS_PER_YEAR:
                count += 1
                continue  # keep counting for the error message
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"{path}: row {count + 1}: expected 4 columns, got {len(parts)}")
            try:
                q = int(parts[0])
                values = (float(parts[1]), float(parts[2]), float(parts[3]))
            except ValueError as exc:
                raise ValueError(f"{path}: row {count + 1}: {exc}") from None
            if q != count:
                raise ValueError(f"{path}: row {count + 1}: quarter index {q} out of order")
            for name, v in zip(("pv_kw", "load_kw", "dhw_l"), values):
                if v < 0:
                    raise ValueError(f"{path}: row {count + 1}: negative {name} ({v})")
            pv[count], load[count], dhw[count] = values
            count += 1
    if count != QUARTERS_PER_YEAR:
        raise ValueError(f"{path}: expected {QUARTERS_PER_YEAR} data rows, found {count}")
    return YearDataset(pv, load, dhw, label=label or str(path))


# ---------------------------------------------------------------------------
# Synthetic generation
# ---------------------------------------------------------------------------

def synth_year(seed: int, profile: SynthProfile) -> YearDataset:
    """Deterministic synthetic year for the given seed and profile."""
    ss = np.random.SeedSequence(seed)
    rng_pv, rng_load, rng_dhw = (np.random.Generator(np.random.PCG64(c))
                                 for c in ss.spawn(3))
    pv = _pv_year(rng_pv, profile)
    load = _load_year(rng_load, profile)
    dhw = _dhw_year(rng_dhw, profile)
    return YearDataset(pv, load, dhw, label=profile.label)


def _season(day):
    return math.cos(2.0 * math.pi * (day - PV_PEAK_DAY) / DAYS_PER_YEAR)


def _pv_year(rng, profile: SynthProfile) -> np.ndarray:
    kwp = profile.pv_scale_kwp
    pv = np.zeros(QUARTERS_PER_YEAR)
    if kwp <= 0:
        return pv
    hours = (np.arange(QUARTERS_PER_DAY) + 0.5) * DT_HOURS
    for day in range(DAYS_PER_YEAR):
        season = _season(day)
        envelope = 0.62 + 0.38 * season
        daylight = 12.0 + 4.2 * season
        sunrise = 12.5 - daylight / 2.0
        phase = (hours - sunrise) / daylight
        shape = np.sin(np.pi * np.clip(phase, 0.0, 1.0))
        clearness = 0.25 + 0.75 * rng.beta(2.0, 1.2)
        ripple = 1.0 - 0.35 * _smooth(rng.random(QUARTERS_PER_DAY))
        sl = slice(day * QUARTERS_PER_DAY, (day + 1) * QUARTERS_PER_DAY)
        pv[sl] = kwp * envelope * clearness * shape * ripple
    target_kwh = PV_KWH_PER_KWP * kwp
    total = pv.sum() * DT_HOURS
    if total > 0:
        pv *= target_kwh / total
    np.clip(pv, 0.0, profile.effective_inverter_kw, out=pv)
    return pv


def _smooth(x):
    # 3-tap smoothing, clamped ends
    padded = np.concatenate(([x[0]], x, [x[-1]]))
    return 0.25 * padded[:-2] + 0.5 * padded[1:-1] + 0.25 * padded[2:]


def _gauss_bump(hours, center, width, amp):
    return amp * np.exp(-0.5 * ((hours - center) / width) ** 2)


def _load_year(rng, profile: SynthProfile) -> np.ndarray:
    """Base load plus morning/evening peaks and occasional appliance runs.

    Peak amplitudes are drawn in absolute kW so the peak structure stays
    comparable across consumption levels; the daily energy target is met
    through the base load.
    """
    load = np.empty(QUARTERS_PER_YEAR)
    hours = (np.arange(QUARTERS_PER_DAY) + 0.5) * DT_HOURS
    for day in range(DAYS_PER_YEAR):
        bumps = _gauss_bump(hours, rng.normal(7.4, 0.5),
                            rng.uniform(0.5, 0.9), rng.uniform(0.5, 1.4))
        bumps += _gauss_bump(hours, rng.normal(18.8, 0.7),
                             rng.uniform(0.8, 1.4), rng.uniform(1.0, 2.4))
        # appliance runs cluster around cooking and laundry hours
        for _ in range(rng.poisson(0.9)):
            roll = rng.random()
            if roll < 0.6:
                hour = rng.uniform(17.0, 21.5)
            elif roll < 0.85:
                hour = rng.uniform(7.0, 10.0)
            else:
                hour = rng.uniform(11.0, 16.0)
            start = int(hour * 4)
            length = rng.integers(1, 3)
            bumps[start:start + length] += rng.uniform(0.5, 1.3)
        bump_kwh = bumps.sum() * DT_HOURS
        base = (profile.daily_load_kwh - bump_kwh) / 24.0
        if base < 0.05:
            bumps *= max(0.0, profile.daily_load_kwh - 0.05 * 24.0) / bump_kwh
            base = 0.05
        day_load = base + bumps
        day_load *= 1.0 + 0.06 * rng.standard_normal(QUARTERS_PER_DAY)
        np.clip(day_load, 0.02, None, out=day_load)
        load[day * QUARTERS_PER_DAY:(day + 1) * QUARTERS_PER_DAY] = day_load
    target_kwh = profile.daily_load_kwh * DAYS_PER_YEAR
    load *= target_kwh / (load.sum() * DT_HOURS)
    return load


def _dhw_year(rng, profile: SynthProfile) -> np.ndarray:
    """Draw events clustered at morning and evening, rasterised to quarters.

    Event volumes are scaled so the annual total matches the profile target
    before rasterisation; the per-quarter cap spills long events into the
    following quarters.
    """
    dhw = np.zeros(QUARTERS_PER_YEAR)
    target_daily = profile.daily_dhw_l
    if target_daily <= 0:
        return dhw
    shower_count = max(1, int(round(target_daily / 60.0)))
    shower_slots = [(7.3, 0.6, 5.5, 10.0), (19.8, 0.9, 17.0, 22.5),
                    (8.3, 1.0, 6.0, 11.0), (21.0, 0.8, 18.0, 23.0)]

    events = []  # (day, hour, litres)
    for day in range(DAYS_PER_YEAR):
        # day-to-day demand swings (guests, laundry days, absences)
        day_factor = float(np.clip(rng.lognormal(-0.18, 0.6), 0.15, 3.0))
        for s in range(shower_count):
            mu, sigma, lo, hi = shower_slots[min(s, len(shower_slots) - 1)]
            hour = float(np.clip(rng.normal(mu, sigma), lo, hi))
            events.append((day, hour, day_factor * rng.uniform(24.0, 40.0)))
        for _ in range(rng.poisson(4.0)):
            events.append((day, rng.uniform(6.5, 22.0),
                           day_factor * rng.uniform(1.5, 6.5)))

    total = sum(vol for _, _, vol in events)
    scale = target_daily * DAYS_PER_YEAR / total
    for day, hour, vol in events:
        q = day * QUARTERS_PER_DAY + int(hour * 4)
        remaining = vol * scale
        while remaining > 1e-12 and q < QUARTERS_PER_YEAR:
            room = MAX_QUARTER_DRAW_L - dhw[q]
            if room > 0:
                take = min(room, remaining)
                dhw[q] += take
                remaining -= take
            q += 1
    return dhw


# ---------------------------------------------------------------------------
# Fixture houses
# ---------------------------------------------------------------------------

# Mid-range profile: the houses span a wide hot-water and PV range, so
# pre-training sees moderate demand and production rather than an extreme.
PRETRAIN_PROFILE = SynthProfile("pretrain", pv_scale_kwp=6.5,
                                daily_load_kwh=10.4, daily_dhw_l=90.0)

FIXTURE_HOUSES = {
    "house1": SynthProfile("house1", pv_scale_kwp=7.9, daily_load_kwh=8.2, daily_dhw_l=55.0),
    "house2": SynthProfile("house2", pv_scale_kwp=8.3, daily_load_kwh=16.4, daily_dhw_l=115.0),
    "house3": SynthProfile("house3", pv_scale_kwp=7.5, daily_load_kwh=9.9, daily_dhw_l=35.0),
    "house4": SynthProfile("house4", pv_scale_kwp=8.3, daily_load_kwh=10.3, daily_dhw_l=30.0),
    "house5": SynthProfile("house5", pv_scale_kwp=7.9, daily_load_kwh=14.6, daily_dhw_l=185.0),
}

DATA_SEEDS = {
    "pretrain": 1001,
    "house1": 2001,
    "house2": 2002,
    "house3": 2003,
    "house4": 2004,
    "house5": 2005,
}

PROFILES = {"pretrain": PRETRAIN_PROFILE, "default": PRETRAIN_PROFILE, **FIXTURE_HOUSES}


def fixture_dataset(name: str) -> YearDataset:
    """The registered dataset of a named profile (fixed seed per house)."""
    key = "pretrain" if name == "default" else name
    if key not in PROFILES or key not in DATA_SEEDS:
        raise KeyError(f"unknown profile {name!r}; choose from {sorted(DATA_SEEDS)}")
    return synth_year(DATA_SEEDS[key], PROFILES[key])


def write_fixtures(directory) -> list:
    """Materialise all fixture CSVs into a directory; returns the paths."""
    import os

    os.makedirs(directory, exist_ok=True)
    paths = []
    for name in DATA_SEEDS:
        path = os.path.join(directory, f"{name}.csv")
        save_csv(fixture_dataset(name), path)
        paths.append(path)
    return paths
