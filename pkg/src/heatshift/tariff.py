"""Capacity-tariff settlement.

The distribution fee is charged per kW of measured peak off-take: each
billing month contributes its highest quarter-hour net consumption, the
mean of the last 12 monthly peaks (floored at 2.5 kW each) gives the mean
monthly peak (MMP), and the yearly bill adds energy cost, the capacity
fee, energy taxes and a fixed levy on top.

Only net off-take counts: quarters with grid injection contribute zero to
the peak, never a negative value.
"""

from dataclasses import dataclass, field

import numpy as np

from .clock import month_bounds

CAPACITY_FLOOR_KW = 2.5
MONTHS_PER_WINDOW = 12


@dataclass
class BillingLedger:
    """Inputs of one yearly settlement."""

    monthly_peaks: list = field(default_factory=list)  # kW, one per month
    lambda_cap: float = 47.78        # EUR/kW
    lambda_e: float = 0.10           # EUR/kWh
    lambda_tax_e: float = 0.05       # EUR/kWh
    lambda_tax_fixed: float = 100.0  # EUR/year
    total_energy_kwh: float = 0.0


@dataclass(frozen=True)
class Bill:
    energy_eur: float
    capacity_eur: float
    tax_energy_eur: float
    tax_fixed_eur: float
    mmp_kw: float

    @property
    def total_eur(self) -> float:
        return self.energy_eur + self.capacity_eur + self.tax_energy_eur + self.tax_fixed_eur

    def to_dict(self) -> dict:
        return {
            "energy_eur": self.energy_eur,
            "capacity_eur": self.capacity_eur,
            "tax_energy_eur": self.tax_energy_eur,
            "tax_fixed_eur": self.tax_fixed_eur,
            "total_eur": self.total_eur,
            "mmp_kw": self.mmp_kw,
        }


def monthly_peak(net_power_kw) -> float:
    """Peak off-take of one month of quarter-hour net power readings."""
    series = np.asarray(net_power_kw, dtype=np.float64)
    if series.size == 0:
        raise ValueError("monthly_peak needs a non-empty series")
    peak = float(series.max())
    return peak if peak > 0.0 else 0.0


def monthly_peaks(net_power_year_kw) -> list:
    """Peaks of the 12 billing months of a full simulation year."""
    series = np.asarray(net_power_year_kw, dtype=np.float64)
    bounds = month_bounds()
    if series.size != bounds[-1][1]:
        raise ValueError(f"expected a full year of {bounds[-1][1]} quarters, got {series.size}")
    return [monthly_peak(series[a:b]) for a, b in bounds]


def mmp(peaks) -> float:
    """Mean monthly peak over a 12-month window, floored at 2.5 kW per month."""
    if len(peaks) != MONTHS_PER_WINDOW:
        raise ValueError(f"mmp needs exactly {MONTHS_PER_WINDOW} monthly peaks, got {len(peaks)}")
    return sum(max(CAPACITY_FLOOR_KW, float(p)) for p in peaks) / MONTHS_PER_WINDOW


def yearly_bill(ledger: BillingLedger) -> Bill:
    """Settle one year: energy, capacity, energy tax and fixed tax components."""
    for name in ("lambda_cap", "lambda_e", "lambda_tax_e", "lambda_tax_fixed"):
        if getattr(ledger, name) < 0:
            raise ValueError(f"{name} must be non-negative")
    if ledger.total_energy_kwh < 0:
        raise ValueError("total_energy_kwh must be non-negative")
    mean_peak = mmp(ledger.monthly_peaks)
    return Bill(
        energy_eur=ledger.lambda_e * ledger.total_energy_kwh,
        capacity_eur=ledger.lambda_cap * mean_peak,
        tax_energy_eur=ledger.lambda_tax_e * ledger.total_energy_kwh,
        tax_fixed_eur=ledger.lambda_tax_fixed,
        mmp_kw=mean_peak,
    )
