"""Simulation calendar.

Everything runs on a fixed non-leap year of 15-minute quarters, starting
on the first of October. Billing months therefore run Oct, Nov, ..., Sep.
"""

QUARTERS_PER_HOUR = 4
QUARTERS_PER_DAY = 96
DAYS_PER_YEAR = 365
QUARTERS_PER_YEAR = QUARTERS_PER_DAY * DAYS_PER_YEAR  # 35040

DT_HOURS = 0.25
DT_MINUTES = 15.0
DT_SECONDS = 900.0

# Month lengths for a year anchored on 1 October (non-leap).
MONTH_DAYS = (31, 30, 31, 31, 28, 31, 30, 31, 30, 31, 31, 30)
MONTH_LABELS = ("Oct", "Nov", "Dec", "Jan", "Feb", "Mar",
                "Apr", "May", "Jun", "Jul", "Aug", "Sep")

assert sum(MONTH_DAYS) == DAYS_PER_YEAR


def month_bounds():
    """Quarter index ranges [(start, end), ...] of the 12 billing months."""
    bounds = []
    start = 0
    for days in MONTH_DAYS:
        end = start + days * QUARTERS_PER_DAY
        bounds.append((start, end))
        start = end
    return bounds


def day_of_year(quarter):
    return quarter // QUARTERS_PER_DAY


def quarter_of_day(quarter):
    return quarter % QUARTERS_PER_DAY


def hour_of_day(quarter):
    return (quarter % QUARTERS_PER_DAY) // QUARTERS_PER_HOUR
