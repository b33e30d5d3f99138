"""Reference controllers: hysteresis (HC) and rule-based (RBC)."""

import warnings

from .clock import QUARTERS_PER_HOUR
from .thermal import backup_override

RBC_SWEEP_HOURS = (10, 11, 12, 13)
RBC_WINDOW_HOURS = 4


def hc_action(t_b: float, prev_heater: int, t_min: float = 45.0, t_max: float = 55.0) -> int:
    """Deadband hysteresis: latch on below t_min, off above t_max, hold between."""
    return backup_override(t_b, 1 if prev_heater else 0, t_min, t_max)


def rbc_action(t: int, t_rbc: int) -> int:
    """Fixed daily heating window: on for 4 hours starting at hour t_rbc."""
    if t_rbc not in RBC_SWEEP_HOURS:
        warnings.warn(f"t_rbc={t_rbc} outside the usual sweep {RBC_SWEEP_HOURS}",
                      stacklevel=2)
    start = t_rbc * QUARTERS_PER_HOUR
    return 1 if start <= t < start + RBC_WINDOW_HOURS * QUARTERS_PER_HOUR else 0


class HysteresisController:
    """Stateful wrapper remembering the latch; latched=False gives the
    memoryless variant (heat only when forced by the bounds)."""

    def __init__(self, t_min: float = 45.0, t_max: float = 55.0, latched: bool = True):
        self.t_min = t_min
        self.t_max = t_max
        self.latched = latched
        self.prev = 0

    def act(self, obs) -> int:
        t_b = obs.delta_backup + self.t_min
        u = hc_action(t_b, self.prev if self.latched else 0, self.t_min, self.t_max)
        self.prev = u
        return u


class RuleBasedController:
    def __init__(self, t_rbc: int):
        if t_rbc not in RBC_SWEEP_HOURS:
            warnings.warn(f"t_rbc={t_rbc} outside the usual sweep {RBC_SWEEP_HOURS}",
                          stacklevel=2)
        self.t_rbc = t_rbc
        self._start = t_rbc * QUARTERS_PER_HOUR
        self._end = self._start + RBC_WINDOW_HOURS * QUARTERS_PER_HOUR

    def act(self, obs) -> int:
        return 1 if self._start <= obs.t < self._end else 0
