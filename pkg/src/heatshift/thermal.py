"""Two-layer electric water heater model.

The tank is split into a lower and an upper water layer. Each simulation
step applies, in this order:

  (a) plug-flow draw: tapped litres leave the upper layer, water moves up
      from the lower layer, inlet water refills the bottom;
  (b) heating: the resistive element sits in the lower layer;
  (c) standing losses: each layer loses heat to ambient;
  (d) buoyancy: if the lower layer ends up warmer than the upper one, both
      collapse to their volume-weighted mean.

Tests depend on this event order. The safety (backup) controller and the
sensor placed halfway up the tank live here as well.
"""

from dataclasses import dataclass

from . import _kernels as kernels

WATER_CP_J_PER_KG_K = 4186.0
WATER_DENSITY_KG_PER_L = 1.0
MAX_SANE_TEMP_C = 95.0


@dataclass(frozen=True)
class TankParams:
    """Physical tank description; defaults model a 200 l household unit."""

    total_volume_l: float = 200.0
    lower_volume_l: float = 100.0
    upper_volume_l: float = 100.0
    heater_kw: float = 2.4
    loss_w_per_k: float = 1.0  # per layer
    ambient_c: float = 20.0
    inlet_c: float = 12.0
    t_min_c: float = 45.0
    t_max_c: float = 55.0

    def __post_init__(self):
        if self.lower_volume_l <= 0 or self.upper_volume_l <= 0:
            raise ValueError("layer volumes must be positive")
        if abs(self.lower_volume_l + self.upper_volume_l - self.total_volume_l) > 1e-9:
            raise ValueError("layer volumes must sum to the total volume")
        if self.heater_kw <= 0:
            raise ValueError("heater_kw must be positive")
        if self.loss_w_per_k < 0:
            raise ValueError("loss_w_per_k must be non-negative")
        if not self.t_min_c < self.t_max_c:
            raise ValueError("t_min_c must be below t_max_c")


@dataclass(frozen=True)
class TankState:
    temp_lower_c: float
    temp_upper_c: float
    heater_on: bool = False


def mean_temp(state: TankState, params: TankParams) -> float:
    """Volume-weighted mean water temperature."""
    return (params.lower_volume_l * state.temp_lower_c
            + params.upper_volume_l * state.temp_upper_c) / params.total_volume_l


def sensor_temp(state: TankState) -> float:
    """Temperature at the safety sensor, mounted halfway up the tank.

    With two layers that is the layer interface, so the reading is the
    arithmetic mean of the two layer temperatures.
    """
    return (state.temp_lower_c + state.temp_upper_c) / 2.0


def backup_override(t_b: float, u: int, t_min: float = 45.0, t_max: float = 55.0) -> int:
    """Safety layer: force on below t_min, force off at or above t_max."""
    if t_b <= t_min:
        return 1
    if t_b >= t_max:
        return 0
    return 1 if u else 0


def step(state: TankState, params: TankParams, u_phys: int, draw_l: float,
         dt_min: float = 15.0):
    """Advance the tank one step; returns (new state, electrical kWh used)."""
    if draw_l < 0:
        raise ValueError("draw_l must be non-negative")
    if draw_l > params.total_volume_l:
        raise ValueError(f"draw of {draw_l} l exceeds the {params.total_volume_l} l tank")
    if dt_min <= 0:
        raise ValueError("dt_min must be positive")

    on = 1 if u_phys else 0
    t_lower, t_upper = kernels.tank_step(
        state.temp_lower_c, state.temp_upper_c,
        params.lower_volume_l, params.upper_volume_l,
        params.heater_kw, on, draw_l,
        params.inlet_c, params.ambient_c, params.loss_w_per_k,
        dt_min * 60.0, WATER_CP_J_PER_KG_K,
    )
    energy_kwh = params.heater_kw * (dt_min / 60.0) if on else 0.0
    return TankState(t_lower, t_upper, bool(on)), energy_kwh


def stored_energy_j(state: TankState, params: TankParams) -> float:
    """Thermal energy content relative to 0 degC, in joules."""
    mass_lower = params.lower_volume_l * WATER_DENSITY_KG_PER_L
    mass_upper = params.upper_volume_l * WATER_DENSITY_KG_PER_L
    return WATER_CP_J_PER_KG_K * (mass_lower * state.temp_lower_c
                                  + mass_upper * state.temp_upper_c)
