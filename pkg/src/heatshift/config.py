"""Flat key=value configuration.

One file holds every tunable constant: tariff prices, reward anchor,
tank geometry, training hyper-parameters and the experiment plan. Lines
look like ``lambda_cap = 47.78``; ``#`` starts a comment. Unknown keys
are rejected. The config path can also come from the HEATSHIFT_CONFIG
environment variable.
"""

import os
from dataclasses import dataclass, fields

from .agents import PpoConfig
from .env import EnvConfig
from .thermal import TankParams

CONFIG_ENV_VAR = "HEATSHIFT_CONFIG"


class ConfigError(Exception):
    pass


@dataclass
class Settings:
    # tariff prices (capacity price from the published tariff; the energy
    # and tax prices are repo defaults, reported alongside every bill)
    lambda_cap: float = 47.78
    lambda_e: float = 0.10
    lambda_tax_e: float = 0.05
    lambda_tax_fixed: float = 100.0
    # reward / environment
    p_c_kw: float = 2.5
    inverter_kw: float = 7.5
    reward_on_commanded: bool = False
    # tank
    tank_volume_l: float = 200.0
    lower_volume_l: float = 100.0
    upper_volume_l: float = 100.0
    heater_kw: float = 2.4
    loss_w_per_k: float = 1.0
    ambient_c: float = 20.0
    inlet_c: float = 12.0
    t_min_c: float = 45.0
    t_max_c: float = 55.0
    initial_temp_c: float = 50.0
    # training
    clip_epsilon: float = 0.2
    gamma: float = 0.99
    gae_lambda: float = 0.99
    learning_rate: float = 5e-3
    critic_learning_rate: float = 0.0
    rollout_horizon: int = 480
    ppo_epochs: int = 6
    minibatch_size: int = 96
    entropy_coef: float = 5e-4
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    prob_clamp: float = 1e-6
    greedy_eval: bool = False
    advantage_norm: str = "rollout"
    hc_latched: bool = True
    # experiment plan
    pretrain_years: int = 3
    test_years: int = 1
    repeats: int = 5
    online_learning: bool = True

    def tank_params(self) -> TankParams:
        return TankParams(
            total_volume_l=self.tank_volume_l,
            lower_volume_l=self.lower_volume_l,
            upper_volume_l=self.upper_volume_l,
            heater_kw=self.heater_kw,
            loss_w_per_k=self.loss_w_per_k,
            ambient_c=self.ambient_c,
            inlet_c=self.inlet_c,
            t_min_c=self.t_min_c,
            t_max_c=self.t_max_c,
        )

    def env_config(self, inverter_kw: float | None = None) -> EnvConfig:
        return EnvConfig(
            p_c_kw=self.p_c_kw,
            inverter_kw=inverter_kw if inverter_kw else self.inverter_kw,
            reward_on_commanded=self.reward_on_commanded,
        )

    def ppo_config(self) -> PpoConfig:
        return PpoConfig(
            epsilon=self.clip_epsilon,
            gamma=self.gamma,
            lam=self.gae_lambda,
            rollout_horizon=self.rollout_horizon,
            epochs=self.ppo_epochs,
            minibatch_size=self.minibatch_size,
            learning_rate=self.learning_rate,
            critic_learning_rate=self.critic_learning_rate,
            entropy_coef=self.entropy_coef,
            adam_beta1=self.adam_beta1,
            adam_beta2=self.adam_beta2,
            adam_eps=self.adam_eps,
            prob_clamp=self.prob_clamp,
            greedy_eval=self.greedy_eval,
            advantage_norm=self.advantage_norm,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(Settings)}


def parse_config_text(text: str) -> dict:
    """Parse overrides; values are coerced to the default field's type."""
    overrides = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        kind = _FIELD_TYPES[key]
        try:
            if kind in ("bool", bool):
                lowered = value.lower()
                if lowered not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError(f"not a boolean: {value!r}")
                overrides[key] = lowered in ("true", "1", "yes")
            elif kind in ("int", int):
                overrides[key] = int(value)
            elif kind in ("str", str):
                overrides[key] = value
            else:
                overrides[key] = float(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    return overrides


def load_settings(path=None) -> Settings:
    """Defaults, overridden by the file at `path` or $HEATSHIFT_CONFIG."""
    if path is None:
        path = os.environ.get(CONFIG_ENV_VAR)
    settings = Settings()
    if path:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        for key, value in parse_config_text(text).items():
            setattr(settings, key, value)
    return settings
