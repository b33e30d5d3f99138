"""Actors, critic and the on-policy trainer.

Two actor variants share the training loop. The expert actor is split
into 24 hourly subnetworks; the quarter-of-day selects the subnetwork and
a non-learned output stage replicates the safety override, so the policy
is exactly 1 below the minimum temperature and exactly 0 at the maximum,
whatever the weights. The plain actor is a single fully connected network
and relies on the environment's override instead.

Training is the clipped-ratio policy update with generalized advantage
estimation and a mean-squared-error critic. Samples on which the expert
override fires are treated as forced: their log-probability is a constant
zero and they contribute no actor gradient (the override is part of the
plant, not of the policy distribution).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels
from . import nn
from .clock import QUARTERS_PER_DAY, QUARTERS_PER_HOUR

# Fixed input normalization (temperatures arrive in degC, time in quarters).
TEMP_OFFSET_C = 45.0
TEMP_SCALE_K = 10.0

EXPERT_SUBNET_SIZES = [4, 6, 4, 1]          # feature extraction, hidden, output
EXPERT_SUBNET_ACTS = ["relu", "relu", "sigmoid"]
PLAIN_SIZES = [5, 10, 10, 1]
PLAIN_ACTS = ["relu", "relu", "sigmoid"]
CRITIC_SIZES = [9, 28, 28, 1]
CRITIC_ACTS = ["relu", "relu", "identity"]

# Fresh actors start biased towards "off": heating only pays in specific
# situations, so the initial policy should rarely fire outside the safety
# override. The output-layer bias shifts sigmoid(0) away from 0.5.
ACTOR_OUTPUT_BIAS = -3.0

N_SUBNETS = 24

FREE, FORCED_ON, FORCED_OFF = 0, 1, 2


def subnet_index(t: int) -> int:
    """Hour-of-day subnetwork selector."""
    if not 0 <= t < QUARTERS_PER_DAY:
        raise ValueError(f"quarter index {t} outside 0..{QUARTERS_PER_DAY - 1}")
    return t // QUARTERS_PER_HOUR


def expert_features(obs, t_min: float) -> np.ndarray:
    t_b = obs.delta_backup + t_min
    return np.array([(t_b - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     (obs.mean_temp_history[0] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     obs.f_e_pv, obs.pv_ratio])


def plain_features(obs, t_min: float) -> np.ndarray:
    t_b = obs.delta_backup + t_min
    return np.array([(t_b - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     (obs.mean_temp_history[0] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     obs.f_e_pv, obs.pv_ratio,
                     obs.t / QUARTERS_PER_DAY])


def critic_features(obs) -> np.ndarray:
    mu = obs.mean_temp_history
    return np.array([(mu[0] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     (mu[1] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     (mu[2] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     (mu[3] - TEMP_OFFSET_C) / TEMP_SCALE_K,
                     obs.delta_backup / TEMP_SCALE_K,
                     obs.f_e_pv, obs.pv_ratio, obs.t_cos, obs.t_sin])


class ExpertActor:
    """24 hourly subnetworks with the override stage baked into the output."""

    kind = "expert"
    input_dim = 4

    def __init__(self, subnets, t_min: float, t_max: float):
        if len(subnets) != N_SUBNETS:
            raise ValueError(f"expected {N_SUBNETS} subnetworks, got {len(subnets)}")
        self.subnets = list(subnets)
        self.t_min = t_min
        self.t_max = t_max

    @classmethod
    def create(cls, rng, t_min: float = 45.0, t_max: float = 55.0) -> "ExpertActor":
        subnets = []
        for _ in range(N_SUBNETS):
            net = nn.glorot_init(EXPERT_SUBNET_SIZES, EXPERT_SUBNET_ACTS, rng)
            net.biases[-1][0] = ACTOR_OUTPUT_BIAS
            subnets.append(net)
        return cls(subnets, t_min, t_max)

    def features(self, obs) -> np.ndarray:
        return expert_features(obs, self.t_min)

    def forced(self, t_b: float) -> int:
        if t_b <= self.t_min:
            return FORCED_ON
        if t_b >= self.t_max:
            return FORCED_OFF
        return FREE

    def action_prob(self, obs) -> float:
        """Probability of commanding the heater on, override stage included."""
        h = subnet_index(obs.t)
        t_b = obs.delta_backup + self.t_min
        state = self.forced(t_b)
        if state == FORCED_ON:
            return 1.0
        if state == FORCED_OFF:
            return 0.0
        return float(self.subnets[h].forward(self.features(obs))[0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t_min": self.t_min, "t_max": self.t_max,
                "subnets": [net.to_dict() for net in self.subnets]}

    @classmethod
    def from_dict(cls, d: dict) -> "ExpertActor":
        return cls([nn.DenseNet.from_dict(s) for s in d["subnets"]],
                   d["t_min"], d["t_max"])


class PlainActor:
    """Fully connected actor; the safety override lives in the environment."""

    kind = "plain"
    input_dim = 5

    def __init__(self, net: nn.DenseNet, t_min: float = 45.0):
        self.net = net
        self.t_min = t_min  # only used to rebuild the sensor reading feature

    @classmethod
    def create(cls, rng, t_min: float = 45.0) -> "PlainActor":
        net = nn.glorot_init(PLAIN_SIZES, PLAIN_ACTS, rng)
        net.biases[-1][0] = ACTOR_OUTPUT_BIAS
        return cls(net, t_min)

    def features(self, obs) -> np.ndarray:
        return plain_features(obs, self.t_min)

    def forced(self, t_b: float) -> int:
        return FREE

    def action_prob(self, obs) -> float:
        subnet_index(obs.t)  # range check
        return float(self.net.forward(self.features(obs))[0])

    def to_dict(self) -> dict:
        return {"kind": self.kind, "t_min": self.t_min, "net": self.net.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "PlainActor":
        return cls(nn.DenseNet.from_dict(d["net"]), d["t_min"])


class Critic:
    def __init__(self, net: nn.DenseNet):
        self.net = net

    @classmethod
    def create(cls, rng) -> "Critic":
        return cls(nn.glorot_init(CRITIC_SIZES, CRITIC_ACTS, rng))

    def value(self, obs) -> float:
        return float(self.net.forward(critic_features(obs))[0])

    def values(self, features_2d) -> np.ndarray:
        return self.net.forward(features_2d)[:, 0]

    def to_dict(self) -> dict:
        return {"net": self.net.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "Critic":
        return cls(nn.DenseNet.from_dict(d["net"]))


def actor_policy(actor, obs) -> float:
    """Probability of u=1 under the given actor for this observation."""
    return actor.action_prob(obs)


def actor_from_dict(d: dict):
    if d["kind"] == "expert":
        return ExpertActor.from_dict(d)
    if d["kind"] == "plain":
        return PlainActor.from_dict(d)
    raise ValueError(f"unknown actor kind {d['kind']!r}")


def create_actor(kind: str, rng, t_min: float = 45.0, t_max: float = 55.0):
    if kind == "expert":
        return ExpertActor.create(rng, t_min, t_max)
    if kind == "plain":
        return PlainActor.create(rng, t_min)
    raise ValueError(f"unknown actor kind {kind!r}")


@dataclass
class PolicyParams:
    """The transfer payload: actor plus critic weights."""

    actor: object
    critic: Critic

    def save(self, path, meta: dict | None = None) -> None:
        payload = {"actor": self.actor.to_dict(), "critic": self.critic.to_dict()}
        if meta:
            payload["meta"] = meta
        nn.save_params(path, payload)

    @classmethod
    def load(cls, path) -> "PolicyParams":
        body = nn.load_params(path)
        return cls(actor_from_dict(body["actor"]), Critic.from_dict(body["critic"]))

    def copy(self) -> "PolicyParams":
        return PolicyParams(actor_from_dict(self.actor.to_dict()),
                            Critic.from_dict(self.critic.to_dict()))


# ---------------------------------------------------------------------------
# PPO machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PpoConfig:
    epsilon: float = 0.2
    gamma: float = 0.99
    lam: float = 0.99
    rollout_horizon: int = 960
    epochs: int = 4
    minibatch_size: int = 96
    learning_rate: float = 3e-4
    critic_learning_rate: float = 0.0  # 0 means "same as learning_rate"
    entropy_coef: float = 0.01
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    prob_clamp: float = 1e-6
    greedy_eval: bool = False
    # "rollout" rescales advantages once per iteration; "minibatch" rescales
    # within every update batch (noisier when a batch is homogeneous).
    advantage_norm: str = "rollout"

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must be in (0, 1)")
        if not 0.0 < self.gamma <= 1.0 or not 0.0 < self.lam <= 1.0:
            raise ValueError("gamma and lambda must be in (0, 1]")
        if self.advantage_norm not in ("rollout", "minibatch"):
            raise ValueError("advantage_norm must be 'rollout' or 'minibatch'")


def prob_ratio(logp_new, logp_old):
    return np.exp(np.asarray(logp_new) - np.asarray(logp_old))


def bernoulli_logp(p, u, clamp: float = 1e-6):
    """log pi(u) for a Bernoulli(p) policy, with p clamped away from 0 and 1."""
    pc = np.clip(p, clamp, 1.0 - clamp)
    return np.where(np.asarray(u) == 1, np.log(pc), np.log1p(-pc))


def bernoulli_entropy(p, clamp: float = 1e-6):
    pc = np.clip(p, clamp, 1.0 - clamp)
    return -(pc * np.log(pc) + (1.0 - pc) * np.log1p(-pc))


def gae(rewards, values, dones, gamma: float, lam: float):
    """Generalized advantages and value targets.

    values must hold one bootstrap entry more than rewards; dones marks
    episode cuts (no bootstrapping across them).
    """
    rewards = np.ascontiguousarray(rewards, dtype=np.float64)
    values = np.ascontiguousarray(values, dtype=np.float64)
    dones = np.ascontiguousarray(dones, dtype=np.float64)
    if values.shape[0] != rewards.shape[0] + 1:
        raise ValueError(f"values must have {rewards.shape[0] + 1} entries, got {values.shape[0]}")
    if dones.shape[0] != rewards.shape[0]:
        raise ValueError("dones must align with rewards")
    return kernels.gae_scan(rewards, values, dones, gamma, lam)


def clipped_objective(ratio, adv, epsilon: float):
    """Per-sample min(g*A, clip(g)*A) of the conservative policy objective."""
    ratio = np.asarray(ratio, dtype=np.float64)
    adv = np.asarray(adv, dtype=np.float64)
    return np.minimum(ratio * adv, np.clip(ratio, 1.0 - epsilon, 1.0 + epsilon) * adv)


def ppo_losses(probs_new, logp_old, u, adv, values, value_targets, cfg: PpoConfig):
    """Scalar actor and critic losses of one minibatch (diagnostic form).

    The actor loss is the negated clipped objective minus the entropy
    bonus, i.e. the quantity the trainer minimises.
    """
    logp_new = bernoulli_logp(probs_new, u, cfg.prob_clamp)
    g = prob_ratio(logp_new, logp_old)
    objective = clipped_objective(g, adv, cfg.epsilon)
    entropy = bernoulli_entropy(probs_new, cfg.prob_clamp)
    actor_loss = -float(np.mean(objective)) - cfg.entropy_coef * float(np.mean(entropy))
    err = np.asarray(values, dtype=np.float64) - np.asarray(value_targets, dtype=np.float64)
    critic_loss = float(np.mean(err * err))
    return actor_loss, critic_loss


class RolloutBuffer:
    """Fixed-horizon storage for one on-policy rollout."""

    def __init__(self, horizon: int, actor_dim: int):
        self.horizon = horizon
        self.actor_feat = np.zeros((horizon, actor_dim))
        self.critic_feat = np.zeros((horizon + 1, CRITIC_SIZES[0]))
        self.hours = np.zeros(horizon, dtype=np.int64)
        self.forced = np.zeros(horizon, dtype=np.int8)
        self.u = np.zeros(horizon, dtype=np.int8)
        self.logp = np.zeros(horizon)
        self.rewards = np.zeros(horizon)
        self.dones = np.zeros(horizon)
        self.n = 0


@dataclass
class IterationStats:
    steps: int
    mean_reward: float
    reward_sum: float
    actor_loss: float
    critic_loss: float
    diverged: bool = False


@dataclass
class TrainLog:
    iterations: list = field(default_factory=list)

    def append(self, stats: IterationStats):
        self.iterations.append(stats)

    @property
    def mean_rewards(self):
        return [s.mean_reward for s in self.iterations]


class Trainer:
    """Owns one actor/critic pair and updates them from on-policy rollouts."""

    def __init__(self, actor, critic: Critic, cfg: PpoConfig, rng: np.random.Generator):
        self.actor = actor
        self.critic = critic
        self.cfg = cfg
        self.rng = rng
        self.diverged = False
        if actor.kind == "expert":
            self._adam_actor = [nn.Adam(net, cfg.learning_rate, cfg.adam_beta1,
                                        cfg.adam_beta2, cfg.adam_eps)
                                for net in actor.subnets]
        else:
            self._adam_actor = [nn.Adam(actor.net, cfg.learning_rate, cfg.adam_beta1,
                                        cfg.adam_beta2, cfg.adam_eps)]
        critic_lr = cfg.critic_learning_rate or cfg.learning_rate
        self._adam_critic = nn.Adam(critic.net, critic_lr, cfg.adam_beta1,
                                    cfg.adam_beta2, cfg.adam_eps)
        self._buf = RolloutBuffer(cfg.rollout_horizon, actor.input_dim)

    # -- rollout collection -------------------------------------------------

    def _policy_prob(self, feat_row, hour: int, forced: int) -> float:
        if forced == FORCED_ON:
            return 1.0
        if forced == FORCED_OFF:
            return 0.0
        if self.actor.kind == "expert":
            net = self.actor.subnets[hour]
        else:
            net = self.actor.net
        return float(net.forward_all(feat_row.reshape(1, -1))[-1][0, 0])

    def collect(self, env) -> int:
        """Fill the buffer with up to one horizon of steps; returns the count."""
        buf = self._buf
        cfg = self.cfg
        expert = self.actor.kind == "expert"
        t_min = self.actor.t_min
        greedy = cfg.greedy_eval
        obs = env.observation() if env.remaining() > 0 else None
        i = 0
        while i < cfg.rollout_horizon and env.remaining() > 0:
            mu = obs.mean_temp_history
            cf = buf.critic_feat[i]
            cf[0] = (mu[0] - TEMP_OFFSET_C) / TEMP_SCALE_K
            cf[1] = (mu[1] - TEMP_OFFSET_C) / TEMP_SCALE_K
            cf[2] = (mu[2] - TEMP_OFFSET_C) / TEMP_SCALE_K
            cf[3] = (mu[3] - TEMP_OFFSET_C) / TEMP_SCALE_K
            cf[4] = obs.delta_backup / TEMP_SCALE_K
            cf[5] = obs.f_e_pv
            cf[6] = obs.pv_ratio
            cf[7] = obs.t_cos
            cf[8] = obs.t_sin

            t_b = obs.delta_backup + t_min
            af = buf.actor_feat[i]
            af[0] = (t_b - TEMP_OFFSET_C) / TEMP_SCALE_K
            af[1] = cf[0]
            af[2] = obs.f_e_pv
            af[3] = obs.pv_ratio
            hour = obs.t // QUARTERS_PER_HOUR
            if expert:
                forced = self.actor.forced(t_b)
            else:
                af[4] = obs.t / QUARTERS_PER_DAY
                forced = FREE
            buf.hours[i] = hour
            buf.forced[i] = forced

            p = self._policy_prob(af, hour, forced)
            r = self.rng.random()
            u = 1 if (p >= 0.5 if greedy else r < p) else 0
            buf.u[i] = u
            buf.logp[i] = 0.0 if forced else float(bernoulli_logp(p, u, cfg.prob_clamp))

            res = env.step(u)
            buf.rewards[i] = res.reward
            buf.dones[i] = 1.0 if res.done else 0.0
            obs = res.observation
            i += 1

        buf.n = i
        if i > 0:
            if obs is not None:
                mu = obs.mean_temp_history
                cf = buf.critic_feat[i]
                cf[0] = (mu[0] - TEMP_OFFSET_C) / TEMP_SCALE_K
                cf[1] = (mu[1] - TEMP_OFFSET_C) / TEMP_SCALE_K
                cf[2] = (mu[2] - TEMP_OFFSET_C) / TEMP_SCALE_K
                cf[3] = (mu[3] - TEMP_OFFSET_C) / TEMP_SCALE_K
                cf[4] = obs.delta_backup / TEMP_SCALE_K
                cf[5] = obs.f_e_pv
                cf[6] = obs.pv_ratio
                cf[7] = obs.t_cos
                cf[8] = obs.t_sin
            else:
                buf.critic_feat[i] = 0.0
        return i

    # -- updates ------------------------------------------------------------

    def _update_actor(self, idx, adv) -> float:
        buf = self._buf
        cfg = self.cfg
        m = idx.shape[0]
        adv_mb = adv[idx]
        if cfg.advantage_norm == "minibatch":
            adv_mb = (adv_mb - adv_mb.mean()) / (adv_mb.std() + 1e-8)
        forced_mb = buf.forced[idx]
        free = forced_mb == FREE
        u_mb = buf.u[idx]

        p_full = np.empty(m)
        p_full[forced_mb == FORCED_ON] = 1.0
        p_full[forced_mb == FORCED_OFF] = 0.0

        segments = []  # (net, adam, local row positions, cached activations)
        free_pos = np.nonzero(free)[0]
        if self.actor.kind == "expert":
            hrs = buf.hours[idx][free_pos]
            order = np.argsort(hrs, kind="stable")
            sorted_pos = free_pos[order]
            sorted_hrs = hrs[order]
            start = 0
            while start < sorted_pos.shape[0]:
                h = sorted_hrs[start]
                end = start
                while end < sorted_hrs.shape[0] and sorted_hrs[end] == h:
                    end += 1
                pos = sorted_pos[start:end]
                net = self.actor.subnets[h]
                acts = net.forward_all(np.ascontiguousarray(buf.actor_feat[idx[pos]]))
                p_full[pos] = acts[-1][:, 0]
                segments.append((net, self._adam_actor[h], pos, acts))
                start = end
        elif free_pos.shape[0] > 0:
            net = self.actor.net
            acts = net.forward_all(np.ascontiguousarray(buf.actor_feat[idx[free_pos]]))
            p_full[free_pos] = acts[-1][:, 0]
            segments.append((net, self._adam_actor[0], free_pos, acts))

        clamp = cfg.prob_clamp
        pc = np.clip(p_full, clamp, 1.0 - clamp)
        logp_new = np.where(u_mb == 1, np.log(pc), np.log1p(-pc))
        logp_new[~free] = 0.0
        g = np.exp(logp_new - buf.logp[idx])
        s1 = g * adv_mb
        s2 = np.clip(g, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon) * adv_mb
        objective = np.minimum(s1, s2)
        entropy = bernoulli_entropy(p_full, clamp)
        entropy[~free] = 0.0
        actor_loss = -float(objective.mean()) - cfg.entropy_coef * float(entropy.mean())
        if not math.isfinite(actor_loss):
            self.diverged = True
            return actor_loss

        unclamped = p_full == pc
        dobj_dlogp = np.where(s1 <= s2, g * adv_mb, 0.0)
        dlogp_dp = np.where(u_mb == 1, 1.0 / pc, -1.0 / (1.0 - pc))
        dlogp_dp[~unclamped] = 0.0
        dent_dp = np.log1p(-pc) - np.log(pc)
        dent_dp[~unclamped] = 0.0
        dl_dp = -(dobj_dlogp * dlogp_dp) / m - cfg.entropy_coef * dent_dp / m
        dl_dp[~free] = 0.0

        for net, adam, pos, acts in segments:
            upstream = np.ascontiguousarray(dl_dp[pos].reshape(-1, 1))
            adam.step(net, net.backward(acts, upstream))
        return actor_loss

    def _update_critic(self, idx, value_targets) -> float:
        buf = self._buf
        m = idx.shape[0]
        acts = self.critic.net.forward_all(np.ascontiguousarray(buf.critic_feat[idx]))
        err = acts[-1][:, 0] - value_targets[idx]
        critic_loss = float(np.mean(err * err))
        if not math.isfinite(critic_loss):
            self.diverged = True
            return critic_loss
        upstream = np.ascontiguousarray((2.0 * err / m).reshape(-1, 1))
        self._adam_critic.step(self.critic.net, self.critic.net.backward(acts, upstream))
        return critic_loss

    def iteration(self, env) -> IterationStats | None:
        """One collect-and-update cycle; None when the env is exhausted."""
        n = self.collect(env)
        if n == 0:
            return None
        buf = self._buf
        cfg = self.cfg
        values = self.critic.values(buf.critic_feat[:n + 1])
        adv, value_targets = gae(buf.rewards[:n], values, buf.dones[:n],
                                 cfg.gamma, cfg.lam)
        if cfg.advantage_norm == "rollout":
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        actor_losses = []
        critic_losses = []
        for _ in range(cfg.epochs):
            perm = self.rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                idx = perm[start:start + cfg.minibatch_size]
                actor_losses.append(self._update_actor(idx, adv))
                critic_losses.append(self._update_critic(idx, value_targets))
                if self.diverged:
                    break
            if self.diverged:
                break
        reward_sum = float(buf.rewards[:n].sum())
        return IterationStats(
            steps=n,
            mean_reward=reward_sum / n,
            reward_sum=reward_sum,
            actor_loss=float(np.mean(actor_losses)),
            critic_loss=float(np.mean(critic_losses)),
            diverged=self.diverged,
        )

    def train_steps(self, env, max_steps: int, log: TrainLog | None = None) -> TrainLog:
        """Run iterations until max_steps env steps are consumed (or exhausted)."""
        log = log if log is not None else TrainLog()
        taken = 0
        while taken < max_steps:
            stats = self.iteration(env)
            if stats is None:
                break
            log.append(stats)
            taken += stats.steps
            if stats.diverged:
                break
        return log
