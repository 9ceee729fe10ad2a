"""Policies, value functions and the PPO training loop.

Each agent owns a small convolutional policy over its mask stack with one
logit per (cell, rotation) pair, and a per-step value table: the placement
order is fixed, so the value input is just the step number.  The thermal
and wirelength agents share episodes (the router decides who acts) but
never share parameters or optimizer state.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .env import AgentKind, Observation, PlacementEnv
from .model import BenchmarkConfig, placement_order

CHECKPOINT_FORMAT_VERSION = 1

# finite stand-in for -inf: exp() underflows to exactly 0.0, so infeasible
# actions get probability 0 while entropy stays NaN-free
MASKED_LOGIT = -1.0e9

DEADLOCK_PENALTY = -1.0


class PlacementDeadlockError(RuntimeError):
    """No feasible cell remains for the chiplet being placed."""


class NonFiniteLossError(RuntimeError):
    def __init__(self, stats: dict):
        self.stats = stats
        super().__init__(f"non-finite loss/gradient during PPO update: {stats}")


@dataclass(frozen=True)
class PolicySpec:
    in_channels: int
    grid_n: int
    hidden_channels: tuple[int, ...] = (16, 16)

    @property
    def n_actions(self) -> int:
        return 2 * self.grid_n * self.grid_n


class PolicyNet(nn.Module):
    """Conv stack ending in a two-channel head: channel 0 holds the logits
    for unrotated placements, channel 1 for rotated ones."""

    def __init__(self, spec: PolicySpec):
        super().__init__()
        self.spec = spec
        layers = []
        prev = spec.in_channels
        for width in spec.hidden_channels:
            layers += [nn.Conv2d(prev, width, kernel_size=3, padding=1), nn.ReLU()]
            prev = width
        head = nn.Conv2d(prev, 2, kernel_size=1)
        # zero head: the starting policy is uniform over feasible actions
        nn.init.zeros_(head.weight)
        nn.init.zeros_(head.bias)
        layers.append(head)
        self.net = nn.Sequential(*layers)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        out = self.net(x)
        return torch.cat([out[:, 0].flatten(1), out[:, 1].flatten(1)], dim=1)


class ValueNet(nn.Module):
    """Per-step value table; output depends only on the step index."""

    def __init__(self, step_count: int):
        super().__init__()
        self.table = nn.Embedding(step_count, 1)
        nn.init.zeros_(self.table.weight)

    def forward(self, step_index: torch.Tensor) -> torch.Tensor:
        return self.table(step_index).squeeze(-1)


@dataclass
class TrainConfig:
    learning_rate: float = 3e-4
    clip_ratio: float = 0.2
    discount: float = 0.99
    gae_lambda: float = 0.95
    entropy_coef: float = 0.01
    value_coef: float = 0.5
    epochs: int = 4
    minibatch_size: int = 32
    episodes_per_batch: int = 16
    total_updates: int = 200
    seed: int = 0
    hidden_channels: tuple[int, ...] = (16, 16)
    checkpoint_interval: int = 50
    eval_episodes_per_checkpoint: int = 4
    normalize_advantages: bool = True

    def __post_init__(self):
        if not 0.0 < self.clip_ratio < 1.0:
            raise ValueError("clip_ratio must be in (0, 1)")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must be in (0, 1]")
        if not 0.0 < self.gae_lambda <= 1.0:
            raise ValueError("gae_lambda must be in (0, 1]")
        for name in ("epochs", "minibatch_size", "episodes_per_batch", "total_updates"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        self.hidden_channels = tuple(self.hidden_channels)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hidden_channels"] = list(self.hidden_channels)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        return cls(**data)

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def masked_logits(logits: torch.Tensor, action_mask: torch.Tensor) -> torch.Tensor:
    return torch.where(action_mask, logits, torch.full_like(logits, MASKED_LOGIT))


def act(policy: PolicyNet, obs: Observation,
        generator: torch.Generator | None = None, greedy: bool = False) -> tuple[int, float]:
    """Sample (or argmax) a feasible action for one observation."""
    stack = torch.from_numpy(obs.mask_stack).unsqueeze(0)
    mask = torch.from_numpy(obs.action_mask).unsqueeze(0)
    actions, log_probs = act_batch(policy, stack, mask, generator=generator, greedy=greedy)
    return int(actions[0]), float(log_probs[0])


def act_batch(policy: PolicyNet, stacks: torch.Tensor, masks: torch.Tensor,
              generator: torch.Generator | None = None,
              greedy: bool = False) -> tuple[torch.Tensor, torch.Tensor]:
    if not torch.any(masks, dim=1).all():
        raise PlacementDeadlockError("no feasible action for at least one environment")
    with torch.no_grad():
        logits = masked_logits(policy(stacks), masks)
        log_probs_all = torch.log_softmax(logits, dim=1)
        if greedy:
            actions = torch.argmax(log_probs_all, dim=1)
        else:
            probs = torch.softmax(logits, dim=1)
            actions = torch.multinomial(probs, 1, generator=generator).squeeze(1)
        log_probs = log_probs_all.gather(1, actions.unsqueeze(1)).squeeze(1)
    return actions, log_probs


def gae(rewards: np.ndarray, values: np.ndarray, discount: float, lam: float) -> tuple[np.ndarray, np.ndarray]:
    """Generalized advantage estimation with terminal bootstrap 0.
    Returns (advantages, returns)."""
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    adv = np.zeros(len(rewards))
    running = 0.0
    next_value = 0.0
    for i in reversed(range(len(rewards))):
        delta = rewards[i] + discount * next_value - values[i]
        running = delta + discount * lam * running
        adv[i] = running
        next_value = values[i]
    return adv, adv + values


@dataclass
class TrajStep:
    mask_stack: np.ndarray
    action_mask: np.ndarray
    step_index: int
    action: int
    log_prob: float
    reward: float
    value: float
    agent: str


@dataclass
class Trajectory:
    """One episode's per-step records; advantages/returns are filled per
    agent over that agent's own step subsequence."""
    steps: list[TrajStep] = field(default_factory=list)
    advantages: np.ndarray | None = None
    returns: np.ndarray | None = None
    aborted: bool = False


def fill_gae(traj: Trajectory, discount: float, lam: float) -> Trajectory:
    n = len(traj.steps)
    traj.advantages = np.zeros(n)
    traj.returns = np.zeros(n)
    for agent in {s.agent for s in traj.steps}:
        idx = [i for i, s in enumerate(traj.steps) if s.agent == agent]
        rewards = np.array([traj.steps[i].reward for i in idx])
        values = np.array([traj.steps[i].value for i in idx])
        adv, ret = gae(rewards, values, discount, lam)
        for j, i in enumerate(idx):
            traj.advantages[i] = adv[j]
            traj.returns[i] = ret[j]
    return traj


class AgentBundle:
    """One agent's nets plus (optionally) its own optimizer."""

    def __init__(self, name: str, spec: PolicySpec, step_count: int,
                 learning_rate: float | None = None):
        self.name = name
        self.spec = spec
        self.policy = PolicyNet(spec)
        self.value = ValueNet(step_count)
        self.optimizer = None
        if learning_rate is not None:
            self.optimizer = torch.optim.Adam(
                list(self.policy.parameters()) + list(self.value.parameters()),
                lr=learning_rate)


def ppo_loss(policy: PolicyNet, value: ValueNet, batch: dict, tc: TrainConfig):
    """Clipped-surrogate PPO loss on one minibatch of tensors.

    batch keys: mask_stack, action_mask, step_index, action, old_log_prob,
    advantage, ret.
    """
    logits = masked_logits(policy(batch["mask_stack"]), batch["action_mask"])
    log_probs_all = torch.log_softmax(logits, dim=1)
    log_probs = log_probs_all.gather(1, batch["action"].unsqueeze(1)).squeeze(1)
    ratio = torch.exp(log_probs - batch["old_log_prob"])
    adv = batch["advantage"]
    surr1 = ratio * adv
    surr2 = torch.clamp(ratio, 1.0 - tc.clip_ratio, 1.0 + tc.clip_ratio) * adv
    policy_loss = -torch.min(surr1, surr2).mean()

    values = value(batch["step_index"])
    value_loss = torch.mean((values - batch["ret"]) ** 2)

    probs = torch.softmax(logits, dim=1)
    entropy = -(probs * log_probs_all).sum(dim=1).mean()

    loss = policy_loss + tc.value_coef * value_loss - tc.entropy_coef * entropy
    stats = {"policy_loss": float(policy_loss.detach()),
             "value_loss": float(value_loss.detach()),
             "entropy": float(entropy.detach())}
    return loss, stats


def _batch_tensors(steps: list[TrajStep], advantages: np.ndarray, returns: np.ndarray,
                   dtype=torch.float32) -> dict:
    return {
        "mask_stack": torch.from_numpy(np.stack([s.mask_stack for s in steps])).to(dtype),
        "action_mask": torch.from_numpy(np.stack([s.action_mask for s in steps])),
        "step_index": torch.tensor([s.step_index for s in steps], dtype=torch.long),
        "action": torch.tensor([s.action for s in steps], dtype=torch.long),
        "old_log_prob": torch.tensor([s.log_prob for s in steps], dtype=dtype),
        "advantage": torch.as_tensor(advantages, dtype=dtype),
        "ret": torch.as_tensor(returns, dtype=dtype),
    }


def ppo_update(bundle: AgentBundle, steps: list[TrajStep], advantages: np.ndarray,
               returns: np.ndarray, tc: TrainConfig,
               shuffle_generator: torch.Generator | None = None) -> dict:
    """Several epochs of minibatched clipped-surrogate updates on one
    agent's step set.  Returns averaged loss statistics."""
    if tc.normalize_advantages and len(advantages) > 1:
        advantages = (advantages - advantages.mean()) / (advantages.std() + 1e-8)
    batch = _batch_tensors(steps, advantages, returns)
    n = len(steps)
    totals = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0}
    count = 0
    for _ in range(tc.epochs):
        perm = torch.randperm(n, generator=shuffle_generator)
        for start in range(0, n, tc.minibatch_size):
            idx = perm[start: start + tc.minibatch_size]
            mb = {k: v[idx] for k, v in batch.items()}
            loss, stats = ppo_loss(bundle.policy, bundle.value, mb, tc)
            if not math.isfinite(float(loss.detach())):
                raise NonFiniteLossError({**stats, "agent": bundle.name})
            bundle.optimizer.zero_grad()
            loss.backward()
            bundle.optimizer.step()
            for k in totals:
                totals[k] += stats[k]
            count += 1
    return {k: v / max(count, 1) for k, v in totals.items()}


@dataclass
class EvalRecord:
    update_index: int
    episode: int
    greedy: bool
    wl: float
    temp: float
    layout: dict
    trace: tuple


@dataclass
class TrainResult:
    log_rows: list[dict]
    episode_rows: list[dict]
    eval_records: list[EvalRecord]
    checkpoint_paths: list[Path]
    aborted_episodes: int
    mode: str


def _layout_of(state, config: BenchmarkConfig) -> dict:
    return {p.chiplet_id: (p.footprint.row, p.footprint.col, p.orientation.value)
            for p in state.placed}


class Trainer:
    """Shared driver for the routed two-agent setup and the single-agent
    weighted-sum baseline (mode "combined")."""

    def __init__(self, config: BenchmarkConfig, tc: TrainConfig, mode: str = "routed",
                 combined_weights: tuple[float, float] = (0.7, 0.3),
                 out_dir: Path | None = None, episode_hook=None):
        self.config = config
        self.tc = tc
        self.mode = mode
        self.combined_weights = combined_weights
        self.out_dir = Path(out_dir) if out_dir is not None else None
        # called as episode_hook(trace, final_state) for every completed
        # (non-aborted) training episode
        self.episode_hook = episode_hook
        self.order = placement_order(config)
        self.n_steps = len(self.order)

        torch.manual_seed(tc.seed)
        torch.set_num_threads(1)  # bitwise-reproducible runs on one machine

        n = config.grid_n
        probe = PlacementEnv(config, observation_mode=mode, combined_weights=combined_weights)
        if mode == "combined":
            spec = PolicySpec(len(probe.channel_names(AgentKind.WIRE)), n, tc.hidden_channels)
            self.bundles = {"single": AgentBundle("single", spec, self.n_steps, tc.learning_rate)}
        else:
            self.bundles = {}
            for kind in (AgentKind.THERMAL, AgentKind.WIRE):
                spec = PolicySpec(len(probe.channel_names(kind)), n, tc.hidden_channels)
                self.bundles[kind.value] = AgentBundle(kind.value, spec, self.n_steps,
                                                       tc.learning_rate)

        self.sample_gen = torch.Generator().manual_seed(tc.seed + 1)
        self.shuffle_gen = torch.Generator().manual_seed(tc.seed + 2)
        self.eval_gen = torch.Generator().manual_seed(tc.seed + 3)

    def _bundle_for(self, agent: AgentKind) -> AgentBundle:
        if self.mode == "combined":
            return self.bundles["single"]
        return self.bundles[agent.value]

    def collect_batch(self) -> tuple[list[Trajectory], list[dict], int]:
        """Run episodes_per_batch episodes in lockstep (every env places the
        same chiplet at each step, so policy forwards batch cleanly)."""
        n_envs = self.tc.episodes_per_batch
        envs = [PlacementEnv(self.config, observation_mode=self.mode,
                             combined_weights=self.combined_weights)
                for _ in range(n_envs)]
        obs = [e.reset() for e in envs]
        trajs = [Trajectory() for _ in range(n_envs)]
        alive = [True] * n_envs
        aborted = 0

        for k in range(self.n_steps):
            idx = [i for i in range(n_envs) if alive[i]]
            if not idx:
                break
            # deadlocked envs: penalize their previous step and stop them
            for i in list(idx):
                if not obs[i].action_mask.any():
                    alive[i] = False
                    trajs[i].aborted = True
                    aborted += 1
                    if trajs[i].steps:
                        trajs[i].steps[-1].reward = DEADLOCK_PENALTY
                    idx.remove(i)
            if not idx:
                break
            agent = obs[idx[0]].active_agent
            bundle = self._bundle_for(agent)
            stacks = torch.from_numpy(np.stack([obs[i].mask_stack for i in idx]))
            masks = torch.from_numpy(np.stack([obs[i].action_mask for i in idx]))
            actions, log_probs = act_batch(bundle.policy, stacks, masks,
                                           generator=self.sample_gen)
            with torch.no_grad():
                value_k = float(bundle.value(torch.tensor([k]))[0])
            for j, i in enumerate(idx):
                res = envs[i].step(int(actions[j]))
                trajs[i].steps.append(TrajStep(
                    mask_stack=obs[i].mask_stack, action_mask=obs[i].action_mask,
                    step_index=k, action=int(actions[j]), log_prob=float(log_probs[j]),
                    reward=res.reward, value=value_k, agent=bundle.name))
                obs[i] = res.obs

        episode_rows = []
        for i, env in enumerate(envs):
            trace = env.trace
            if self.episode_hook is not None and not trajs[i].aborted:
                self.episode_hook(trace, env.state)
            row = {
                "aborted": trajs[i].aborted,
                "wl": trace[-1].wl_after if trace else float("nan"),
                "temp": trace[-1].temp_after if trace else float("nan"),
                "r_wire_raw": -sum(s.wl_delta for s in trace if s.agent == "wire"),
                "r_thermal_raw": -sum(s.temp_delta for s in trace if s.agent == "thermal"),
                "r_wire_norm": sum(s.wire_reward for s in trace if s.agent == "wire"),
                "r_thermal_norm": sum(s.thermal_reward for s in trace if s.agent == "thermal"),
            }
            episode_rows.append(row)
        return trajs, episode_rows, aborted

    def run_eval(self, update_index: int, n_episodes: int) -> list[EvalRecord]:
        """Evaluation episodes from the current parameters: the first is
        greedy (argmax), the rest sample from the policy."""
        records = []
        for e in range(n_episodes):
            env = PlacementEnv(self.config, observation_mode=self.mode,
                               combined_weights=self.combined_weights)
            obs = env.reset()
            greedy = e == 0
            try:
                while obs is not None:
                    bundle = self._bundle_for(obs.active_agent)
                    action, _ = act(bundle.policy, obs, generator=self.eval_gen, greedy=greedy)
                    obs = env.step(action).obs
            except PlacementDeadlockError:
                continue  # incomplete layout: nothing to evaluate
            wl = env.trace[-1].wl_after
            temp = env.trace[-1].temp_after
            records.append(EvalRecord(update_index=update_index, episode=e, greedy=greedy,
                                      wl=wl, temp=temp,
                                      layout=_layout_of(env.state, self.config),
                                      trace=env.trace))
        return records

    def save_checkpoint(self, update_index: int) -> Path | None:
        if self.out_dir is None:
            return None
        ckpt_dir = self.out_dir / "checkpoints"
        ckpt_dir.mkdir(parents=True, exist_ok=True)
        path = ckpt_dir / f"ckpt_{update_index:06d}.pt"
        torch.save({
            "format_version": CHECKPOINT_FORMAT_VERSION,
            "mode": self.mode,
            "grid_n": self.config.grid_n,
            "step_count": self.n_steps,
            "combined_weights": list(self.combined_weights),
            "train_config_digest": self.tc.digest(),
            "update_index": update_index,
            "agents": {
                name: {
                    "in_channels": b.spec.in_channels,
                    "hidden_channels": list(b.spec.hidden_channels),
                    "policy": b.policy.state_dict(),
                    "value": b.value.state_dict(),
                } for name, b in self.bundles.items()
            },
        }, path)
        return path

    def train(self) -> TrainResult:
        log_rows, episode_rows, eval_records, ckpts = [], [], [], []
        total_aborted = 0
        for update in range(1, self.tc.total_updates + 1):
            trajs, ep_rows, aborted = self.collect_batch()
            total_aborted += aborted
            for traj in trajs:
                fill_gae(traj, self.tc.discount, self.tc.gae_lambda)
            stats = {}
            for name, bundle in self.bundles.items():
                steps, advs, rets = [], [], []
                for traj in trajs:
                    for i, s in enumerate(traj.steps):
                        if s.agent == name:
                            steps.append(s)
                            advs.append(traj.advantages[i])
                            rets.append(traj.returns[i])
                if steps:
                    stats[name] = ppo_update(bundle, steps, np.array(advs), np.array(rets),
                                             self.tc, shuffle_generator=self.shuffle_gen)
                else:
                    stats[name] = {"policy_loss": 0.0, "value_loss": 0.0, "entropy": 0.0}

            ok_rows = [r for r in ep_rows if not r["aborted"]]
            row = {"update": update,
                   "n_episodes": len(ep_rows),
                   "n_aborted": aborted,
                   "mean_wl": float(np.mean([r["wl"] for r in ok_rows])) if ok_rows else float("nan"),
                   "mean_temp": float(np.mean([r["temp"] for r in ok_rows])) if ok_rows else float("nan"),
                   "mean_r_wire_raw": float(np.mean([r["r_wire_raw"] for r in ok_rows])) if ok_rows else float("nan"),
                   "mean_r_thermal_raw": float(np.mean([r["r_thermal_raw"] for r in ok_rows])) if ok_rows else float("nan")}
            for name, s in stats.items():
                for k, v in s.items():
                    row[f"{name}_{k}"] = v
            log_rows.append(row)
            for i, r in enumerate(ep_rows):
                episode_rows.append({"update": update, "episode": i, **r})

            if update % self.tc.checkpoint_interval == 0 or update == self.tc.total_updates:
                path = self.save_checkpoint(update)
                if path is not None:
                    ckpts.append(path)
                eval_records.extend(self.run_eval(update, self.tc.eval_episodes_per_checkpoint))

        return TrainResult(log_rows=log_rows, episode_rows=episode_rows,
                           eval_records=eval_records, checkpoint_paths=ckpts,
                           aborted_episodes=total_aborted, mode=self.mode)


def train(config: BenchmarkConfig, tc: TrainConfig, out_dir=None) -> TrainResult:
    """Full two-agent training run (router decides who places each chiplet)."""
    return Trainer(config, tc, mode="routed", out_dir=out_dir).train()


def load_checkpoint(path):
    """Rebuild bundles from a checkpoint; returns (bundles, metadata)."""
    data = torch.load(path, map_location="cpu", weights_only=False)
    if data.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format: {data.get('format_version')}")
    bundles = {}
    for name, blob in data["agents"].items():
        spec = PolicySpec(in_channels=blob["in_channels"], grid_n=data["grid_n"],
                          hidden_channels=tuple(blob["hidden_channels"]))
        bundle = AgentBundle(name, spec, data["step_count"])
        bundle.policy.load_state_dict(blob["policy"])
        bundle.value.load_state_dict(blob["value"])
        bundles[name] = bundle
    return bundles, data
