"""DDPG with an LSTM depth encoder.

The encoder turns the stacked depth frames into an embedding which is
concatenated with the scaled velocity and the goal signal.  Actor and critic
share that embedding.  The encoder is trained through the critic loss only;
the actor sees it as a fixed input.

All online parameters live in one flat vector ``theta`` laid out as
``[encoder | actor | critic]``, the target networks in ``theta_targ``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

import numpy as np

from .metrics import META_FILE, Trajectory
from .nn import AdamState, Encoder, Mlp, adam_update
from .rewards import RewardParams
from .scene import Scene
from .sim import GOAL, SimParams, reset

CHECKPOINT_VERSION = 1
DIST_SCALE = 10.0
TRAIN_LOG_HEADER = ["episode", "return", "steps", "outcome", "eval_sr"]


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.99
    tau: float = 0.005
    lr_actor: float = 1e-4
    lr_critic: float = 1e-3
    batch_size: int = 64
    buffer_capacity: int = 100_000
    warmup_steps: int = 1000
    noise_sigma_start: float = 0.4
    noise_sigma_end: float = 0.05
    noise_decay_steps: int = 50_000
    episodes: int = 2000
    eval_every: int = 50
    eval_episodes: int = 20
    seed: int = 0
    depth_mode: str = "shallow"
    goal_signal: str = "unit_vector"
    smooth_enabled: bool = True
    start_jitter: float = 0.5
    stop_at_sr: float | None = None
    lstm_hidden: int = 32
    embed: int = 32
    hidden: int = 64

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie in (0, 1)")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.depth_mode not in ("deep", "shallow"):
            raise ValueError(f"depth_mode must be deep or shallow, got {self.depth_mode!r}")
        if self.goal_signal not in ("unit_vector", "distance"):
            raise ValueError(f"goal_signal must be unit_vector or distance, got {self.goal_signal!r}")

    def sigma(self, step: int) -> float:
        frac = min(1.0, step / max(1, self.noise_decay_steps))
        return self.noise_sigma_start + frac * (self.noise_sigma_end - self.noise_sigma_start)


class Policy:
    """Encoder, actor and critic plus their target copies.

    Actions are produced in units of ``v_max`` inside the unit disc and scaled
    to m/s on the way out; the critic consumes the scaled-down form.
    """

    def __init__(self, n_rays: int, k_stack: int, v_max: float, depth_cap: float,
                 depth_mode: str = "shallow", goal_signal: str = "unit_vector",
                 lstm_hidden: int = 32, embed: int = 32, hidden: int = 64, seed: int = 0):
        self.hparams = dict(n_rays=n_rays, k_stack=k_stack, v_max=v_max, depth_cap=depth_cap,
                            depth_mode=depth_mode, goal_signal=goal_signal,
                            lstm_hidden=lstm_hidden, embed=embed, hidden=hidden, seed=seed)
        self.n_rays, self.k_stack, self.v_max = n_rays, k_stack, v_max
        self.depth_cap, self.depth_mode, self.goal_signal = depth_cap, depth_mode, goal_signal
        self.goal_width = 2 if goal_signal == "unit_vector" else 1
        self.aux_dim = 2 + self.goal_width
        self.embed = embed
        self.emb_dim = embed + self.aux_dim

        self.encoder = Encoder(n_rays, lstm_hidden, embed)
        self.actor = Mlp([self.emb_dim, hidden, hidden, 2], hidden="relu", output="tanh")
        self.critic = Mlp([self.emb_dim + 2, hidden, hidden, 1], hidden="relu", output="linear")
        sizes = [self.encoder.layout.size, self.actor.layout.size, self.critic.layout.size]
        edges = np.cumsum([0] + sizes)
        self.s_enc = slice(edges[0], edges[1])
        self.s_actor = slice(edges[1], edges[2])
        self.s_critic = slice(edges[2], edges[3])

        rng = np.random.default_rng(seed)
        self.theta = np.concatenate([self.encoder.init(rng),
                                     self.actor.init(rng, out_scale=0.1),
                                     self.critic.init(rng, out_scale=0.1)])
        self.theta_targ = self.theta.copy()

    # ------------------------------------------------------------- features
    def featurize(self, obs) -> tuple[np.ndarray, np.ndarray]:
        """``(depth (K, R) scaled into (0, 1], aux)`` for one observation."""
        depth = np.asarray(obs.depth_stack, dtype=float)
        if depth.shape != (self.k_stack, self.n_rays):
            raise ValueError(f"depth stack {depth.shape} != ({self.k_stack}, {self.n_rays})")
        depth = np.minimum(depth, self.depth_cap) / self.depth_cap
        if self.goal_signal == "unit_vector":
            goal = np.asarray(obs.unit_to_goal, dtype=float)
        else:
            goal = np.array([obs.goal_distance / DIST_SCALE])
        aux = np.concatenate([np.asarray(obs.vel, dtype=float) / self.v_max, goal])
        return depth, aux

    def embed_batch(self, theta: np.ndarray, depth: np.ndarray, aux: np.ndarray):
        z, cache = self.encoder.forward(theta[self.s_enc], depth)
        return np.concatenate([z, aux], axis=1), cache

    def act_batch(self, theta: np.ndarray, emb: np.ndarray):
        """Actor output in the unit disc, with what backward needs."""
        u, cache = self.actor.forward(theta[self.s_actor], emb)
        n = np.sqrt((u * u).sum(axis=1, keepdims=True))
        scale = 1.0 / np.maximum(n, 1.0)
        return u * scale, (cache, u, n, scale)

    def act_backward(self, theta: np.ndarray, cache, da: np.ndarray):
        """Returns ``(d_embedding, actor_grad)``."""
        acache, u, n, scale = cache
        a = u * scale
        # inside the disc the clip is identity; on the rim a = u/|u|
        rim = (n > 1.0)
        du = np.where(rim, (da - a * (a * da).sum(axis=1, keepdims=True)) * scale, da)
        return self.actor.backward(theta[self.s_actor], acache, du)

    def q_batch(self, theta: np.ndarray, emb: np.ndarray, a: np.ndarray):
        q, cache = self.critic.forward(theta[self.s_critic], np.concatenate([emb, a], axis=1))
        return q[:, 0], cache


def encode(policy: Policy, obs) -> np.ndarray:
    depth, aux = policy.featurize(obs)
    emb, _ = policy.embed_batch(policy.theta, depth[None], aux[None])
    return emb[0]


def greedy_action(policy: Policy, obs) -> np.ndarray:
    depth, aux = policy.featurize(obs)
    emb, _ = policy.embed_batch(policy.theta, depth[None], aux[None])
    a, _ = policy.act_batch(policy.theta, emb)
    return a[0]


def _clip_disc(a: np.ndarray) -> np.ndarray:
    n = math.hypot(a[0], a[1])
    return a / n if n > 1.0 else a


def select_action(policy: Policy, obs, noise_sigma: float = 0.0,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Action in m/s: actor output plus Gaussian noise (in units of ``v_max``), norm-clipped."""
    a = greedy_action(policy, obs)
    if noise_sigma > 0:
        a = _clip_disc(a + noise_sigma * rng.standard_normal(2))
    return a * policy.v_max


# -------------------------------------------------------------- replay buffer

class ReplayBuffer:
    """Fixed-capacity ring of featurized transitions."""

    def __init__(self, capacity: int, k_stack: int, n_rays: int, aux_dim: int):
        self.capacity = capacity
        self.depth = np.zeros((capacity, k_stack, n_rays))
        self.aux = np.zeros((capacity, aux_dim))
        self.action = np.zeros((capacity, 2))
        self.reward = np.zeros(capacity)
        self.depth2 = np.zeros((capacity, k_stack, n_rays))
        self.aux2 = np.zeros((capacity, aux_dim))
        self.done = np.zeros(capacity)
        self.ptr = 0
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def add(self, depth, aux, action, reward, depth2, aux2, done) -> None:
        if not math.isfinite(reward):
            raise ValueError("non-finite reward")
        i = self.ptr
        self.depth[i], self.aux[i], self.action[i] = depth, aux, action
        self.reward[i], self.depth2[i], self.aux2[i] = reward, depth2, aux2
        self.done[i] = float(done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.size, size=batch_size, replace=False)

    def batch(self, idx):
        return (self.depth[idx], self.aux[idx], self.action[idx], self.reward[idx],
                self.depth2[idx], self.aux2[idx], self.done[idx])


# ------------------------------------------------------------------- learning

def critic_target(policy: Policy, batch, gamma: float) -> np.ndarray:
    """``r + gamma * (1 - done) * Q_targ(s', actor_targ(s'))``."""
    _, _, _, r, depth2, aux2, done = batch
    emb2, _ = policy.embed_batch(policy.theta_targ, depth2, aux2)
    a2, _ = policy.act_batch(policy.theta_targ, emb2)
    q2, _ = policy.q_batch(policy.theta_targ, emb2, a2)
    return r + gamma * (1.0 - done) * q2


def soft_update(online: np.ndarray, target: np.ndarray, tau: float) -> None:
    """``target <- tau * online + (1 - tau) * target``, in place."""
    if online.shape != target.shape:
        raise ValueError(f"soft update shapes differ: {online.shape} vs {target.shape}")
    target *= 1.0 - tau
    target += tau * online


class Learner:
    """A policy with its optimizer state and replay buffer."""

    def __init__(self, policy: Policy, cfg: TrainConfig):
        self.policy = policy
        self.cfg = cfg
        lr = np.full(policy.theta.size, cfg.lr_critic)
        lr[policy.s_actor] = cfg.lr_actor
        self.adam = AdamState.like(policy.theta, lr=lr)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, policy.k_stack, policy.n_rays,
                                   policy.aux_dim)

    def train_step(self, rng: np.random.Generator) -> dict:
        return train_step(self.policy, self.buffer, self.cfg, rng, self.adam)


def train_step(policy: Policy, buffer: ReplayBuffer, cfg: TrainConfig,
               rng: np.random.Generator, adam: AdamState) -> dict:
    """One critic regression step and one actor ascent step, then soft target updates."""
    if len(buffer) < cfg.batch_size:
        raise ValueError("replay buffer holds fewer transitions than one batch")
    batch = buffer.batch(buffer.sample(cfg.batch_size, rng))
    depth, aux, action, _, _, _, _ = batch
    B = cfg.batch_size
    th = policy.theta
    y = critic_target(policy, batch, cfg.gamma)

    emb, ecache = policy.embed_batch(th, depth, aux)
    q, ccache = policy.q_batch(th, emb, action)
    diff = q - y
    critic_mse = float(np.mean(diff * diff))
    dinp, g_critic = policy.critic.backward(th[policy.s_critic], ccache, (2.0 / B) * diff[:, None])
    _, g_enc = policy.encoder.backward(th[policy.s_enc], ecache, dinp[:, :policy.embed])

    a_pi, acache = policy.act_batch(th, emb)
    q_pi, pcache = policy.q_batch(th, emb, a_pi)
    actor_objective = float(q_pi.mean())
    dinp2, _ = policy.critic.backward(th[policy.s_critic], pcache,
                                      np.full((B, 1), -1.0 / B), input_only=True)
    _, g_actor = policy.act_backward(th, acache, dinp2[:, policy.emb_dim:])

    if not (math.isfinite(critic_mse) and math.isfinite(actor_objective)):
        raise FloatingPointError("training diverged")
    adam_update(th, np.concatenate([g_enc, g_actor, g_critic]), adam)
    soft_update(th, policy.theta_targ, cfg.tau)
    return {"critic_mse": critic_mse, "actor_objective": actor_objective}


def make_policy(sim_params: SimParams, cfg: TrainConfig) -> Policy:
    cap = sim_params.d_trunc if cfg.depth_mode == "shallow" else sim_params.d_max_sensor
    return Policy(n_rays=sim_params.n_rays, k_stack=sim_params.k_stack, v_max=sim_params.v_max,
                  depth_cap=cap, depth_mode=cfg.depth_mode, goal_signal=cfg.goal_signal,
                  lstm_hidden=cfg.lstm_hidden, embed=cfg.embed, hidden=cfg.hidden, seed=cfg.seed)


def episode_seed(seed: int, index: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream, index]).generate_state(1)[0])


def run_episode(policy: Policy, scene: Scene, sim_params: SimParams,
                reward_params: RewardParams, seed: int):
    """One greedy episode; returns the finished environment."""
    env, obs = reset(scene, sim_params, seed, reward_params)
    while not env.done:
        obs = env.step(select_action(policy, obs)).obs
    return env


def evaluate(policy: Policy, scene: Scene, sim_params: SimParams, reward_params: RewardParams,
             episodes: int, seed: int, out_dir=None) -> list[Trajectory]:
    """Greedy rollouts.  With ``out_dir`` each episode is written as ``ep_XXXX.csv``."""
    trajs = []
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / META_FILE).write_text(json.dumps(
            {"scene": scene.name, "route_length": scene.route_length,
             "episodes": episodes, "seed": seed}, indent=2) + "\n")
    for i in range(episodes):
        env = run_episode(policy, scene, sim_params, reward_params, episode_seed(seed, i, 2))
        trajs.append(env.trajectory())
        if out_dir is not None:
            env.write_log(out_dir / f"ep_{i:04d}.csv")
    return trajs


def training_rewards(reward_params: RewardParams, cfg: TrainConfig) -> RewardParams:
    return replace(reward_params, smooth_enabled=cfg.smooth_enabled, towards_mode=cfg.goal_signal)


def train(scene: Scene, sim_params: SimParams, reward_params: RewardParams,
          cfg: TrainConfig, progress=None):
    """Train a policy; returns ``(policy, log_rows)``.

    Each log row is ``(episode, return, steps, outcome, eval_sr)`` where
    ``eval_sr`` is the greedy success rate measured after that episode, or
    ``None``.  ``progress`` is an optional callable receiving each row.
    """
    sim_params = replace(sim_params, start_jitter=cfg.start_jitter)
    rewards = training_rewards(reward_params, cfg)
    policy = make_policy(sim_params, cfg)
    learner = Learner(policy, cfg)
    noise_rng, sample_rng = (np.random.default_rng(s)
                             for s in np.random.SeedSequence(cfg.seed).spawn(2))
    log = []
    total_steps = 0
    for ep in range(cfg.episodes):
        env, obs = reset(scene, sim_params, episode_seed(cfg.seed, ep, 1), rewards)
        depth, aux = policy.featurize(obs)
        ret = 0.0
        while not env.done:
            if total_steps < cfg.warmup_steps:
                r, th = math.sqrt(noise_rng.random()), 2 * math.pi * noise_rng.random()
                a = np.array([r * math.cos(th), r * math.sin(th)])
            else:
                a = select_action(policy, obs, cfg.sigma(total_steps), noise_rng) / policy.v_max
            res = env.step(a * policy.v_max)
            depth2, aux2 = policy.featurize(res.obs)
            terminal = res.status not in ("running", "timeout")
            learner.buffer.add(depth, aux, a, res.reward.total, depth2, aux2, terminal)
            ret += res.reward.total
            obs, depth, aux = res.obs, depth2, aux2
            total_steps += 1
            if total_steps >= cfg.warmup_steps and len(learner.buffer) >= cfg.batch_size:
                try:
                    learner.train_step(sample_rng)
                except FloatingPointError as exc:
                    raise FloatingPointError(f"episode {ep}: {exc}") from None
        eval_sr = None
        if cfg.eval_every > 0 and (ep + 1) % cfg.eval_every == 0:
            trajs = evaluate(policy, scene, sim_params, rewards, cfg.eval_episodes, cfg.seed)
            eval_sr = 100.0 * sum(t.outcome == GOAL for t in trajs) / len(trajs)
        row = (ep, ret, env.steps, env.status, eval_sr)
        log.append(row)
        if progress is not None:
            progress(row)
        if cfg.stop_at_sr is not None and eval_sr is not None and eval_sr >= cfg.stop_at_sr:
            break
    return policy, log


def write_train_log(path, log) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAIN_LOG_HEADER)
        for ep, ret, steps, outcome, sr in log:
            w.writerow([ep, repr(float(ret)), steps, outcome, "" if sr is None else repr(float(sr))])


# ---------------------------------------------------------------- checkpoints

def save_policy(policy: Policy, path, config: dict | None = None) -> None:
    header = {
        "schema_version": CHECKPOINT_VERSION,
        "policy": policy.hparams,
        "shapes": {
            "encoder": {k: list(v) for k, v in policy.encoder.layout.shapes.items()},
            "actor": {k: list(v) for k, v in policy.actor.layout.shapes.items()},
            "critic": {k: list(v) for k, v in policy.critic.layout.shapes.items()},
        },
        "blocks": ["theta", "theta_targ"],
        "n_floats": int(policy.theta.size),
        "config": config or {},
    }
    data = np.concatenate([policy.theta, policy.theta_targ]).astype("<f8")
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        fh.write(data.tobytes())


class CheckpointError(ValueError):
    pass


def load_policy(path) -> Policy:
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise CheckpointError(f"{path}: missing header")
    try:
        header = json.loads(raw[:nl])
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"{path}: bad header: {exc}") from None
    version = header.get("schema_version")
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint schema_version {version!r}, expected {CHECKPOINT_VERSION}")
    policy = Policy(**header["policy"])
    n = int(header["n_floats"])
    if n != policy.theta.size:
        raise CheckpointError(f"{path}: {n} parameters, policy needs {policy.theta.size}")
    body = raw[nl + 1:]
    if len(body) != 2 * n * 8:
        raise CheckpointError(f"{path}: truncated body ({len(body)} bytes, expected {16 * n})")
    data = np.frombuffer(body, dtype="<f8").astype(float)
    policy.theta[:] = data[:n]
    policy.theta_targ[:] = data[n:]
    return policy


def config_dict(cfg: TrainConfig) -> dict:
    return asdict(cfg)


TRAIN_FIELDS = tuple(f.name for f in fields(TrainConfig))
