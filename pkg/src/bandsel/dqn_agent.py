"""Deep Q-learning for band selection: replay memory, epsilon-greedy rollouts,
one-step bootstrapped targets, and greedy test-time selection.

Training runs episode by episode: roll K steps under the epsilon-greedy
policy, push every transition into the replay memory, then take one (by
default) minibatch gradient step. Targets are computed with the current
weights; there is no separate target network. Everything is driven by a
single seeded RNG, so runs are exactly reproducible.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import qnet
from .band_env import BandSelectionEnv, EnvConfig, SelectionState
from .errors import DivergedLoss, NoLegalAction

REPLAY_CAPACITY_DEFAULT = 50_000
BATCH_SIZE_DEFAULT = 100


@dataclass(frozen=True, eq=False)
class Experience:
    """One stored transition: s, a, r, s' plus a terminal flag (|B'| = K)."""

    s: np.ndarray
    a: int
    r: float
    s_next: np.ndarray
    terminal: bool


class ReplayMemory:
    """Fixed-capacity FIFO ring buffer with uniform minibatch sampling."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buf: list[Experience] = []
        self._write = 0

    def __len__(self) -> int:
        return len(self._buf)

    def push(self, exp: Experience) -> None:
        if len(self._buf) < self.capacity:
            self._buf.append(exp)
        else:
            self._buf[self._write] = exp
        self._write = (self._write + 1) % self.capacity

    def __iter__(self):
        """Oldest to newest."""
        if len(self._buf) < self.capacity:
            yield from self._buf
        else:
            yield from self._buf[self._write :]
            yield from self._buf[: self._write]

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Experience]:
        """Uniform sample without replacement within the batch."""
        if batch_size > len(self._buf):
            raise ValueError(f"cannot sample {batch_size} from {len(self._buf)} experiences")
        idx = rng.choice(len(self._buf), size=batch_size, replace=False)
        return [self._buf[i] for i in idx]


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of the training loop.

    Defaults: discount 0.9, batch 100, replay capacity 50000, learning rate
    1e-4 with beta1 0.9 / beta2 0.999, epsilon from 1 down to 0.01 by a 0.95
    multiplicative decay per episode, at most 2000 episodes with an optional
    moving-average plateau stop.
    """

    gamma: float = 0.9
    batch_size: int = BATCH_SIZE_DEFAULT
    replay_capacity: int = REPLAY_CAPACITY_DEFAULT
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay_factor: float = 0.95
    max_episodes: int = 2000
    plateau_window: int | None = 50
    plateau_tolerance: float = 1e-4
    updates_per_episode: int = 1
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ValueError(
                "epsilon must satisfy 0 <= epsilon_end <= epsilon_start <= 1"
            )
        if not 0.0 < self.epsilon_decay_factor <= 1.0:
            raise ValueError("epsilon_decay_factor must lie in (0, 1]")
        if self.batch_size < 1 or self.replay_capacity < 1:
            raise ValueError("batch_size and replay_capacity must be >= 1")
        if self.max_episodes < 1:
            raise ValueError("max_episodes must be >= 1")
        if self.updates_per_episode < 0:
            raise ValueError("updates_per_episode must be >= 0")


@dataclass(eq=False)
class TrainedPolicy:
    """Final network weights plus the run's metadata and per-episode history."""

    params: qnet.QNetworkParams
    bands: int
    k: int
    reward_scheme: str
    gamma: float
    seed: int
    opt_state: qnet.OptimizerState
    replay_capacity: int
    batch_size: int
    returns: list[float] = field(default_factory=list)
    losses: list[float | None] = field(default_factory=list)
    epsilons: list[float] = field(default_factory=list)
    episodes: int = 0
    wall_time_s: float = 0.0
    band_remap: tuple[int, ...] | None = None
    history: list[dict] = field(default_factory=list)


@dataclass(frozen=True)
class SelectedBands:
    """A selection in pick order, both in model numbering and original numbering."""

    bands: tuple[int, ...]
    bands_original: tuple[int, ...]


def select_action(
    q_values: np.ndarray,
    legal,
    epsilon: float,
    rng: np.random.Generator,
) -> int:
    """Epsilon-greedy over the legal actions only; Q ties go to the lowest index."""
    legal = np.asarray(sorted(int(a) for a in np.asarray(legal).ravel()), dtype=np.int64)
    if legal.size == 0:
        raise NoLegalAction("no unselected band remains")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.choice(legal))
    q = np.asarray(q_values, dtype=np.float64)
    return int(legal[np.argmax(q[legal])])


def compute_targets(
    batch: list[Experience], params: qnet.QNetworkParams, gamma: float
) -> np.ndarray:
    """One-step targets y = r + gamma * max_a' Q(s', a') over still-legal a'.

    Terminal experiences bootstrap nothing: y = r.
    """
    if not batch:
        raise ValueError("batch must be non-empty")
    rewards = np.array([e.r for e in batch])
    terminal = np.array([e.terminal for e in batch], dtype=bool)
    s_next = np.stack([e.s_next for e in batch]).astype(np.float64)
    q_next, _ = qnet.forward(params, s_next)
    q_next = np.where(s_next > 0.5, -np.inf, q_next)
    all_masked = ~np.isfinite(q_next).any(axis=1)
    best = np.where(all_masked, 0.0, q_next.max(axis=1, initial=-np.inf))
    return np.where(terminal, rewards, rewards + gamma * best)


def train(env_cfg: EnvConfig, cfg: TrainConfig) -> TrainedPolicy:
    """Run the full training loop and return the learned policy.

    Per episode: reset, roll K epsilon-greedy steps pushing experiences, then
    (once the memory holds a full batch) sample a minibatch, compute targets,
    and take one Nesterov-Adam step on the squared target error of the taken
    actions. Epsilon decays multiplicatively after each episode, floored at
    ``epsilon_end``. Stops at ``max_episodes`` or when the moving average of
    episode returns over ``plateau_window`` changes by less than
    ``plateau_tolerance``.
    """
    t_start = time.perf_counter()
    env = BandSelectionEnv(env_cfg)
    bands = env.bands

    init_ss, loop_ss = np.random.SeedSequence(cfg.seed).spawn(2)
    params = qnet.init_params(bands, init_ss)
    opt = qnet.init_optimizer(
        params, alpha=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2
    )
    rng = np.random.default_rng(loop_ss)
    memory = ReplayMemory(cfg.replay_capacity)

    epsilon = cfg.epsilon_start
    returns: list[float] = []
    losses: list[float | None] = []
    epsilons: list[float] = []
    history: list[dict] = []

    episodes_run = 0
    for episode in range(cfg.max_episodes):
        state = env.reset()
        episode_return = 0.0
        for _ in range(env_cfg.k):
            q, _ = qnet.forward(params, state.bits.astype(np.float64))
            action = select_action(q, env.legal_actions(state), epsilon, rng)
            result = env.step(state, action)
            memory.push(
                Experience(
                    s=state.bits,
                    a=action,
                    r=result.reward,
                    s_next=result.state.bits,
                    terminal=result.terminal,
                )
            )
            episode_return += result.reward
            state = result.state

        loss = None
        batch_size_used = None
        if len(memory) >= cfg.batch_size:
            for _ in range(cfg.updates_per_episode):
                batch = memory.sample(cfg.batch_size, rng)
                params, opt, loss = _update(params, opt, batch, cfg.gamma)
            batch_size_used = cfg.batch_size

        returns.append(episode_return)
        losses.append(loss)
        epsilons.append(epsilon)
        history.append(
            {
                "episode": episode,
                "epsilon": epsilon,
                "return": episode_return,
                "loss": loss,
                "selected_bands": list(state.selected),
                "batch_size": batch_size_used,
            }
        )
        episodes_run = episode + 1
        epsilon = max(cfg.epsilon_end, cfg.epsilon_decay_factor * epsilon)

        w = cfg.plateau_window
        if w and episodes_run >= 2 * w:
            recent = float(np.mean(returns[-w:]))
            previous = float(np.mean(returns[-2 * w : -w]))
            if abs(recent - previous) < cfg.plateau_tolerance:
                break

    return TrainedPolicy(
        params=params,
        bands=bands,
        k=env_cfg.k,
        reward_scheme=env_cfg.reward_scheme,
        gamma=cfg.gamma,
        seed=cfg.seed,
        opt_state=opt,
        replay_capacity=memory.capacity,
        batch_size=cfg.batch_size,
        returns=returns,
        losses=losses,
        epsilons=epsilons,
        episodes=episodes_run,
        wall_time_s=time.perf_counter() - t_start,
        history=history,
    )


def _update(params, opt, batch, gamma):
    """One minibatch step on the squared error of the taken-action outputs."""
    targets = compute_targets(batch, params, gamma)
    x = np.stack([e.s for e in batch]).astype(np.float64)
    actions = np.array([e.a for e in batch])
    q, cache = qnet.forward(params, x)
    taken = q[np.arange(len(batch)), actions]
    err = taken - targets
    loss = float(np.mean(err**2))
    if not np.isfinite(loss):
        raise DivergedLoss(f"training loss became {loss}")
    dq = np.zeros_like(q)
    dq[np.arange(len(batch)), actions] = err / len(batch)
    grads = qnet.backward(params, cache, dq)
    params, opt = qnet.nadam_update(params, grads, opt)
    return params, opt, loss


def select_bands(policy: TrainedPolicy, k: int | None = None) -> SelectedBands:
    """Greedy masked-argmax selection of k bands from the empty state.

    Masking makes duplicates impossible. ``bands_original`` applies the
    policy's band remap, when one was recorded at training time.
    """
    if k is None:
        k = policy.k
    if not 1 <= k <= policy.bands:
        raise ValueError(f"k must satisfy 1 <= k <= {policy.bands}, got {k}")
    bits = np.zeros(policy.bands, dtype=np.float64)
    picks: list[int] = []
    for _ in range(k):
        q, _ = qnet.forward(policy.params, bits)
        q = np.where(bits > 0.5, -np.inf, q)
        action = int(np.argmax(q))
        picks.append(action)
        bits[action] = 1.0
    remap = policy.band_remap
    original = tuple(int(remap[p]) for p in picks) if remap else tuple(picks)
    return SelectedBands(bands=tuple(picks), bands_original=original)


def save_policy(path, policy: TrainedPolicy, stats=None, manifest: dict | None = None) -> None:
    """Checkpoint the policy; optionally embed the image's band statistics."""
    metadata = {
        "k": policy.k,
        "reward_scheme": policy.reward_scheme,
        "gamma": policy.gamma,
        "seed": policy.seed,
        "replay_capacity": policy.replay_capacity,
        "batch_size": policy.batch_size,
        "episodes": policy.episodes,
        "returns": policy.returns,
        "epsilons": policy.epsilons,
        "band_remap": list(policy.band_remap) if policy.band_remap else None,
        "manifest": manifest or {},
    }
    arrays = {}
    if stats is not None:
        arrays["entropies"] = stats.entropies
        arrays["correlation"] = stats.correlation
        metadata["bin_count"] = stats.bin_count
    qnet.save_checkpoint(path, policy.params, policy.opt_state, metadata, arrays)


def load_policy(path):
    """Load a checkpoint; returns (TrainedPolicy, BandStats | None, manifest)."""
    from .band_stats import BandStats

    params, opt, metadata, arrays = qnet.load_checkpoint(path)
    stats = None
    if "entropies" in arrays:
        stats = BandStats(
            entropies=arrays["entropies"],
            correlation=arrays["correlation"],
            bin_count=int(metadata.get("bin_count", 256)),
        )
    remap = metadata.get("band_remap")
    policy = TrainedPolicy(
        params=params,
        bands=params.input_dim,
        k=int(metadata.get("k", 1)),
        reward_scheme=metadata.get("reward_scheme", "entropy"),
        gamma=float(metadata.get("gamma", 0.9)),
        seed=int(metadata.get("seed", 0)),
        opt_state=opt,
        replay_capacity=int(metadata.get("replay_capacity", REPLAY_CAPACITY_DEFAULT)),
        batch_size=int(metadata.get("batch_size", BATCH_SIZE_DEFAULT)),
        returns=list(metadata.get("returns", [])),
        epsilons=list(metadata.get("epsilons", [])),
        episodes=int(metadata.get("episodes", 0)),
        band_remap=tuple(remap) if remap else None,
    )
    return policy, stats, metadata.get("manifest", {})
