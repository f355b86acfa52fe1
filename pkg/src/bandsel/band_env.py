"""The band-selection environment: multi-hot states, deterministic one-band
transitions, and reward dispatch for the entropy and correlation schemes.

Episodes run exactly K steps from the empty state. States carry running
totals (sum of selected entropies; sum of the selected correlation block) so
each step costs O(|B|) while staying numerically equal to evaluating the
subset statistics from scratch.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .band_stats import BandStats
from .errors import EpisodeFinished, IllegalAction

REWARD_SCHEMES = ("entropy", "correlation")


@dataclass(frozen=True, eq=False)
class SelectionState:
    """Multi-hot encoding of the bands chosen so far.

    ``bits[i] == 1`` iff band i is in ``selected``; ``selected`` preserves
    the order bands were picked in. The two running totals are maintained by
    the environment and private to reward bookkeeping.
    """

    bits: np.ndarray
    selected: tuple[int, ...]
    entropy_total: float = 0.0
    corr_total: float = 0.0

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def size(self) -> int:
        return len(self.selected)


class StepResult(NamedTuple):
    state: SelectionState
    reward: float
    terminal: bool


@dataclass(frozen=True, eq=False)
class EnvConfig:
    """Episode horizon K, reward scheme, and the statistics to reward against."""

    k: int
    reward_scheme: str
    stats: BandStats
    absolute_corr: bool = False

    def __post_init__(self):
        if self.reward_scheme not in REWARD_SCHEMES:
            raise ValueError(
                f"reward_scheme must be one of {REWARD_SCHEMES}, got {self.reward_scheme!r}"
            )
        if not 1 <= self.k <= self.stats.bands:
            raise ValueError(
                f"k must satisfy 1 <= k <= {self.stats.bands}, got {self.k}"
            )


class BandSelectionEnv:
    """Deterministic K-step environment over one image's band statistics."""

    def __init__(self, config: EnvConfig):
        self.config = config
        self.bands = config.stats.bands
        self._entropies = config.stats.entropies
        corr = config.stats.correlation
        self._corr = np.abs(corr) if config.absolute_corr else corr

    def reset(self) -> SelectionState:
        return SelectionState(
            bits=np.zeros(self.bands, dtype=np.uint8), selected=()
        )

    def legal_actions(self, state: SelectionState) -> np.ndarray:
        """Indices of bands not yet selected, ascending."""
        return np.flatnonzero(state.bits == 0)

    def make_state(self, selected) -> SelectionState:
        """Build a state (with correct running totals) for an arbitrary subset."""
        state = self.reset()
        for band in selected:
            state = self.step(state, band).state
        return state

    def step(self, state: SelectionState, action: int) -> StepResult:
        """Add one band; returns the new state, the reward, and a terminal flag.

        The input state is never mutated, so callers can retain both s and s'.
        """
        action = int(action)
        if state.size >= self.config.k:
            raise EpisodeFinished(f"state already holds {self.config.k} bands")
        if not 0 <= action < self.bands:
            raise IllegalAction(f"band {action} not in [0, {self.bands})")
        if state.bits[action]:
            raise IllegalAction(f"band {action} is already selected")

        m = state.size
        sel = np.asarray(state.selected, dtype=np.int64)
        entropy_total = state.entropy_total + float(self._entropies[action])
        corr_total = (
            state.corr_total
            + 2.0 * float(self._corr[action, sel].sum())
            + float(self._corr[action, action])
        )

        if self.config.reward_scheme == "entropy":
            if m == 0:
                reward = float(self._entropies[action])
            else:
                reward = entropy_total / (m + 1) - state.entropy_total / m
        else:
            if m == 0:
                reward = 0.0
            else:
                reward = state.corr_total / m**2 - corr_total / (m + 1) ** 2

        bits = state.bits.copy()
        bits[action] = 1
        next_state = SelectionState(
            bits=bits,
            selected=state.selected + (action,),
            entropy_total=entropy_total,
            corr_total=corr_total,
        )
        return StepResult(next_state, reward, next_state.size == self.config.k)


def run_episode(
    env: BandSelectionEnv, policy: Callable[[SelectionState], int]
) -> tuple[tuple[int, ...], list[float]]:
    """Roll one full K-step episode under ``policy``; returns (subset, rewards)."""
    state = env.reset()
    rewards: list[float] = []
    for _ in range(env.config.k):
        result = env.step(state, policy(state))
        rewards.append(result.reward)
        state = result.state
    return state.selected, rewards
