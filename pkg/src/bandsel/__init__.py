"""Band selection for hyperspectral images via deep Q-learning.

The pipeline: load an image (:mod:`bandsel.hsi_data`), cache entropies and
correlations (:mod:`bandsel.band_stats`), train an agent that picks K bands
sequentially (:mod:`bandsel.band_env`, :mod:`bandsel.qnet`,
:mod:`bandsel.dqn_agent`), compare against reference selectors
(:mod:`bandsel.baselines`), and score subsets with a k-NN harness
(:mod:`bandsel.eval_harness`). ``bandsel`` on the command line binds it all
together.
"""

from .band_env import BandSelectionEnv, EnvConfig, SelectionState, run_episode
from .band_stats import (
    BandStats,
    band_entropy,
    compute_band_stats,
    corr_reward,
    entropy_reward,
    mean_correlation,
    mean_information_entropy,
    pearson,
)
from .dqn_agent import (
    Experience,
    ReplayMemory,
    SelectedBands,
    TrainConfig,
    TrainedPolicy,
    select_bands,
    train,
)
from .hsi_data import (
    HyperspectralImage,
    QuantizedBand,
    load_image,
    quantize_band,
    remove_bands,
    save_csv,
)

__version__ = "0.1.0"

__all__ = [
    "BandSelectionEnv",
    "BandStats",
    "EnvConfig",
    "Experience",
    "HyperspectralImage",
    "QuantizedBand",
    "ReplayMemory",
    "SelectedBands",
    "SelectionState",
    "TrainConfig",
    "TrainedPolicy",
    "band_entropy",
    "compute_band_stats",
    "corr_reward",
    "entropy_reward",
    "load_image",
    "mean_correlation",
    "mean_information_entropy",
    "pearson",
    "quantize_band",
    "remove_bands",
    "run_episode",
    "save_csv",
    "select_bands",
    "train",
    "__version__",
]
