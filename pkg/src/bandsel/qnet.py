"""A small fully connected Q-network with hand-written backprop.

Architecture for an L-band image: L -> 2L (ReLU) -> 2L (ReLU) -> L (linear).
The input is the multi-hot selection state; output component a is the
Q-value of picking band a next. Everything is float64 so gradient checks can
use tight tolerances.
"""

import json
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonFiniteGradient, ShapeMismatch

CHECKPOINT_FORMAT = "bandsel-checkpoint"
CHECKPOINT_VERSION = 1

TENSOR_NAMES = ("w1", "b1", "w2", "b2", "w3", "b3")


@dataclass(frozen=True, eq=False)
class QNetworkParams:
    """Weights and biases of the three layers (also used as a gradient container)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    def tensors(self) -> tuple[np.ndarray, ...]:
        return (self.w1, self.b1, self.w2, self.b2, self.w3, self.b3)


@dataclass(frozen=True, eq=False)
class OptimizerState:
    """Nesterov-Adam moments plus the hyperparameters they evolve under."""

    first_moment: QNetworkParams
    second_moment: QNetworkParams
    step_count: int = 0
    alpha: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    numeric_epsilon: float = 1e-8


@dataclass(frozen=True, eq=False)
class ForwardCache:
    """Pre-activations retained by forward() for the matching backward()."""

    x: np.ndarray
    z1: np.ndarray
    h1: np.ndarray
    z2: np.ndarray
    h2: np.ndarray
    single: bool = field(default=False)


def init_params(bands: int, seed) -> QNetworkParams:
    """Glorot-uniform weights (biases zero), deterministic for a fixed seed."""
    if bands < 1:
        raise ValueError("bands must be >= 1")
    rng = np.random.default_rng(seed)
    hidden = 2 * bands

    def glorot(fan_out, fan_in):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-bound, bound, size=(fan_out, fan_in))

    return QNetworkParams(
        w1=glorot(hidden, bands),
        b1=np.zeros(hidden),
        w2=glorot(hidden, hidden),
        b2=np.zeros(hidden),
        w3=glorot(bands, hidden),
        b3=np.zeros(bands),
    )


def zeros_like_params(params: QNetworkParams) -> QNetworkParams:
    return QNetworkParams(*(np.zeros_like(t) for t in params.tensors()))


def init_optimizer(
    params: QNetworkParams,
    alpha: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    numeric_epsilon: float = 1e-8,
) -> OptimizerState:
    return OptimizerState(
        first_moment=zeros_like_params(params),
        second_moment=zeros_like_params(params),
        step_count=0,
        alpha=alpha,
        beta1=beta1,
        beta2=beta2,
        numeric_epsilon=numeric_epsilon,
    )


def forward(
    params: QNetworkParams, state_bits: np.ndarray
) -> tuple[np.ndarray, ForwardCache]:
    """Q-values for one state vector (L,) or a batch (B, L)."""
    x = np.asarray(state_bits, dtype=np.float64)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise ShapeMismatch(
            f"expected input with last dimension {params.input_dim}, got {np.shape(state_bits)}"
        )
    z1 = x @ params.w1.T + params.b1
    h1 = np.maximum(z1, 0.0)
    z2 = h1 @ params.w2.T + params.b2
    h2 = np.maximum(z2, 0.0)
    q = h2 @ params.w3.T + params.b3
    cache = ForwardCache(x=x, z1=z1, h1=h1, z2=z2, h2=h2, single=single)
    return (q[0] if single else q), cache


def backward(
    params: QNetworkParams, cache: ForwardCache, dloss_dq: np.ndarray
) -> QNetworkParams:
    """Exact gradients of the loss given its gradient at the Q outputs.

    ``dloss_dq`` must match the shape forward() returned. Over a batch the
    parameter gradients are summed, so a caller wanting a mean loss divides
    the upstream gradient by the batch size itself.
    """
    g3 = np.asarray(dloss_dq, dtype=np.float64)
    if cache.single:
        g3 = g3[None, :]
    if g3.shape != (cache.x.shape[0], params.w3.shape[0]):
        raise ShapeMismatch(
            f"upstream gradient shape {np.shape(dloss_dq)} does not match the forward output"
        )
    dw3 = g3.T @ cache.h2
    db3 = g3.sum(axis=0)
    g2 = (g3 @ params.w3) * (cache.z2 > 0.0)
    dw2 = g2.T @ cache.h1
    db2 = g2.sum(axis=0)
    g1 = (g2 @ params.w2) * (cache.z1 > 0.0)
    dw1 = g1.T @ cache.x
    db1 = g1.sum(axis=0)
    return QNetworkParams(w1=dw1, b1=db1, w2=dw2, b2=db2, w3=dw3, b3=db3)


def nadam_update(
    params: QNetworkParams, grads: QNetworkParams, opt: OptimizerState
) -> tuple[QNetworkParams, OptimizerState]:
    """One Nesterov-Adam step; returns new params and optimizer state.

    With t counted from 1, per scalar with gradient g:

        m <- b1*m + (1-b1)*g
        v <- b2*v + (1-b2)*g^2
        mbar = b1*m/(1-b1^(t+1)) + (1-b1)*g/(1-b1^t)
        vhat = v/(1-b2^t)
        theta <- theta - alpha*mbar/(sqrt(vhat) + eps)
    """
    for g in grads.tensors():
        if not np.isfinite(g).all():
            raise NonFiniteGradient("gradient contains NaN or infinity")
    t = opt.step_count + 1
    b1, b2 = opt.beta1, opt.beta2
    new_params = []
    new_m = []
    new_v = []
    for theta, g, m, v in zip(
        params.tensors(), grads.tensors(), opt.first_moment.tensors(), opt.second_moment.tensors()
    ):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        mbar = b1 * m / (1.0 - b1 ** (t + 1)) + (1.0 - b1) * g / (1.0 - b1**t)
        vhat = v / (1.0 - b2**t)
        theta = theta - opt.alpha * mbar / (np.sqrt(vhat) + opt.numeric_epsilon)
        new_params.append(theta)
        new_m.append(m)
        new_v.append(v)
    return (
        QNetworkParams(*new_params),
        replace(
            opt,
            first_moment=QNetworkParams(*new_m),
            second_moment=QNetworkParams(*new_v),
            step_count=t,
        ),
    )


def save_checkpoint(
    path: str | os.PathLike,
    params: QNetworkParams,
    opt: OptimizerState | None = None,
    metadata: dict | None = None,
    arrays: dict[str, np.ndarray] | None = None,
) -> None:
    """Write a versioned binary checkpoint (bit-exact round trip).

    ``metadata`` must be JSON-serializable (seed, training history, band
    remap, and so on); ``arrays`` can carry extra numeric payloads such as
    cached band statistics.
    """
    payload: dict[str, np.ndarray] = {
        "format": np.array(CHECKPOINT_FORMAT),
        "version": np.array(CHECKPOINT_VERSION, dtype=np.int64),
        "bands": np.array(params.w1.shape[1], dtype=np.int64),
        "meta": np.array(json.dumps(metadata or {})),
    }
    for name, tensor in zip(TENSOR_NAMES, params.tensors()):
        payload[f"p_{name}"] = tensor
    if opt is not None:
        for name, tensor in zip(TENSOR_NAMES, opt.first_moment.tensors()):
            payload[f"m_{name}"] = tensor
        for name, tensor in zip(TENSOR_NAMES, opt.second_moment.tensors()):
            payload[f"v_{name}"] = tensor
        payload["opt_scalars"] = np.array(
            [opt.step_count, opt.alpha, opt.beta1, opt.beta2, opt.numeric_epsilon]
        )
    for name, arr in (arrays or {}).items():
        payload[f"x_{name}"] = arr
    with open(path, "wb") as fh:
        np.savez(fh, **payload)


def load_checkpoint(
    path: str | os.PathLike,
) -> tuple[QNetworkParams, OptimizerState | None, dict, dict[str, np.ndarray]]:
    """Read a checkpoint back; inverse of :func:`save_checkpoint`."""
    with np.load(path, allow_pickle=False) as data:
        if str(data["format"]) != CHECKPOINT_FORMAT:
            raise ValueError(f"{path} is not a {CHECKPOINT_FORMAT} file")
        version = int(data["version"])
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        params = QNetworkParams(*(data[f"p_{n}"] for n in TENSOR_NAMES))
        opt = None
        if "opt_scalars" in data:
            step, alpha, beta1, beta2, eps = data["opt_scalars"]
            opt = OptimizerState(
                first_moment=QNetworkParams(*(data[f"m_{n}"] for n in TENSOR_NAMES)),
                second_moment=QNetworkParams(*(data[f"v_{n}"] for n in TENSOR_NAMES)),
                step_count=int(step),
                alpha=float(alpha),
                beta1=float(beta1),
                beta2=float(beta2),
                numeric_epsilon=float(eps),
            )
        metadata = json.loads(str(data["meta"]))
        arrays = {
            key[2:]: data[key] for key in data.files if key.startswith("x_")
        }
    return params, opt, metadata, arrays
