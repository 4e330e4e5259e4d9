"""Dense-tensor math for small MLPs with exact reverse-mode gradients.

Everything is float64 and CPU-only; the point is reproducibility and
verifiability (every gradient here is cross-checked against central finite
differences in the test suite), not throughput. Batched forward/backward
variants share the same parameters and exist because the trainer works on
minibatches.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteGradient


@dataclass
class Tensor2:
    """Row-major 2-D tensor; ``data`` has shape (rows, cols)."""

    rows: int
    cols: int
    data: np.ndarray

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Tensor2":
        arr = np.asarray(arr, dtype=np.float64)
        if arr.ndim != 2:
            raise DimensionMismatch(f"expected 2-D array, got shape {arr.shape}")
        return cls(arr.shape[0], arr.shape[1], arr)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "Tensor2":
        return cls(rows, cols, np.zeros((rows, cols)))


@dataclass
class MlpParams:
    """Feed-forward net: weight shapes (out, in), rectifier on hidden layers,
    identity on the output layer."""

    layers: list[tuple[Tensor2, np.ndarray]] = field(default_factory=list)

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    def input_dim(self) -> int:
        return self.layers[0][0].cols

    def output_dim(self) -> int:
        return self.layers[-1][0].rows

    def copy(self) -> "MlpParams":
        return MlpParams(
            [(Tensor2(w.rows, w.cols, w.data.copy()), b.copy()) for w, b in self.layers]
        )

    def flat(self) -> np.ndarray:
        return np.concatenate([np.concatenate([w.data.ravel(), b]) for w, b in self.layers])

    def assign_flat(self, values: np.ndarray) -> None:
        pos = 0
        for w, b in self.layers:
            n = w.rows * w.cols
            w.data[:] = values[pos : pos + n].reshape(w.rows, w.cols)
            pos += n
            b[:] = values[pos : pos + len(b)]
            pos += len(b)
        if pos != len(values):
            raise DimensionMismatch(f"flat vector length {len(values)} != {pos} parameters")


def mlp_init(dims: list[int], rng: np.random.Generator) -> MlpParams:
    """Glorot-uniform weights (bound sqrt(6/(fan_in+fan_out))), zero biases."""
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append((Tensor2.from_array(w), np.zeros(fan_out)))
    return MlpParams(layers)


def param_count(params: MlpParams) -> int:
    return sum(w.rows * w.cols + len(b) for w, b in params.layers)


def mlp_forward_batch(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Forward pass on a (B, in_dim) batch -> (B, out_dim)."""
    h = np.asarray(inputs, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != params.input_dim():
        raise DimensionMismatch(
            f"input shape {h.shape} incompatible with first layer ({params.input_dim()} inputs)"
        )
    last = params.n_layers - 1
    for k, (w, b) in enumerate(params.layers):
        h = h @ w.data.T + b
        if k != last:
            h = np.maximum(h, 0.0)
    return h


def mlp_forward(params: MlpParams, input_vec: np.ndarray) -> np.ndarray:
    """Forward pass on a single input vector."""
    x = np.asarray(input_vec, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionMismatch(f"expected a vector, got shape {x.shape}")
    return mlp_forward_batch(params, x[None, :])[0]


def mlp_backward_batch(
    params: MlpParams, inputs: np.ndarray, upstream: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Gradients of sum_b upstream[b] . output[b] w.r.t. parameters and inputs.

    Returns an MlpParams-shaped gradient bundle plus (B, in_dim) input grads.
    """
    x = np.asarray(inputs, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    if x.ndim != 2 or u.ndim != 2 or x.shape[0] != u.shape[0]:
        raise DimensionMismatch(f"batch shapes {x.shape} and {u.shape} do not align")
    if u.shape[1] != params.output_dim():
        raise DimensionMismatch(
            f"upstream width {u.shape[1]} != output dim {params.output_dim()}"
        )

    # Forward, keeping pre-activations.
    acts = [x]
    pre: list[np.ndarray] = []
    h = x
    last = params.n_layers - 1
    for k, (w, b) in enumerate(params.layers):
        z = h @ w.data.T + b
        pre.append(z)
        h = np.maximum(z, 0.0) if k != last else z
        acts.append(h)

    grads = MlpParams(
        [(Tensor2.zeros(w.rows, w.cols), np.zeros(len(b))) for w, b in params.layers]
    )
    delta = u
    for k in range(last, -1, -1):
        w, _ = params.layers[k]
        gw, gb = grads.layers[k]
        gw.data[:] = delta.T @ acts[k]
        gb[:] = delta.sum(axis=0)
        delta = delta @ w.data
        if k > 0:
            delta = delta * (pre[k - 1] > 0.0)
    return grads, delta


def mlp_backward(
    params: MlpParams, input_vec: np.ndarray, upstream: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Single-vector reverse mode: gradients of upstream . output."""
    x = np.asarray(input_vec, dtype=np.float64)
    u = np.asarray(upstream, dtype=np.float64)
    if x.ndim != 1 or u.ndim != 1:
        raise DimensionMismatch("mlp_backward expects vectors; use mlp_backward_batch")
    grads, input_grads = mlp_backward_batch(params, x[None, :], u[None, :])
    return grads, input_grads[0]


def finite_diff_check(
    params: MlpParams, input_vec: np.ndarray, epsilon: float, seed: int = 0
) -> float:
    """Max relative error of reverse-mode gradients vs central differences.

    A random projection u fixes the scalar f = u . mlp(x); every parameter
    and input component is perturbed by +-epsilon. Relative error uses
    denominator max(|analytic|, |numeric|, 1e-8).
    """
    if not 1e-8 < epsilon < 1e-3:
        raise ValueError(f"epsilon {epsilon} outside (1e-8, 1e-3)")
    rng = np.random.default_rng(seed)
    u = rng.normal(size=params.output_dim())
    x = np.asarray(input_vec, dtype=np.float64)

    grads, input_grad = mlp_backward(params, x, u)
    analytic = np.concatenate([grads.flat(), input_grad])

    work = params.copy()
    flat0 = work.flat()
    numeric = np.zeros_like(analytic)

    def f_params(values: np.ndarray) -> float:
        work.assign_flat(values)
        return float(u @ mlp_forward(work, x))

    for i in range(len(flat0)):
        bumped = flat0.copy()
        bumped[i] = flat0[i] + epsilon
        f_plus = f_params(bumped)
        bumped[i] = flat0[i] - epsilon
        f_minus = f_params(bumped)
        numeric[i] = (f_plus - f_minus) / (2 * epsilon)
    work.assign_flat(flat0)

    for j in range(len(x)):
        xp = x.copy()
        xp[j] += epsilon
        f_plus = float(u @ mlp_forward(params, xp))
        xp[j] = x[j] - epsilon
        f_minus = float(u @ mlp_forward(params, xp))
        numeric[len(flat0) + j] = (f_plus - f_minus) / (2 * epsilon)

    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1e-8)
    return float(np.max(np.abs(analytic - numeric) / denom))


@dataclass
class AdaptiveState:
    """Running mean of squared gradients, one slot per parameter tensor."""

    v: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)

    @classmethod
    def like(cls, params: MlpParams) -> "AdaptiveState":
        return cls([(np.zeros((w.rows, w.cols)), np.zeros(len(b))) for w, b in params.layers])


DECAY = 0.99
ADAPT_EPS = 1e-5


def sgd_adaptive_step(
    params: MlpParams, grads: MlpParams, state: AdaptiveState, lr: float
) -> None:
    """In-place update p -= lr * g / sqrt(v + 1e-5), v <- 0.99 v + 0.01 g^2."""
    for gw, gb in grads.layers:
        if not (np.isfinite(gw.data).all() and np.isfinite(gb).all()):
            raise NonFiniteGradient("gradient contains NaN/Inf")
    for (w, b), (gw, gb), (vw, vb) in zip(params.layers, grads.layers, state.v):
        vw *= DECAY
        vw += (1.0 - DECAY) * gw.data**2
        vb *= DECAY
        vb += (1.0 - DECAY) * gb**2
        w.data -= lr * gw.data / np.sqrt(vw + ADAPT_EPS)
        b -= lr * gb / np.sqrt(vb + ADAPT_EPS)


# --- checkpoint serialization -------------------------------------------------
#
# A checkpoint is one JSON header line (named sections of layer shapes, seed,
# step) followed by every parameter as a flat little-endian float64 array.


def save_checkpoint(path: str, nets: dict[str, MlpParams], seed: int, step: int) -> None:
    header = {
        "nets": {
            name: [[w.rows, w.cols] for w, _ in p.layers] for name, p in nets.items()
        },
        "seed": seed,
        "step": step,
    }
    body = np.concatenate([p.flat() for p in nets.values()]) if nets else np.zeros(0)
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(body.astype("<f8").tobytes())


def load_checkpoint(path: str) -> tuple[dict[str, MlpParams], int, int]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        header = json.loads(header_line.decode("utf-8"))
        body = np.frombuffer(fh.read(), dtype="<f8").astype(np.float64)
    nets: dict[str, MlpParams] = {}
    pos = 0
    for name, shapes in header["nets"].items():
        layers = []
        for rows, cols in shapes:
            n = rows * cols
            w = Tensor2(rows, cols, body[pos : pos + n].reshape(rows, cols).copy())
            pos += n
            b = body[pos : pos + rows].copy()
            pos += rows
            layers.append((w, b))
        nets[name] = MlpParams(layers)
    if pos != len(body):
        raise DimensionMismatch(f"checkpoint body has {len(body)} floats, header expects {pos}")
    return nets, int(header["seed"]), int(header["step"])
