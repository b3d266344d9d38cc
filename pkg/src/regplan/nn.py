"""Minimal dense-network machinery: forward/backward, losses, Adam, gradcheck.

Everything is float64 numpy. Hidden layers use the rectifier; the output
head is 'sigmoid' (independent sigmoid units), 'softmax3' (a softmax over
every consecutive group of 3 logits, one group per classification node)
or 'raw'. Training is a pure function of (initial seed, data order), so
identical seeds give bit-identical parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_EPS = 1e-12


class ShapeMismatchError(ValueError):
    pass


class NonFiniteLossError(FloatingPointError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass
class DenseNet:
    sizes: tuple[int, ...]
    head: str  # sigmoid | softmax3 | raw
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if self.head not in ("sigmoid", "softmax3", "raw"):
            raise ValueError(f"unknown head {self.head!r}")
        if self.head == "softmax3" and self.sizes[-1] % 3 != 0:
            raise ValueError("softmax3 head needs an output size divisible by 3")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.sizes[i], self.sizes[i + 1]) or b.shape != (self.sizes[i + 1],):
                raise ShapeMismatchError(f"layer {i} parameter shapes do not chain")

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def copy(self) -> "DenseNet":
        return DenseNet(
            self.sizes, self.head, [w.copy() for w in self.weights], [b.copy() for b in self.biases]
        )


def init_dense(sizes, head: str, rng: np.random.Generator) -> DenseNet:
    """Fan-in-scaled uniform initialization: U(-1/sqrt(n_in), 1/sqrt(n_in))."""
    sizes = tuple(int(s) for s in sizes)
    weights, biases = [], []
    for nin, nout in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(nin)
        weights.append(rng.uniform(-bound, bound, size=(nin, nout)))
        biases.append(rng.uniform(-bound, bound, size=(nout,)))
    return DenseNet(sizes, head, weights, biases)


def _head_transform(z: np.ndarray, head: str) -> np.ndarray:
    if head == "raw":
        return z
    if head == "sigmoid":
        out = np.empty_like(z)
        np.exp(-np.abs(z), out=out)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + out[pos])
        out[~pos] = out[~pos] / (1.0 + out[~pos])
        return out
    b, n = z.shape
    g = z.reshape(b, n // 3, 3)
    g = g - g.max(axis=2, keepdims=True)
    e = np.exp(g)
    p = e / e.sum(axis=2, keepdims=True)
    return p.reshape(b, n)


def _forward_cached(net: DenseNet, x: np.ndarray):
    acts = [x]
    z = x
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w + b
        if i < len(net.weights) - 1:
            z = np.maximum(z, 0.0)
        acts.append(z)
    return acts


def forward(net: DenseNet, x: np.ndarray) -> np.ndarray:
    """Deterministic affine+rectifier chain with the head transform applied."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != net.in_dim:
        raise ShapeMismatchError(f"input width {x.shape[1]} != {net.in_dim}")
    acts = _forward_cached(net, x)
    return _head_transform(acts[-1], net.head)


def loss_and_grad(net: DenseNet, x: np.ndarray, y: np.ndarray, loss_kind: str):
    """Mean loss over the batch plus reverse-mode gradients.

    'binary-cross-entropy' expects a sigmoid net and 0/1 targets of shape
    (B,) or (B, out). '3-class-cross-entropy' expects a softmax3 net and
    integer class targets (0=True, 1=False, 2=Null by convention) of
    shape (B,) or (B, nodes).
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != net.in_dim:
        raise ShapeMismatchError(f"input width {x.shape[1]} != {net.in_dim}")
    acts = _forward_cached(net, x)
    z = acts[-1]
    b = x.shape[0]
    if loss_kind == "binary-cross-entropy":
        if net.head != "sigmoid":
            raise ShapeMismatchError("binary-cross-entropy needs a sigmoid head")
        y = np.asarray(y, dtype=float).reshape(z.shape)
        p = _head_transform(z, "sigmoid")
        pc = np.clip(p, _EPS, 1.0 - _EPS)
        loss = -np.mean(y * np.log(pc) + (1.0 - y) * np.log(1.0 - pc))
        dz = (p - y) / p.size
    elif loss_kind == "3-class-cross-entropy":
        if net.head != "softmax3":
            raise ShapeMismatchError("3-class-cross-entropy needs a softmax3 head")
        n = net.out_dim // 3
        yi = np.asarray(y, dtype=int).reshape(b, n)
        if yi.min() < 0 or yi.max() > 2:
            raise ShapeMismatchError("3-class targets must be in {0, 1, 2}")
        p = _head_transform(z, "softmax3").reshape(b, n, 3)
        rows = np.arange(b)[:, None], np.arange(n)[None, :]
        picked = np.clip(p[rows[0], rows[1], yi], _EPS, 1.0)
        loss = -np.mean(np.log(picked))
        onehot = np.zeros_like(p)
        onehot[rows[0], rows[1], yi] = 1.0
        dz = ((p - onehot) / (b * n)).reshape(b, net.out_dim)
    else:
        raise ValueError(f"unknown loss kind {loss_kind!r}")
    if not np.isfinite(loss):
        raise NonFiniteLossError(f"loss is {loss}")
    grads: dict[tuple[str, int], np.ndarray] = {}
    delta = dz
    for i in range(len(net.weights) - 1, -1, -1):
        grads[("w", i)] = acts[i].T @ delta
        grads[("b", i)] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i].T) * (acts[i] > 0)
    return float(loss), grads


@dataclass
class AdamState:
    """Per-parameter moment accumulators plus the shared step counter."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_init(net: DenseNet, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
              eps: float = 1e-8) -> AdamState:
    state = AdamState(lr, beta1, beta2, eps)
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        state.m[("w", i)] = np.zeros_like(w)
        state.v[("w", i)] = np.zeros_like(w)
        state.m[("b", i)] = np.zeros_like(b)
        state.v[("b", i)] = np.zeros_like(b)
    return state


def adam_step(state: AdamState, net: DenseNet, grads: dict) -> None:
    """One bias-corrected Adam update, in place."""
    state.step += 1
    c1 = 1.0 - state.beta1 ** state.step
    c2 = 1.0 - state.beta2 ** state.step
    for key, g in grads.items():
        kind, i = key
        param = net.weights[i] if kind == "w" else net.biases[i]
        if g.shape != param.shape:
            raise ShapeMismatchError(f"gradient shape {g.shape} != parameter {param.shape}")
        m = state.m[key]
        v = state.v[key]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        param -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def gradcheck(net: DenseNet, x: np.ndarray, y: np.ndarray, loss_kind: str,
              perturbation: float = 1e-5) -> float:
    """Worst relative error between analytic and central-difference gradients.

    The relative error per element is |a - n| / max(|a| + |n|, 1e-3), so
    near-zero gradients are compared absolutely at 1e-3 scale.
    """
    if not (1e-6 <= perturbation <= 1e-4):
        raise ValueError("perturbation must lie in [1e-6, 1e-4]")
    _, grads = loss_and_grad(net, x, y, loss_kind)
    worst = 0.0
    for key, g in grads.items():
        kind, i = key
        param = net.weights[i] if kind == "w" else net.biases[i]
        flat = param.reshape(-1)
        gflat = g.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + perturbation
            hi, _ = loss_and_grad(net, x, y, loss_kind)
            flat[j] = orig - perturbation
            lo, _ = loss_and_grad(net, x, y, loss_kind)
            flat[j] = orig
            numeric = (hi - lo) / (2.0 * perturbation)
            err = abs(gflat[j] - numeric) / max(abs(gflat[j]) + abs(numeric), 1e-3)
            worst = max(worst, err)
    return worst


# ---------------------------------------------------------------------------
# Checkpoint files: versioned header + per-tensor (name, shape, row-major
# numbers). Floats are written as C99 hex literals so round-trips are
# bit-exact.

_MAGIC = "netbundle v1"


def save_checkpoint(path, tensors: dict[str, np.ndarray], meta: dict[str, str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_MAGIC + "\n")
        for key in sorted(meta):
            value = str(meta[key])
            if any(c.isspace() for c in value):
                raise CheckpointError(f"meta value for {key!r} must be whitespace-free")
            fh.write(f"meta {key} {value}\n")
        for name in sorted(tensors):
            arr = np.asarray(tensors[name], dtype=float)
            shape = " ".join(str(s) for s in arr.shape)
            fh.write(f"tensor {name} float64 {arr.ndim} {shape}\n")
            fh.write(" ".join(float(v).hex() for v in arr.reshape(-1)) + "\n")


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict[str, str]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _MAGIC:
        raise CheckpointError(f"bad checkpoint header: {lines[:1]}")
    tensors: dict[str, np.ndarray] = {}
    meta: dict[str, str] = {}
    i = 1
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] == "meta":
            meta[parts[1]] = parts[2]
            i += 1
        elif parts[0] == "tensor":
            name, _, ndim = parts[1], parts[2], int(parts[3])
            shape = tuple(int(s) for s in parts[4 : 4 + ndim])
            values = [float.fromhex(tok) for tok in lines[i + 1].split()]
            arr = np.array(values, dtype=float).reshape(shape)
            tensors[name] = arr
            i += 2
        else:
            raise CheckpointError(f"unrecognized checkpoint line {i + 1}: {lines[i][:40]!r}")
    return tensors, meta


def net_tensors(prefix: str, net: DenseNet) -> dict[str, np.ndarray]:
    out = {}
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        out[f"{prefix}/w{i}"] = w
        out[f"{prefix}/b{i}"] = b
    return out


def net_from_tensors(prefix: str, sizes, head: str, tensors: dict) -> DenseNet:
    sizes = tuple(int(s) for s in sizes)
    weights, biases = [], []
    for i in range(len(sizes) - 1):
        weights.append(tensors[f"{prefix}/w{i}"])
        biases.append(tensors[f"{prefix}/b{i}"])
    return DenseNet(sizes, head, weights, biases)
