"""Minimal dense-network core.

Small fully connected stacks (relu / sigmoid / identity) with explicit
reverse-mode gradients and an adaptive-moment optimizer. Everything is
float64 and deterministic; the networks here are tiny, so reproducibility
is worth more than raw speed. The heavy loops live in the kernel backend.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as kernels

ACT_CODES = {"identity": kernels.IDENTITY, "relu": kernels.RELU, "sigmoid": kernels.SIGMOID}
ACT_NAMES = {code: name for name, code in ACT_CODES.items()}

PARAMS_FORMAT = "heatshift-params"
PARAMS_VERSION = 1


class DenseNet:
    """An ordered stack of affine layers with fixed activations."""

    __slots__ = ("weights", "biases", "acts")

    def __init__(self, weights, biases, acts):
        if not (len(weights) == len(biases) == len(acts)) or not weights:
            raise ValueError("weights, biases and acts must align and be non-empty")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]
        self.acts = [a if isinstance(a, int) else ACT_CODES[a] for a in acts]
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight {w.shape} and bias {b.shape} mismatch")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input size {w.shape[1]} does not chain")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameters")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def sizes(self):
        return [self.input_dim] + [w.shape[0] for w in self.weights]

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def forward_all(self, x):
        """All layer activations for a (n, d_in) batch, input included."""
        x = np.ascontiguousarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.input_dim:
            raise ValueError(f"expected (n, {self.input_dim}) input, got {x.shape}")
        return kernels.dense_forward(self.weights, self.biases, self.acts, x)

    def forward(self, x):
        """Evaluate the network; accepts a single vector or a batch."""
        arr = np.asarray(x, dtype=np.float64)
        if arr.ndim == 1:
            return self.forward_all(arr.reshape(1, -1))[-1][0]
        return self.forward_all(arr)[-1]

    def backward(self, layer_acts, upstream):
        """Tape of d sum_i <upstream_i, f(x_i)> / d params, from cached activations."""
        upstream = np.ascontiguousarray(upstream, dtype=np.float64)
        dws, dbs = kernels.dense_backward(self.weights, self.acts, layer_acts, upstream)
        return GradientTape(dws, dbs)

    def gradients(self, x, upstream):
        """Convenience: forward then backward for a single input vector."""
        x = np.asarray(x, dtype=np.float64)
        upstream = np.asarray(upstream, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x.reshape(1, -1)
            upstream = upstream.reshape(1, -1)
        return self.backward(self.forward_all(x), upstream)

    def copy(self) -> "DenseNet":
        return DenseNet([w.copy() for w in self.weights],
                        [b.copy() for b in self.biases], list(self.acts))

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "activations": [ACT_NAMES[a] for a in self.acts],
            "weights": [w.reshape(-1).tolist() for w in self.weights],  # row-major
            "biases": [b.tolist() for b in self.biases],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DenseNet":
        sizes = d["sizes"]
        weights = [np.array(flat, dtype=np.float64).reshape(sizes[i + 1], sizes[i])
                   for i, flat in enumerate(d["weights"])]
        biases = [np.array(b, dtype=np.float64) for b in d["biases"]]
        return cls(weights, biases, d["activations"])


def glorot_init(sizes, activations, rng) -> DenseNet:
    """Uniform +-sqrt(6/(fan_in+fan_out)) weights, zero biases."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNet(weights, biases, activations)


@dataclass
class GradientTape:
    """Parameter gradients aligned one-to-one with a DenseNet."""

    dw: list = field(default_factory=list)
    db: list = field(default_factory=list)

    def is_finite(self) -> bool:
        return (all(np.isfinite(g).all() for g in self.dw)
                and all(np.isfinite(g).all() for g in self.db))


class Adam:
    """Adaptive-moment optimizer bound to one network's parameter shapes."""

    def __init__(self, net: DenseNet, lr=3e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.skipped = 0
        self._m = ([np.zeros_like(w) for w in net.weights],
                   [np.zeros_like(b) for b in net.biases])
        self._v = ([np.zeros_like(w) for w in net.weights],
                   [np.zeros_like(b) for b in net.biases])

    def step(self, net: DenseNet, tape: GradientTape) -> bool:
        """Apply one update in place; skips (and counts) non-finite tapes."""
        if not tape.is_finite():
            self.skipped += 1
            return False
        self.t += 1
        correct1 = 1.0 - self.beta1 ** self.t
        correct2 = 1.0 - self.beta2 ** self.t
        for params, grads, ms, vs in ((net.weights, tape.dw, self._m[0], self._v[0]),
                                      (net.biases, tape.db, self._m[1], self._v[1])):
            for p, g, m, v in zip(params, grads, ms, vs):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                p -= self.lr * (m / correct1) / (np.sqrt(v / correct2) + self.eps)
        return True


def _stable_json(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def save_params(path, payload: dict) -> None:
    """Write a versioned parameter payload (byte-stable for equal content)."""
    body = {"format": PARAMS_FORMAT, "version": PARAMS_VERSION, **payload}
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(_stable_json(body))


def load_params(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        body = json.load(fh)
    if body.get("format") != PARAMS_FORMAT:
        raise ValueError(f"{path}: not a {PARAMS_FORMAT} file")
    if body.get("version") != PARAMS_VERSION:
        raise ValueError(f"{path}: unsupported version {body.get('version')}")
    return body
