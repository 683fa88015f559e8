"""Feedforward ReLU/linear networks: evaluation, files, seeded generation."""

import json
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import jsonio
from .errors import DimensionMismatch, NonFiniteInput, ParseError, PatternSpaceTooLarge, ShapeError

ACTIVATIONS = ("relu", "linear")
PATTERN_CAP = 20


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activation: str = "relu"

    def __post_init__(self):
        W = np.array(self.weights, dtype=float)
        b = np.array(self.bias, dtype=float).reshape(-1)
        if W.ndim != 2:
            raise ShapeError(f"weights must be a matrix, got shape {W.shape}")
        if b.shape[0] != W.shape[0]:
            raise ShapeError(f"bias length {b.shape[0]} != weight rows {W.shape[0]}")
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise NonFiniteInput("layer parameters must be finite")
        if self.activation not in ACTIVATIONS:
            raise ShapeError(f"unknown activation {self.activation!r}")
        W.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self):
        return self.weights.shape[1]

    @property
    def out_dim(self):
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Network:
    layers: tuple
    input_dim: int

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a network needs at least one layer")
        width = int(self.input_dim)
        if width < 1:
            raise ShapeError("input_dim must be positive")
        for k, layer in enumerate(layers):
            if layer.in_dim != width:
                raise ShapeError(f"expects input width {width}, weights have {layer.in_dim} columns", layer=k)
            width = layer.out_dim
        object.__setattr__(self, "layers", layers)
        object.__setattr__(self, "input_dim", int(self.input_dim))

    @property
    def depth(self):
        return len(self.layers)

    @property
    def output_dim(self):
        return self.layers[-1].out_dim

    @property
    def widths(self):
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def to_json(self):
        return {
            "input_dim": self.input_dim,
            "layers": [{"activation": l.activation, "W": l.weights.tolist(), "b": l.bias.tolist()}
                       for l in self.layers],
        }

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ParseError("network file must hold a JSON object")
        for key in ("input_dim", "layers"):
            if key not in obj:
                raise ParseError(f"missing field {key!r}", context="network")
        layers = []
        for k, spec in enumerate(obj["layers"]):
            try:
                W, b = spec["W"], spec["b"]
                act = spec.get("activation", "relu")
            except (KeyError, TypeError) as exc:
                raise ParseError(f"bad layer entry: {exc}", context=f"layers[{k}]") from exc
            try:
                W = np.array(W, dtype=float)
                b = np.array(b, dtype=float)
            except ValueError as exc:
                raise ShapeError(str(exc), layer=k) from exc
            try:
                layers.append(Layer(W, b, act))
            except ShapeError as exc:
                raise ShapeError(str(exc), layer=k) from exc
        return cls(tuple(layers), obj["input_dim"])


def forward(net, x):
    """Evaluate the network; ``x`` is one input vector or a (k, n) batch."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != net.input_dim:
        raise DimensionMismatch(f"input has dimension {X.shape[1]}, network expects {net.input_dim}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("network input must be finite")
    for layer in net.layers:
        X = X @ layer.weights.T + layer.bias
        if layer.activation == "relu":
            X = np.maximum(X, 0.0)
    return X[0] if single else X


def load_network(source):
    """Read a network from a path or an open text stream."""
    try:
        if hasattr(source, "read"):
            obj = json.load(source)
        else:
            with open(source) as fh:
                obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, context=f"line {exc.lineno} column {exc.colno}") from exc
    return Network.from_json(obj)


def dumps_network(net):
    return jsonio.dumps(net.to_json())


def save_network(net, path):
    with open(path, "w") as fh:
        fh.write(dumps_network(net))


def random_network(sizes: Sequence[int], seed: int, hidden="relu", output="linear"):
    """Uniform(-1, 1) weights and biases from PCG64 seeded with ``seed``.

    Draw order is fixed: per layer, the weight matrix row-major, then the bias.
    """
    sizes = [int(s) for s in sizes]
    if len(sizes) < 2 or min(sizes) < 1:
        raise ShapeError(f"need at least two positive layer sizes, got {sizes}")
    rng = np.random.Generator(np.random.PCG64(int(seed) & (2**64 - 1)))
    layers = []
    for k in range(1, len(sizes)):
        W = rng.uniform(-1.0, 1.0, size=(sizes[k], sizes[k - 1]))
        b = rng.uniform(-1.0, 1.0, size=sizes[k])
        layers.append(Layer(W, b, output if k == len(sizes) - 1 else hidden))
    return Network(tuple(layers), sizes[0])


@dataclass(frozen=True)
class ActivationPattern:
    """Indicator vector of active neurons; ``index`` reads ``bits`` big-endian."""

    bits: tuple
    index: int

    @property
    def selector(self):
        return np.diag(np.array(self.bits, dtype=float))

    @classmethod
    def from_index(cls, h, n):
        return cls(tuple((h >> (n - 1 - i)) & 1 for i in range(n)), h)


def enumerate_patterns(n, cap=PATTERN_CAP) -> Iterator[ActivationPattern]:
    if n < 1:
        raise ValueError("pattern width must be positive")
    if n > cap:
        raise PatternSpaceTooLarge(n, cap)
    for h in range(2**n):
        yield ActivationPattern.from_index(h, n)
