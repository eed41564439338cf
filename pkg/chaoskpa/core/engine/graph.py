import copy
from dataclasses import dataclass

import numpy as np

from .layers import Dropout, LayerKind, LayerSpec, build_layer, signature_digest
from ..utils.errors import ShapeError, StateError, UsageError

INPUT = "input"


@dataclass
class Node:
    name: str
    layer: object
    inputs: tuple


class ModelGraph:
    """
    A directed acyclic graph of catalogue layers with a single input and a single output.

    Nodes are kept in insertion order, which is a topological order because a node
    may only consume nodes added before it. Backward walks the nodes in reverse and
    sums gradients where one activation feeds several consumers (skip connections).
    """

    def __init__(self, name, in_channels, input_size=None, seed=0, dtype=np.float32):
        self.name = name
        self.in_channels = in_channels
        self.input_size = input_size
        self.dtype = np.dtype(dtype)
        self.nodes = []
        self.output = INPUT
        self.training = True
        self.builder = {}
        self._names = {INPUT}
        self._init_rng = np.random.default_rng(seed)
        self._dropout_rng = np.random.default_rng(seed)
        self._forwarded = False

    def add(self, name, spec, inputs):
        if name in self._names:
            raise UsageError(f"Duplicate node name '{name}'")
        inputs = (inputs,) if isinstance(inputs, str) else tuple(inputs)
        for source in inputs:
            if source not in self._names:
                raise UsageError(f"Node '{name}' consumes unknown node '{source}'")
        if spec.kind is not LayerKind.CONCAT and len(inputs) != 1:
            raise UsageError(f"{spec.kind.value} takes exactly one input, got {len(inputs)}")

        layer = build_layer(spec, self._init_rng, self.dtype)
        if isinstance(layer, Dropout):
            layer.rng = self._dropout_rng
        layer.training = self.training
        self.nodes.append(Node(name, layer, inputs))
        self._names.add(name)
        self.output = name
        return name

    @classmethod
    def from_layer(cls, layer, in_channels=None):
        """Wraps a single layer so it can be driven like a full model."""
        graph = cls(layer.kind.value, in_channels or layer.spec.in_channels or None)
        graph.nodes.append(Node(layer.kind.value, layer, (INPUT,)))
        graph._names.add(layer.kind.value)
        graph.output = layer.kind.value
        graph.dtype = np.dtype(
            next(iter(layer.parameters().values())).dtype
            if layer.parameters()
            else np.float32
        )
        return graph

    # Modes

    def train(self):
        self.training = True
        for node in self.nodes:
            node.layer.training = True
        return self

    def eval(self):
        self.training = False
        for node in self.nodes:
            node.layer.training = False
        return self

    def reseed_dropout(self, seed):
        self._dropout_rng = np.random.default_rng(seed)
        for node in self.nodes:
            if isinstance(node.layer, Dropout):
                node.layer.rng = self._dropout_rng

    def disable_dropout(self):
        for node in self.nodes:
            if isinstance(node.layer, Dropout):
                node.layer.ratio = 0.0

    # Passes

    def check_input(self, shape):
        if len(shape) != 4 or (self.in_channels and shape[1] != self.in_channels):
            raise ShapeError(
                f"{self.name} expects (N, {self.in_channels}, H, W) input, got {tuple(shape)}"
            )
        if self.input_size is not None and tuple(shape[2:]) != (
            self.input_size,
            self.input_size,
        ):
            raise ShapeError(
                f"{self.name} expects {self.input_size}x{self.input_size} input, got {shape[2]}x{shape[3]}"
            )

    def forward(self, x):
        x = np.asarray(x)
        self.check_input(x.shape)
        activations = {INPUT: x.astype(self.dtype, copy=False)}
        for node in self.nodes:
            activations[node.name] = node.layer.forward(
                *(activations[source] for source in node.inputs)
            )
        self._forwarded = True
        return activations[self.output]

    __call__ = forward

    def backward(self, dout):
        """Backpropagates dL/d(output); returns dL/d(input). Parameter gradients accumulate."""
        if not self._forwarded:
            raise StateError(f"{self.name} backward called before forward")

        grads = {self.output: np.asarray(dout, dtype=self.dtype)}
        for node in reversed(self.nodes):
            upstream = grads.pop(node.name, None)
            if upstream is None:
                continue
            for source, grad in zip(node.inputs, node.layer.backward(upstream)):
                if source in grads:
                    grads[source] = grads[source] + grad
                else:
                    grads[source] = grad
        return grads.get(INPUT)

    def zero_grad(self):
        for tensor in self.parameters().values():
            tensor.zero_grad()

    def infer_shapes(self, input_shape):
        """Static shape pass: returns every node's output shape or raises ShapeError."""
        self.check_input(input_shape)
        shapes = {INPUT: tuple(input_shape)}
        for node in self.nodes:
            try:
                shapes[node.name] = tuple(
                    node.layer.output_shape(*(shapes[source] for source in node.inputs))
                )
            except ShapeError as e:
                raise ShapeError(f"Node '{node.name}': {e.message}") from e
        if shapes[self.output][1:] != shapes[INPUT][1:]:
            raise ShapeError(
                f"{self.name} maps {shapes[INPUT]} to {shapes[self.output]}; expected an image-to-image shape"
            )
        return shapes

    # State

    def parameters(self):
        params = {}
        for node in self.nodes:
            for key, tensor in node.layer.parameters().items():
                params[f"{node.name}.{key}"] = tensor
        return params

    def buffers(self):
        buffers = {}
        for node in self.nodes:
            for key, buffer in node.layer.buffers().items():
                buffers[f"{node.name}.{key}"] = buffer
        return buffers

    def load_state(self, params, buffers):
        own_params = self.parameters()
        own_buffers = self.buffers()
        if set(params) != set(own_params) or set(buffers) != set(own_buffers):
            raise StateError(f"State does not match the structure of {self.name}")
        for key, values in params.items():
            if values.shape != own_params[key].shape:
                raise StateError(
                    f"{key}: stored shape {values.shape} != model shape {own_params[key].shape}"
                )
            own_params[key].values = np.array(values, dtype=self.dtype)
            own_params[key].zero_grad()
        for key, values in buffers.items():
            own_buffers[key][...] = values

    def parameter_count(self):
        return sum(tensor.size for tensor in self.parameters().values())

    def kink_signature(self):
        return signature_digest(node.layer.kink_signature() for node in self.nodes)

    def astype(self, dtype):
        """Returns a copy of the graph with every parameter and buffer cast to dtype."""
        graph = copy.deepcopy(self)
        graph.dtype = np.dtype(dtype)
        for node in graph.nodes:
            node.layer.astype(dtype)
        return graph

    def describe(self):
        return {
            "name": self.name,
            "in_channels": self.in_channels,
            "input_size": self.input_size,
            "builder": dict(self.builder),
            "nodes": [
                {
                    "name": node.name,
                    "inputs": list(node.inputs),
                    "spec": node.layer.spec.as_dict(),
                }
                for node in self.nodes
            ],
        }

    def __repr__(self):
        return f"ModelGraph({self.name}, nodes={len(self.nodes)}, parameters={self.parameter_count()})"


def rebuild(description, seed=0, dtype=np.float32):
    """Reconstructs a graph's structure from describe() output (fresh parameters)."""
    graph = ModelGraph(
        description["name"],
        description["in_channels"],
        description["input_size"],
        seed=seed,
        dtype=dtype,
    )
    graph.builder = dict(description.get("builder", {}))
    for node in description["nodes"]:
        graph.add(node["name"], LayerSpec(**node["spec"]), node["inputs"])
    return graph
