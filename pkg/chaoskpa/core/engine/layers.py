import hashlib
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import functional as F
from .tensor import ImageTensor
from ..utils.errors import ParameterError, ShapeError, StateError

BATCHNORM_EPSILON = 1e-5
BATCHNORM_MOMENTUM = 0.1


class LayerKind(str, Enum):
    CONV3X3 = "conv3x3"
    CONV1X1 = "conv1x1"
    BATCHNORM = "batchnorm"
    RELU = "relu"
    MAXPOOL2X2 = "maxpool2x2"
    AVGPOOL2X2 = "avgpool2x2"
    DECONV2X2 = "deconv2x2"
    CONCAT = "concat"
    DROPOUT = "dropout"
    UPSAMPLE = "upsample"


@dataclass(kw_only=True, frozen=True)
class LayerSpec:
    kind: LayerKind
    in_channels: int = 0
    out_channels: int = 0
    stride: int = 1
    padding: int = 0
    dropout_ratio: float = 0.0
    epsilon: float = BATCHNORM_EPSILON
    momentum: float = BATCHNORM_MOMENTUM
    factor: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", LayerKind(self.kind))
        if not 0.0 <= self.dropout_ratio < 1.0:
            raise ParameterError(
                f"dropout ratio must lie in [0, 1), got {self.dropout_ratio}"
            )
        if self.kind in (LayerKind.CONV3X3, LayerKind.CONV1X1, LayerKind.DECONV2X2):
            if self.in_channels < 1 or self.out_channels < 1:
                raise ParameterError(
                    f"{self.kind.value} needs positive channel counts, got {self.in_channels} -> {self.out_channels}"
                )
        if self.kind is LayerKind.UPSAMPLE and self.factor < 1:
            raise ParameterError(f"upsample factor must be >= 1, got {self.factor}")

    def as_dict(self):
        return {
            "kind": self.kind.value,
            "in_channels": self.in_channels,
            "out_channels": self.out_channels,
            "stride": self.stride,
            "padding": self.padding,
            "dropout_ratio": self.dropout_ratio,
            "epsilon": self.epsilon,
            "momentum": self.momentum,
            "factor": self.factor,
        }


class Layer:
    """
    One op of the catalogue. forward(*inputs) records what backward needs;
    backward(dout) accumulates parameter gradients and returns one input
    gradient per forward input.
    """

    def __init__(self, spec):
        self.spec = spec
        self.training = True
        self._cache = None

    @property
    def kind(self):
        return self.spec.kind

    def parameters(self):
        return {}

    def buffers(self):
        return {}

    def output_shape(self, shape):
        return shape

    def forward(self, x):
        raise NotImplementedError

    def backward(self, dout):
        if self._cache is None:
            raise StateError(f"{self.kind.value} backward called before forward")
        grads = self._backward(dout, self._cache)
        return list(grads) if isinstance(grads, (list, tuple)) else [grads]

    def _backward(self, dout, cache):
        raise NotImplementedError

    def kink_signature(self):
        """Bytes identifying the active piece of a piecewise-linear op, or None."""
        return None

    def astype(self, dtype):
        for tensor in self.parameters().values():
            tensor.astype(dtype)
        for name, buffer in self.buffers().items():
            setattr(self, name, buffer.astype(dtype))
        return self


class Conv2d(Layer):
    def __init__(self, spec, rng, dtype=np.float32):
        super().__init__(spec)
        kernel = 3 if spec.kind is LayerKind.CONV3X3 else 1
        fan_in = spec.in_channels * kernel * kernel
        self.weight = ImageTensor(
            (rng.standard_normal((spec.out_channels, spec.in_channels, kernel, kernel)) * np.sqrt(2.0 / fan_in)).astype(dtype)
        )
        self.bias = ImageTensor(np.zeros(spec.out_channels, dtype=dtype))

    def parameters(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, shape):
        n, c, h, w = shape
        if c != self.spec.in_channels:
            raise ShapeError(f"{self.kind.value} expects {self.spec.in_channels} channels, got {c}")
        kernel = self.weight.shape[2]
        return (
            n,
            self.spec.out_channels,
            F.conv_output_size(h, kernel, self.spec.stride, self.spec.padding),
            F.conv_output_size(w, kernel, self.spec.stride, self.spec.padding),
        )

    def forward(self, x):
        out, self._cache = F.conv2d_forward(
            x, self.weight.values, self.bias.values, self.spec.stride, self.spec.padding
        )
        return out

    def _backward(self, dout, cache):
        dx, dweight, dbias = F.conv2d_backward(dout, cache)
        self.weight.accumulate(dweight)
        self.bias.accumulate(dbias)
        return dx


class Deconv2x2(Layer):
    def __init__(self, spec, rng, dtype=np.float32):
        super().__init__(spec)
        fan_in = spec.in_channels * 4
        self.weight = ImageTensor(
            (rng.standard_normal((spec.in_channels, spec.out_channels, 2, 2)) * np.sqrt(2.0 / fan_in)).astype(dtype)
        )
        self.bias = ImageTensor(np.zeros(spec.out_channels, dtype=dtype))

    def parameters(self):
        return {"weight": self.weight, "bias": self.bias}

    def output_shape(self, shape):
        n, c, h, w = shape
        if c != self.spec.in_channels:
            raise ShapeError(f"deconv2x2 expects {self.spec.in_channels} channels, got {c}")
        return n, self.spec.out_channels, 2 * h, 2 * w

    def forward(self, x):
        out, self._cache = F.deconv2x2_forward(x, self.weight.values, self.bias.values)
        return out

    def _backward(self, dout, cache):
        dx, dweight, dbias = F.deconv2x2_backward(dout, cache)
        self.weight.accumulate(dweight)
        self.bias.accumulate(dbias)
        return dx


class BatchNorm2d(Layer):
    def __init__(self, spec, rng=None, dtype=np.float32):
        super().__init__(spec)
        channels = spec.out_channels or spec.in_channels
        self.gamma = ImageTensor(np.ones(channels, dtype=dtype))
        self.beta = ImageTensor(np.zeros(channels, dtype=dtype))
        self.running_mean = np.zeros(channels, dtype=dtype)
        self.running_var = np.ones(channels, dtype=dtype)

    def parameters(self):
        return {"gamma": self.gamma, "beta": self.beta}

    def buffers(self):
        return {"running_mean": self.running_mean, "running_var": self.running_var}

    def output_shape(self, shape):
        if shape[1] != self.gamma.shape[0]:
            raise ShapeError(f"batchnorm expects {self.gamma.shape[0]} channels, got {shape[1]}")
        return shape

    def forward(self, x):
        out, self._cache = F.batchnorm_forward(
            x,
            self.gamma.values,
            self.beta.values,
            self.running_mean,
            self.running_var,
            self.training,
            self.spec.epsilon,
            self.spec.momentum,
        )
        return out

    def _backward(self, dout, cache):
        dx, dgamma, dbeta = F.batchnorm_backward(dout, cache)
        self.gamma.accumulate(dgamma)
        self.beta.accumulate(dbeta)
        return dx


class ReLU(Layer):
    def forward(self, x):
        out, self._cache = F.relu_forward(x)
        return out

    def _backward(self, dout, mask):
        return F.relu_backward(dout, mask)

    def kink_signature(self):
        if self._cache is None:
            return None
        return np.packbits(self._cache).tobytes()


class MaxPool2x2(Layer):
    def output_shape(self, shape):
        n, c, h, w = shape
        if h % 2 or w % 2:
            raise ShapeError(f"maxpool2x2 needs even spatial dims, got {shape}")
        return n, c, h // 2, w // 2

    def forward(self, x):
        out, self._cache = F.max_pool2x2_forward(x)
        return out

    def _backward(self, dout, cache):
        return F.max_pool2x2_backward(dout, cache)

    def kink_signature(self):
        if self._cache is None:
            return None
        return self._cache[1].astype(np.uint8).tobytes()


class AvgPool2x2(MaxPool2x2):
    def forward(self, x):
        out, self._cache = F.avg_pool2x2_forward(x)
        return out

    def _backward(self, dout, cache):
        return F.avg_pool2x2_backward(dout, cache)

    def kink_signature(self):
        return None


class Dropout(Layer):
    def __init__(self, spec, rng=None, dtype=np.float32):
        super().__init__(spec)
        self.ratio = spec.dropout_ratio
        self.rng = rng if rng is not None else np.random.default_rng()

    def forward(self, x):
        out, mask = F.dropout_forward(x, self.ratio, self.rng, self.training)
        self._cache = (mask,)
        return out

    def _backward(self, dout, cache):
        return F.dropout_backward(dout, cache[0])


class Concat(Layer):
    def output_shape(self, *shapes):
        reference = shapes[0]
        for shape in shapes[1:]:
            if shape[0] != reference[0] or shape[2:] != reference[2:]:
                raise ShapeError(f"concat needs matching spatial dims, got {list(shapes)}")
        return (reference[0], sum(shape[1] for shape in shapes), *reference[2:])

    def forward(self, *xs):
        out, self._cache = F.concat_forward(xs)
        return out

    def _backward(self, dout, sizes):
        return F.concat_backward(dout, sizes)


class Upsample(Layer):
    def output_shape(self, shape):
        n, c, h, w = shape
        return n, c, h * self.spec.factor, w * self.spec.factor

    def forward(self, x):
        out, self._cache = F.upsample_nearest_forward(x, self.spec.factor)
        return out

    def _backward(self, dout, factor):
        return F.upsample_nearest_backward(dout, factor)


LAYER_TYPES = {
    LayerKind.CONV3X3: Conv2d,
    LayerKind.CONV1X1: Conv2d,
    LayerKind.BATCHNORM: BatchNorm2d,
    LayerKind.RELU: ReLU,
    LayerKind.MAXPOOL2X2: MaxPool2x2,
    LayerKind.AVGPOOL2X2: AvgPool2x2,
    LayerKind.DECONV2X2: Deconv2x2,
    LayerKind.CONCAT: Concat,
    LayerKind.DROPOUT: Dropout,
    LayerKind.UPSAMPLE: Upsample,
}


def build_layer(spec, rng, dtype=np.float32):
    layer_type = LAYER_TYPES[spec.kind]
    if layer_type in (Conv2d, Deconv2x2, BatchNorm2d, Dropout):
        return layer_type(spec, rng, dtype)
    return layer_type(spec)


def signature_digest(parts):
    digest = hashlib.blake2b(digest_size=16)
    for part in parts:
        if part is not None:
            digest.update(part)
    return digest.hexdigest()
