from .functional import (
    avg_pool2x2_forward,
    batchnorm_forward,
    concat_forward,
    conv2d_backward,
    conv2d_forward,
    deconv2x2_forward,
    dropout_forward,
    max_pool2x2_forward,
    relu_forward,
)
from .grad_check import GradCheckReport, grad_check
from .graph import INPUT, ModelGraph, rebuild
from .layers import Layer, LayerKind, LayerSpec, build_layer
from .losses import l1_loss
from .tensor import ImageTensor
