"""
Modified Unet for 32x32 images: depth 3 (32 -> 16 -> 8 -> 4 bottleneck), widths
doubling per depth, and a final 1x1 convolution back to the input's channel count.
"""

import numpy as np

from ..engine import LayerKind, LayerSpec, ModelGraph
from .blocks import (
    DEFAULT_BASE_WIDTH,
    DEFAULT_DROPOUT_RATIO,
    INPUT_SIZE,
    check_builder_args,
    conv_block,
    output_head,
)

DEPTH = 3


def double_conv(graph, prefix, source, in_channels, out_channels, dropout_ratio=0.0):
    node = conv_block(graph, f"{prefix}.0", source, in_channels, out_channels)
    return conv_block(graph, f"{prefix}.1", node, out_channels, out_channels, dropout_ratio)


def build_unet(
    in_channels,
    base_width=DEFAULT_BASE_WIDTH,
    dropout_ratio=DEFAULT_DROPOUT_RATIO,
    seed=0,
    dtype=np.float32,
):
    check_builder_args(in_channels, base_width)
    graph = ModelGraph("unet", in_channels, INPUT_SIZE, seed=seed, dtype=dtype)
    graph.builder = {
        "network": "unet",
        "in_channels": in_channels,
        "base_width": base_width,
        "dropout_ratio": dropout_ratio,
    }
    widths = [base_width * 2**level for level in range(DEPTH + 1)]

    # Encoder; the deepest encoder block and the bottleneck carry dropout.
    skips = []
    node, channels = "input", in_channels
    for level in range(DEPTH):
        ratio = dropout_ratio if level == DEPTH - 1 else 0.0
        node = double_conv(graph, f"down{level + 1}", node, channels, widths[level], ratio)
        skips.append(node)
        channels = widths[level]
        node = graph.add(f"pool{level + 1}", LayerSpec(kind=LayerKind.MAXPOOL2X2), node)

    node = double_conv(graph, "bottleneck", node, channels, widths[DEPTH], dropout_ratio)
    channels = widths[DEPTH]

    for level in reversed(range(DEPTH)):
        width = widths[level]
        node = graph.add(
            f"up{level + 1}.deconv",
            LayerSpec(kind=LayerKind.DECONV2X2, in_channels=channels, out_channels=width),
            node,
        )
        node = graph.add(
            f"up{level + 1}.concat", LayerSpec(kind=LayerKind.CONCAT), (node, skips[level])
        )
        node = double_conv(graph, f"up{level + 1}", node, 2 * width, width)
        channels = width

    output_head(graph, node, channels, in_channels)
    return graph
