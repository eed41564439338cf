"""
MSEDNet: a five-stage encoder (Conv3x3 + BN + ReLU, then 2x2 average pooling,
32 -> 16 -> 8 -> 4 -> 2 -> 1) and a decoder that, at every resolution, fuses the
outputs of encoder stages 2-5 with the upsampled main path.

At a decoding resolution r, each encoder stage whose output is no larger than r
is brought to r by nearest-neighbour upsampling and concatenated with the
deconvolved main path before a Conv3x3 + BN + ReLU block.
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

STAGES = 5
FUSED_STAGES = (2, 3, 4, 5)
ENCODER_MULTIPLIERS = (1, 1, 2, 2, 4)
DECODER_MULTIPLIERS = (2, 2, 1, 1, 1)


def build_msednet(
    in_channels,
    base_width=DEFAULT_BASE_WIDTH,
    dropout_ratio=DEFAULT_DROPOUT_RATIO,
    seed=0,
    dtype=np.float32,
):
    check_builder_args(in_channels, base_width)
    graph = ModelGraph("msednet", in_channels, INPUT_SIZE, seed=seed, dtype=dtype)
    graph.builder = {
        "network": "msednet",
        "in_channels": in_channels,
        "base_width": base_width,
        "dropout_ratio": dropout_ratio,
    }

    # stage -> (node, channels, resolution) of the pooled output
    encoded = {}
    node, channels, size = "input", in_channels, INPUT_SIZE
    for stage in range(1, STAGES + 1):
        width = base_width * ENCODER_MULTIPLIERS[stage - 1]
        ratio = dropout_ratio if stage > STAGES - 2 else 0.0
        node = conv_block(graph, f"enc{stage}", node, channels, width, ratio)
        node = graph.add(f"enc{stage}.pool", LayerSpec(kind=LayerKind.AVGPOOL2X2), node)
        channels, size = width, size // 2
        encoded[stage] = (node, channels, size)

    for stage in range(1, STAGES + 1):
        width = base_width * DECODER_MULTIPLIERS[stage - 1]
        size *= 2
        node = graph.add(
            f"dec{stage}.deconv",
            LayerSpec(kind=LayerKind.DECONV2X2, in_channels=channels, out_channels=width),
            node,
        )

        fused, fused_channels = [node], width
        for source in FUSED_STAGES:
            source_node, source_channels, source_size = encoded[source]
            if source_size > size:
                continue
            if source_size < size:
                source_node = graph.add(
                    f"dec{stage}.from_enc{source}",
                    LayerSpec(kind=LayerKind.UPSAMPLE, factor=size // source_size),
                    source_node,
                )
            fused.append(source_node)
            fused_channels += source_channels

        node = graph.add(f"dec{stage}.fuse", LayerSpec(kind=LayerKind.CONCAT), fused)
        node = conv_block(graph, f"dec{stage}", node, fused_channels, width)
        channels = width

    output_head(graph, node, channels, in_channels)
    return graph
