from ..engine import LayerKind, LayerSpec
from ..utils.errors import ParameterError

INPUT_SIZE = 32
MIN_BASE_WIDTH = 8
DEFAULT_BASE_WIDTH = 32
DEFAULT_DROPOUT_RATIO = 0.5


def check_builder_args(in_channels, base_width):
    if in_channels not in (1, 3):
        raise ParameterError(f"in_channels must be 1 or 3, got {in_channels}")
    if isinstance(base_width, bool) or int(base_width) != base_width:
        raise ParameterError(f"base_width must be an integer, got {base_width!r}")
    if base_width < MIN_BASE_WIDTH:
        raise ParameterError(
            f"base_width must be >= {MIN_BASE_WIDTH}, got {base_width}"
        )


def conv_block(graph, prefix, source, in_channels, out_channels, dropout_ratio=0.0):
    """Conv3x3 + BN + ReLU, optionally followed by Dropout. Returns the last node's name."""
    node = graph.add(
        f"{prefix}.conv",
        LayerSpec(
            kind=LayerKind.CONV3X3,
            in_channels=in_channels,
            out_channels=out_channels,
            padding=1,
        ),
        source,
    )
    node = graph.add(
        f"{prefix}.bn",
        LayerSpec(kind=LayerKind.BATCHNORM, in_channels=out_channels, out_channels=out_channels),
        node,
    )
    node = graph.add(f"{prefix}.relu", LayerSpec(kind=LayerKind.RELU), node)
    if dropout_ratio:
        node = graph.add(
            f"{prefix}.dropout",
            LayerSpec(kind=LayerKind.DROPOUT, dropout_ratio=dropout_ratio),
            node,
        )
    return node


def output_head(graph, source, in_channels, out_channels):
    return graph.add(
        "head.conv1x1",
        LayerSpec(kind=LayerKind.CONV1X1, in_channels=in_channels, out_channels=out_channels),
        source,
    )
