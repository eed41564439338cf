from ..utils.errors import ParameterError
from .blocks import DEFAULT_BASE_WIDTH, INPUT_SIZE
from .msednet import build_msednet
from .unet import build_unet

BUILDERS = {"unet": build_unet, "msednet": build_msednet}


def build_network(network, in_channels, base_width=DEFAULT_BASE_WIDTH, **kwargs):
    if network not in BUILDERS:
        raise ParameterError(
            f"Unknown network '{network}'. Choose one of: {', '.join(BUILDERS)}"
        )
    return BUILDERS[network](in_channels, base_width, **kwargs)
