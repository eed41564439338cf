from .chaos import (
    DEFAULT_BURN_IN,
    ChaoticMapParams,
    Keystream,
    MapFamily,
    keystream,
    map_step,
    orbit,
)
