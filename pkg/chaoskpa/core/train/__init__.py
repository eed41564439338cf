from .adam import Adam, AdamState, adam_step
from .callbacks import Callback, CheckpointCallback
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .trainer import (
    FitState,
    MetricsRecord,
    TrainConfig,
    epoch_order,
    evaluate,
    fit,
    lr_at_epoch,
    reconstruct,
    to_network_input,
)
