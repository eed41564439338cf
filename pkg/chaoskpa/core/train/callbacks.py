import logging
import os

from .checkpoint import save_checkpoint

logger = logging.getLogger(__name__)


class Callback:
    """Hooks called by fit(). Subclasses override what they need."""

    def on_fit_start(self, state):
        pass

    def on_epoch_end(self, state, record):
        pass

    def on_fit_end(self, state):
        pass


class CheckpointCallback(Callback):
    """
    Saves `epoch-NNNN.ckpt` every `every` epochs and always after the last one,
    and keeps `last.ckpt` pointing at the newest state. every=0 saves only at the end.
    """

    def __init__(self, directory, every=1, config=None):
        self.directory = directory
        self.every = every
        self.config = config
        self.saved = []

    def path_for(self, epoch):
        return os.path.join(self.directory, f"epoch-{epoch:04d}.ckpt")

    @property
    def last_path(self):
        return os.path.join(self.directory, "last.ckpt")

    def save(self, state):
        path = save_checkpoint(
            self.path_for(state.epoch),
            state.model,
            state.optimizer.state,
            state.epoch,
            self.config,
            state.records,
        )
        save_checkpoint(
            self.last_path,
            state.model,
            state.optimizer.state,
            state.epoch,
            self.config,
            state.records,
        )
        self.saved.append(path)
        logger.info("Checkpoint written to %s", path)

    def on_epoch_end(self, state, record):
        if self.every and record.epoch % self.every == 0:
            self.save(state)

    def on_fit_end(self, state):
        if state.records and (not self.saved or self.saved[-1] != self.path_for(state.epoch)):
            self.save(state)
