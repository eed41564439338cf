import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .adam import BETA1, BETA2, EPSILON, Adam
from ..engine import l1_loss
from ..metrics import batch_correlation
from ..nets import INPUT_SIZE
from ..utils.errors import NumericalError, ShapeError, UsageError

logger = logging.getLogger(__name__)

# Stream tags mixed into (seed, epoch) so shuffling, dropout and the
# evaluation subsample draw from independent generators.
SHUFFLE_STREAM = 0
DROPOUT_STREAM = 1
EVAL_STREAM = 2


class TrainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    initial_lr: float = Field(1e-5, gt=0)
    lr_decay_factor: float = Field(0.9, gt=0, le=1)
    lr_decay_every: int = Field(20, ge=1)
    weight_decay: float = Field(1e-4, ge=0)
    batch_size: int = Field(8, ge=1)
    epochs: int = Field(200, ge=1)
    seed: int = Field(0, ge=0)
    beta1: float = Field(BETA1, ge=0, lt=1)
    beta2: float = Field(BETA2, ge=0, lt=1)
    adam_epsilon: float = Field(EPSILON, gt=0)
    dropout_ratio: float = Field(0.5, ge=0, lt=1)
    deterministic: bool = False
    eval_train_samples: int = Field(1000, ge=1)
    eval_batch_size: int = Field(64, ge=1)


@dataclass
class MetricsRecord:
    epoch: int
    loss_l1: float
    train_corr: float
    test_corr: float
    seconds: float

    def row(self):
        return [self.epoch, self.loss_l1, self.train_corr, self.test_corr, self.seconds]

    def as_dict(self):
        return {
            "epoch": self.epoch,
            "loss_l1": self.loss_l1,
            "train_corr": self.train_corr,
            "test_corr": self.test_corr,
            "seconds": self.seconds,
        }


@dataclass
class FitState:
    """What callbacks see: the live model and optimizer plus the records so far."""

    model: object
    optimizer: Adam
    config: TrainConfig
    pairs: object
    epoch: int = 0
    records: list = field(default_factory=list)
    timings: list = field(default_factory=list)


def lr_at_epoch(config, epoch):
    if epoch < 0:
        raise UsageError(f"epoch must be >= 0, got {epoch}")
    return config.initial_lr * config.lr_decay_factor ** (epoch // config.lr_decay_every)


def epoch_order(indices, seed, epoch):
    """Shuffled training order; a pure function of (seed, epoch)."""
    rng = np.random.default_rng([seed, epoch, SHUFFLE_STREAM])
    return np.asarray(indices)[rng.permutation(len(indices))]


def batches(order, batch_size):
    for start in range(0, len(order), batch_size):
        yield order[start : start + batch_size]


def to_network_input(images, size=INPUT_SIZE, dtype=np.float32):
    """uint8 (N, C, H, W) -> reals in [0, 1], zero-padded symmetrically up to size x size."""
    x = np.asarray(images, dtype=dtype) / dtype(255)
    height, width = x.shape[2:]
    if height > size or width > size:
        raise UsageError(f"Images of {height}x{width} exceed the {size}x{size} network input")
    top, left = (size - height) // 2, (size - width) // 2
    if top or left or height != size or width != size:
        x = np.pad(x, ((0, 0), (0, 0), (top, size - height - top), (left, size - width - left)))
    return x


def crop_window(height, width, size=INPUT_SIZE):
    top, left = (size - height) // 2, (size - width) // 2
    return slice(top, top + height), slice(left, left + width)


def reconstruct(model, ciphertexts, batch_size=64):
    """Eval-mode decryption of uint8 ciphertexts; returns float outputs cropped to the image size."""
    height, width = ciphertexts.shape[2:]
    rows, cols = crop_window(height, width)
    model.eval()
    outputs = []
    for start in range(0, len(ciphertexts), batch_size):
        out = model.forward(to_network_input(ciphertexts[start : start + batch_size], dtype=model.dtype.type))
        outputs.append(out[:, :, rows, cols])
    if not outputs:
        return np.zeros((0, *ciphertexts.shape[1:]), dtype=model.dtype)
    return np.concatenate(outputs)


def evaluate(model, pairs, indices, batch_size=64):
    """Mean Pearson correlation between reconstructions and plaintexts over `indices`."""
    outputs = reconstruct(model, pairs.ciphertexts[indices], batch_size)
    return batch_correlation(list(outputs), list(pairs.plaintexts[indices]))


def eval_subsample(train_indices, config):
    count = min(config.eval_train_samples, len(train_indices))
    rng = np.random.default_rng([config.seed, EVAL_STREAM])
    return np.sort(rng.choice(train_indices, size=count, replace=False))


def train_epoch(model, optimizer, pairs, indices, config, epoch):
    """One pass over `indices` in (seed, epoch) order; returns the mean L1 loss."""
    lr = lr_at_epoch(config, epoch)
    model.train()
    model.reseed_dropout([config.seed, epoch, DROPOUT_STREAM])

    height, width = pairs.image_shape[1:]
    rows, cols = crop_window(height, width)
    total = 0.0
    for step, batch in enumerate(batches(epoch_order(indices, config.seed, epoch), config.batch_size)):
        x = to_network_input(pairs.ciphertexts[batch], dtype=model.dtype.type)
        target = np.asarray(pairs.plaintexts[batch], dtype=model.dtype) / model.dtype.type(255)

        out = model.forward(x)
        loss, grad = l1_loss(out[:, :, rows, cols], target)
        if not math.isfinite(loss):
            raise NumericalError(
                f"Non-finite loss at epoch {epoch + 1}, step {step + 1}",
                record=MetricsRecord(epoch + 1, loss, math.nan, math.nan, 0.0),
            )

        dout = np.zeros_like(out)
        dout[:, :, rows, cols] = grad
        model.zero_grad()
        model.backward(dout)
        optimizer.step(lr)
        total += loss * len(batch)

    return total / len(indices)


def fit(model, pairs, config, callbacks=(), optimizer=None, start_epoch=0, records=None):
    """
    Trains `model` on the training split of `pairs` (ciphertext in, plaintext out)
    from `start_epoch` up to `config.epochs`, evaluating both splits after every
    epoch. Returns the FitState holding the model, optimizer and all records.
    """
    train_indices = pairs.train_indices()
    test_indices = pairs.test_indices()
    if not len(train_indices) or not len(test_indices):
        raise UsageError(
            f"fit needs a non-empty train and test split, got {len(train_indices)}/{len(test_indices)}"
        )
    try:
        model.infer_shapes((config.batch_size, pairs.image_shape[0], INPUT_SIZE, INPUT_SIZE))
    except ShapeError as e:
        raise UsageError(f"Model does not accept the pairs: {e.message}") from e

    if optimizer is None:
        optimizer = Adam(
            model,
            weight_decay=config.weight_decay,
            beta1=config.beta1,
            beta2=config.beta2,
            epsilon=config.adam_epsilon,
        )
    state = FitState(model, optimizer, config, pairs, start_epoch, list(records or []))
    subsample = eval_subsample(train_indices, config)

    for callback in callbacks:
        callback.on_fit_start(state)

    for epoch in range(start_epoch, config.epochs):
        started = time.perf_counter()
        loss = train_epoch(model, optimizer, pairs, train_indices, config, epoch)
        train_report = evaluate(model, pairs, subsample, config.eval_batch_size)
        test_report = evaluate(model, pairs, test_indices, config.eval_batch_size)
        seconds = time.perf_counter() - started
        # Deterministic runs keep wall time out of the records so they compare equal.
        record = MetricsRecord(
            epoch=epoch + 1,
            loss_l1=loss,
            train_corr=train_report.mean,
            test_corr=test_report.mean,
            seconds=0.0 if config.deterministic else seconds,
        )
        state.timings.append((epoch + 1, seconds))
        state.epoch = epoch + 1
        state.records.append(record)
        logger.info(
            "Epoch %d/%d: loss %.5f, train corr %.5f, test corr %.5f (%.1fs)",
            record.epoch,
            config.epochs,
            record.loss_l1,
            record.train_corr,
            record.test_corr,
            seconds,
        )
        for callback in callbacks:
            callback.on_epoch_end(state, record)

    for callback in callbacks:
        callback.on_fit_end(state)
    return state
