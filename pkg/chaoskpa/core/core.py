"""
This file defines the Workbench class.
It's the main file. `from chaoskpa import workbench` will import an instance of this class.
"""

import contextlib
import logging
import os
from dataclasses import dataclass

import numpy as np

from ..terminal_interface.utils.metrics_csv import MetricsCsvWriter
from ..terminal_interface.utils.plots import plot_curves, save_triplet
from .cipher import correlation_audit
from .config import ExperimentConfig
from .data import (
    fetch,
    load_cifar10_dir,
    load_mnist_dir,
    make_pairs,
    read_archive,
    read_pnm,
    split,
    write_archive,
    write_pnm,
)
from .engine import grad_check
from .metrics import batch_correlation, pearson
from .nets import INPUT_SIZE, build_network
from .train import (
    Adam,
    CheckpointCallback,
    MetricsRecord,
    fit,
    load_checkpoint,
    reconstruct,
)
from .utils.errors import (
    DataMissingError,
    NumericalError,
    ShapeError,
    UndefinedCorrelationError,
    UsageError,
)

try:
    from yaspin import yaspin
except ImportError:
    yaspin = None

logger = logging.getLogger(__name__)

LOADERS = {"mnist": load_mnist_dir, "cifar10": load_cifar10_dir}
AUDIT_SAMPLES = 1000


@dataclass
class GenPairsResult:
    pairs: object
    archive: str
    audit: object


@dataclass
class TrainResult:
    records: list
    timings: list
    metrics_path: str
    checkpoints: list


@dataclass
class AttackResult:
    report: object
    output_dir: str
    written: list
    triplets: list


class Workbench:
    """
    This class (one instance is called a `workbench`) is the "grand central station" of this project.

    Its responsibilities are to:

    1. Turn a dataset into plaintext-ciphertext pairs under one chaotic key and archive them.
    2. Train a decryption network on the archived pairs, writing metrics and checkpoints.
    3. Attack held-out ciphertexts with a trained checkpoint and score the reconstructions.
    4. Verify the engine's gradients and audit the cipher's statistics.

    Every operation reads `self.config` and returns its results; printing is left to the caller.
    """

    def __init__(self, config=None, checkpoint=None, show_progress=False):
        self.config = config or ExperimentConfig()
        self.checkpoint = checkpoint
        self.show_progress = show_progress

    def spinner(self, text):
        if self.show_progress and yaspin is not None:
            return yaspin(text=f"  {text}").green.right.binary
        return contextlib.nullcontext()

    # Data

    def load_images(self, limit=None):
        config = self.config
        with self.spinner(f"Loading {config.dataset}..."):
            images = LOADERS[config.dataset](config.data_dir())
        limit = limit or config.pairs
        if limit is not None:
            images = images[:limit]
        logger.info("Loaded %d %s images", len(images), config.dataset)
        return images

    def genpairs(self):
        config = self.config.check()
        key = config.key()
        images = self.load_images()
        with self.spinner("Encrypting..."):
            pairs = split(make_pairs(images, key), config.train_fraction, config.split_seed)
        archive = write_archive(pairs, config.archive_dir(), dataset=config.dataset)
        audit = correlation_audit(key, list(pairs.plaintexts[:AUDIT_SAMPLES]))
        return GenPairsResult(pairs, archive, audit)

    def load_pairs(self):
        config = self.config.check()
        pairs = read_archive(config.archive_dir())
        if pairs.key != config.key():
            raise UsageError(
                f"The pair archive at {config.archive_dir()} was made under a different key "
                f"({pairs.key.as_dict()}) than the config ({config.key().as_dict()}). "
                "Regenerate it with `chaoskpa genpairs` or fix the profile."
            )
        pairs.verify(fraction=0.01, seed=config.split_seed)
        if not pairs.is_split:
            pairs = split(pairs, config.train_fraction, config.split_seed)
        return pairs

    # Models

    def build_model(self, network=None, base_width=None, seed=None):
        config = self.config
        return build_network(
            network or config.network,
            config.channels,
            base_width or config.base_width,
            dropout_ratio=config.train.dropout_ratio,
            seed=config.train.seed if seed is None else seed,
        )

    def load_model(self, checkpoint=None):
        path = checkpoint or self.checkpoint or os.path.join(self.config.checkpoint_dir(), "last.ckpt")
        if not os.path.exists(path):
            raise DataMissingError("No checkpoint to load. Train first or pass --checkpoint.", [path])
        return load_checkpoint(path)

    # Operations

    def train(self, resume=None):
        config = self.config.check()
        train_config = config.train
        pairs = self.load_pairs()

        start_epoch = 0
        records = []
        if resume is not None:
            checkpoint = load_checkpoint(resume)
            stored_key = checkpoint.config.get("cipher")
            if stored_key is not None and stored_key != config.snapshot()["cipher"]:
                raise UsageError(f"Checkpoint {resume} was trained under a different key")
            model = checkpoint.build_model()
            optimizer = Adam(
                model,
                weight_decay=train_config.weight_decay,
                beta1=train_config.beta1,
                beta2=train_config.beta2,
                epsilon=train_config.adam_epsilon,
                state=checkpoint.optimizer,
            )
            start_epoch = checkpoint.epoch
            records = [MetricsRecord(**record) for record in checkpoint.records]
            logger.info("Resuming from %s at epoch %d", resume, start_epoch)
        else:
            model = self.build_model()
            optimizer = None

        output_dir = config.output_dir()
        metrics_path = os.path.join(output_dir, "metrics.csv")
        checkpoints = CheckpointCallback(
            config.checkpoint_dir(), config.checkpoint_every, config.snapshot()
        )
        csv_writer = MetricsCsvWriter(metrics_path, os.path.join(output_dir, "timings.csv"))

        state = fit(
            model,
            pairs,
            train_config,
            callbacks=[csv_writer, checkpoints],
            optimizer=optimizer,
            start_epoch=start_epoch,
            records=records,
        )
        return TrainResult(state.records, state.timings, metrics_path, checkpoints.saved)

    def attack(self, checkpoint=None, images=None):
        """
        Decrypts ciphertexts with a trained checkpoint. With `images` (paths of PGM/PPM
        ciphertexts) only the reconstructions are written; otherwise the archive's test
        split is attacked and scored against its plaintexts.
        """
        model = self.load_model(checkpoint).build_model()
        output_dir = os.path.join(self.config.output_dir(), "attack")
        os.makedirs(output_dir, exist_ok=True)
        extension = ".pgm" if model.in_channels == 1 else ".ppm"

        if images:
            ciphertexts = read_ciphertext_files(images)
            names = [os.path.splitext(os.path.basename(path))[0] for path in images]
            plaintexts = None
        else:
            pairs = self.load_pairs()
            indices = pairs.test_indices()
            ciphertexts = pairs.ciphertexts[indices]
            plaintexts = pairs.plaintexts[indices]
            names = [f"{int(index):05d}" for index in indices]

        if ciphertexts.shape[1] != model.in_channels or max(ciphertexts.shape[2:]) > INPUT_SIZE:
            raise UsageError(
                f"The checkpoint expects {model.in_channels}-channel images up to {INPUT_SIZE}x{INPUT_SIZE}, "
                f"got {ciphertexts.shape[1]}-channel {ciphertexts.shape[2]}x{ciphertexts.shape[3]}"
            )
        try:
            outputs = reconstruct(model, ciphertexts)
        except ShapeError as e:
            raise UsageError(e.message) from e

        decrypted = np.clip(np.rint(outputs.astype(np.float64) * 255), 0, 255).astype(np.uint8)
        written = []
        for name, image in zip(names, decrypted):
            path = os.path.join(output_dir, f"{name}.decrypted{extension}")
            write_pnm(path, image)
            written.append(path)

        if plaintexts is None:
            return AttackResult(None, output_dir, written, [])

        report = batch_correlation(list(outputs), list(plaintexts))
        report.to_csv(os.path.join(output_dir, "correlation.csv"))

        triplets = []
        rng = np.random.default_rng(self.config.train.seed)
        count = min(self.config.triplets, len(names))
        for position in np.sort(rng.choice(len(names), size=count, replace=False)):
            path = os.path.join(output_dir, f"{names[position]}.triplet.png")
            triplets.append(
                save_triplet(
                    path,
                    plaintexts[position],
                    ciphertexts[position],
                    decrypted[position],
                    _safe_pearson(ciphertexts[position], plaintexts[position]),
                    _safe_pearson(outputs[position], plaintexts[position]),
                )
            )
        logger.info("Attack: mean correlation %.5f over %d images", report.mean, report.count)
        return AttackResult(report, output_dir, written, triplets)

    def gradcheck(self, network=None, base_width=8, seed=None, tolerance=1e-3, batch=2):
        seed = self.config.train.seed if seed is None else seed
        model = self.build_model(network, base_width, seed)
        x = np.random.default_rng(seed).random((batch, self.config.channels, INPUT_SIZE, INPUT_SIZE))
        report = grad_check(model, x, tolerance=tolerance, seed=seed)
        if not report.passed:
            raise NumericalError(
                f"Gradient check failed for {model.name}: max relative error "
                f"{report.max_relative_error:.3g} at {report.worst} (tolerance {tolerance:g})",
                record=report,
            )
        return report

    def audit(self, count=AUDIT_SAMPLES):
        config = self.config.check()
        images = self.load_images(limit=count)
        return correlation_audit(config.key(), list(images))

    def plot(self, csv_paths=None, output_path=None, labels=None):
        output_dir = self.config.output_dir()
        csv_paths = csv_paths or [os.path.join(output_dir, "metrics.csv")]
        for path in csv_paths:
            if not os.path.exists(path):
                raise DataMissingError("Metrics CSV not found. Train first.", [path])
        return plot_curves(csv_paths, output_path or os.path.join(output_dir, "curves.png"), labels)

    def fetch(self):
        config = self.config
        sources = [source.model_dump() for source in config.sources.get(config.dataset, [])]
        with self.spinner(f"Downloading {config.dataset}..."):
            return fetch(sources, config.data_dir())


def read_ciphertext_files(paths):
    missing = [path for path in paths if not os.path.exists(path)]
    if missing:
        raise DataMissingError("Ciphertext image not found.", missing)
    images = [read_pnm(path).data for path in paths]
    shapes = {image.shape for image in images}
    if len(shapes) > 1:
        listing = ", ".join(f"{os.path.basename(path)} {image.shape}" for path, image in zip(paths, images))
        raise UsageError(f"Ciphertext images must share one size to be attacked together; got {listing}")
    return np.stack(images)


def _safe_pearson(a, b):
    try:
        return pearson(a, b)
    except UndefinedCorrelationError:
        return float("nan")
