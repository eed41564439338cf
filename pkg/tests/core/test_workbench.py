import os
import tempfile
import unittest

import numpy as np
import pytest

from chaoskpa.core.config import ExperimentConfig
from chaoskpa.core.core import Workbench
from chaoskpa.core.data import read_pnm, write_pnm
from chaoskpa.core.train import AdamState, save_checkpoint
from chaoskpa.core.utils.errors import DataMissingError, UsageError
from chaoskpa.terminal_interface.utils.metrics_csv import read_metrics_csv
from tests.helpers import noise_images, write_mnist_dir


def make_config(data_dir, output_dir, **overrides):
    settings = {
        "name": "unit",
        "dataset": "mnist",
        "network": "unet",
        "base_width": 8,
        "train": {
            "epochs": 2,
            "initial_lr": 1e-3,
            "batch_size": 8,
            "deterministic": True,
            "eval_train_samples": 20,
        },
        "checkpoint_every": 1,
        "triplets": 2,
        "paths": {"data_dir": data_dir, "output_dir": output_dir},
    }
    settings.update(overrides)
    return ExperimentConfig.model_validate(settings)


def test_end_to_end(mnist_dir, tmp_path):
    # Arrange
    output_dir = str(tmp_path / "run")
    workbench = Workbench(make_config(mnist_dir, output_dir))

    # Act
    generated = workbench.genpairs()
    trained = workbench.train()
    attacked = workbench.attack()
    audit = workbench.audit(count=10)
    curves = workbench.plot()

    # Assert
    assert len(generated.pairs) == 50
    assert len(generated.pairs.train_indices()) == 45
    assert os.path.exists(os.path.join(generated.archive, "manifest.yaml"))
    assert generated.audit.mean_abs < 0.5

    assert [record.epoch for record in trained.records] == [1, 2]
    assert read_metrics_csv(trained.metrics_path) == trained.records
    assert os.path.exists(os.path.join(output_dir, "timings.csv"))
    assert [os.path.basename(path) for path in trained.checkpoints] == ["epoch-0001.ckpt", "epoch-0002.ckpt"]

    assert attacked.report.count + attacked.report.skipped_count == 5
    assert abs(attacked.report.mean - trained.records[-1].test_corr) < 1e-6
    assert len(attacked.written) == 5
    assert all(path.endswith(".decrypted.pgm") for path in attacked.written)
    assert len(attacked.triplets) == 2
    assert os.path.exists(os.path.join(attacked.output_dir, "correlation.csv"))

    assert audit.count == 10
    assert os.path.exists(curves)


def test_deterministic_metrics_are_identical(mnist_dir, tmp_path):
    contents = []
    for run in ("a", "b"):
        workbench = Workbench(make_config(mnist_dir, str(tmp_path / run)))
        workbench.genpairs()
        result = workbench.train()
        with open(result.metrics_path, "rb") as f:
            contents.append(f.read())

    assert contents[0] == contents[1]


def test_resume_continues_the_run(mnist_dir, tmp_path):
    full = Workbench(make_config(mnist_dir, str(tmp_path / "full")))
    full.genpairs()
    uninterrupted = full.train().records

    workbench = Workbench(make_config(mnist_dir, str(tmp_path / "resumed")))
    workbench.genpairs()
    workbench.config.train.epochs = 1
    first = workbench.train()
    workbench.config.train.epochs = 2
    resumed = workbench.train(resume=first.checkpoints[-1])

    assert [record.epoch for record in resumed.records] == [1, 2]
    assert [record.epoch for record in read_metrics_csv(resumed.metrics_path)] == [1, 2]
    assert resumed.records == uninterrupted


def test_attack_on_image_files(mnist_dir, tmp_path):
    workbench = Workbench(make_config(mnist_dir, str(tmp_path / "run"), train={"epochs": 1, "deterministic": True}))
    pairs = workbench.genpairs().pairs
    workbench.train()
    path = str(tmp_path / "sample.pgm")
    write_pnm(path, pairs.ciphertext(0))

    result = workbench.attack(images=[path])

    assert result.report is None
    assert os.path.basename(result.written[0]) == "sample.decrypted.pgm"
    assert read_pnm(result.written[0]).data.shape == (1, 28, 28)


class TestWorkbenchErrors(unittest.TestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.addCleanup(self.directory.cleanup)
        self.root = self.directory.name

    def test_train_without_archive(self):
        workbench = Workbench(make_config(self.root, os.path.join(self.root, "run")))
        with self.assertRaises(DataMissingError):
            workbench.train()

    def test_attack_without_checkpoint(self):
        workbench = Workbench(make_config(self.root, os.path.join(self.root, "run")))
        with self.assertRaises(DataMissingError):
            workbench.attack()

    def test_channel_mismatch(self):
        workbench = Workbench(
            make_config(self.root, self.root, cipher={"scheme": "hybrid_rgb"})
        )
        with self.assertRaises(UsageError):
            workbench.genpairs()

    def test_archive_under_another_key(self):
        write_mnist_dir(self.root, 8, 2)
        output_dir = os.path.join(self.root, "run")
        Workbench(make_config(self.root, output_dir)).genpairs()

        other = Workbench(
            make_config(self.root, output_dir, cipher={"logistic": {"control": 3.9}})
        )
        with self.assertRaises(UsageError):
            other.train()

    def test_gradcheck(self):
        report = Workbench(make_config(self.root, self.root)).gradcheck(base_width=8)
        self.assertTrue(report.passed)
        self.assertGreater(report.checked, 0)


def test_wrong_channel_image_file(mnist_dir, tmp_path):
    workbench = Workbench(make_config(mnist_dir, str(tmp_path / "run"), train={"epochs": 1}))
    workbench.genpairs()
    workbench.train()
    path = str(tmp_path / "color.ppm")
    write_pnm(path, np.zeros((3, 28, 28), dtype=np.uint8))

    with pytest.raises(UsageError):
        workbench.attack(images=[path])


def test_untrained_checkpoint_does_not_decrypt(tmp_path):
    # Arrange
    data_dir = tmp_path / "noise"
    data_dir.mkdir()
    write_mnist_dir(str(data_dir), 160, 40, make_images=noise_images)
    workbench = Workbench(make_config(str(data_dir), str(tmp_path / "run")))
    workbench.genpairs()
    model = workbench.build_model()
    path = save_checkpoint(str(tmp_path / "fresh.ckpt"), model.eval(), AdamState(), epoch=0)

    # Act
    result = workbench.attack(checkpoint=path)

    # Assert
    assert result.report.count == 20
    assert result.report.mean < 0.3


def test_attack_reports_missing_and_mismatched_files(mnist_dir, tmp_path):
    workbench = Workbench(make_config(mnist_dir, str(tmp_path / "run"), train={"epochs": 1, "deterministic": True}))
    workbench.genpairs()
    workbench.train()
    small = str(tmp_path / "small.pgm")
    large = str(tmp_path / "large.pgm")
    write_pnm(small, np.zeros((1, 20, 20), dtype=np.uint8))
    write_pnm(large, np.zeros((1, 28, 28), dtype=np.uint8))

    with pytest.raises(DataMissingError) as missing:
        workbench.attack(images=[small, str(tmp_path / "absent.pgm")])
    with pytest.raises(UsageError):
        workbench.attack(images=[small, large])

    assert missing.value.expected_paths == [str(tmp_path / "absent.pgm")]
