import os

import numpy as np

from .metrics_csv import read_metrics_csv


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_curves(csv_paths, output_path, labels=None):
    """Loss and test-correlation curves, one line per metrics CSV."""
    plt = _pyplot()
    labels = labels or [os.path.basename(os.path.dirname(os.path.abspath(p))) or p for p in csv_paths]

    figure, (loss_axis, corr_axis) = plt.subplots(1, 2, figsize=(11, 4))
    for path, label in zip(csv_paths, labels):
        records = read_metrics_csv(path)
        epochs = [r.epoch for r in records]
        loss_axis.plot(epochs, [r.loss_l1 for r in records], label=label)
        corr_axis.plot(epochs, [r.test_corr for r in records], label=label)

    loss_axis.set_xlabel("epoch")
    loss_axis.set_ylabel("L1 loss")
    corr_axis.set_xlabel("epoch")
    corr_axis.set_ylabel("test correlation")
    for axis in (loss_axis, corr_axis):
        axis.grid(alpha=0.3)
        axis.legend()

    figure.tight_layout()
    os.makedirs(os.path.dirname(os.path.abspath(output_path)), exist_ok=True)
    figure.savefig(output_path, dpi=120)
    plt.close(figure)
    return output_path


def _display(image):
    image = np.asarray(image)
    if image.shape[0] == 1:
        return image[0], "gray"
    return image.transpose(1, 2, 0), None


def save_triplet(path, plaintext, ciphertext, decrypted, cipher_corr, decrypted_corr):
    """Plaintext, ciphertext and decryption side by side, correlations in the titles."""
    plt = _pyplot()
    figure, axes = plt.subplots(1, 3, figsize=(7.5, 2.8))
    panels = [
        ("plaintext", plaintext),
        (f"ciphertext\ncorr {cipher_corr:.4f}", ciphertext),
        (f"decryption\ncorr {decrypted_corr:.4f}", decrypted),
    ]
    for axis, (title, image) in zip(axes, panels):
        pixels, cmap = _display(image)
        axis.imshow(pixels, cmap=cmap, vmin=0, vmax=255)
        axis.set_title(title, fontsize=9)
        axis.axis("off")
    figure.tight_layout()
    figure.savefig(path, dpi=100)
    plt.close(figure)
    return path
