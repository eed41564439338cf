import csv
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from ..utils.errors import ShapeError, UndefinedCorrelationError, UsageError

logger = logging.getLogger(__name__)

CHANNEL_MODE = "flattened"


def pearson(o, p):
    """
    Pearson correlation between two images, accumulated in float64.

    Multi-channel images are flattened across channels before the sums, so a
    (3, 32, 32) pair is treated as two vectors of 3072 values.
    """
    o = np.asarray(o)
    p = np.asarray(p)
    if o.shape != p.shape:
        raise ShapeError(f"pearson needs identical shapes, got {o.shape} and {p.shape}")

    o = o.astype(np.float64, copy=False).ravel()
    p = p.astype(np.float64, copy=False).ravel()
    if o.size == 0:
        raise ShapeError("pearson needs non-empty images")
    if np.ptp(o) == 0 or np.ptp(p) == 0:
        raise UndefinedCorrelationError(
            "Correlation is undefined for a constant image (zero variance)"
        )

    do = o - o.mean()
    dp = p - p.mean()
    corr = np.dot(do, dp) / (np.sqrt(np.dot(do, do)) * np.sqrt(np.dot(dp, dp)))
    return float(np.clip(corr, -1.0, 1.0))


@dataclass
class CorrelationReport:
    """Per-image coefficients plus aggregates over the images that were not skipped."""

    coefficients: list = field(default_factory=list)
    indices: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    channel_mode: str = CHANNEL_MODE

    @property
    def count(self):
        return len(self.coefficients)

    @property
    def skipped_count(self):
        return len(self.skipped)

    @property
    def empty(self):
        return not self.coefficients

    @property
    def mean(self):
        return float(np.mean(self.coefficients)) if self.coefficients else float("nan")

    @property
    def mean_abs(self):
        if not self.coefficients:
            return float("nan")
        return float(np.mean(np.abs(self.coefficients)))

    @property
    def max_abs(self):
        if not self.coefficients:
            return float("nan")
        return float(np.max(np.abs(self.coefficients)))

    @property
    def min(self):
        return float(np.min(self.coefficients)) if self.coefficients else float("nan")

    @property
    def max(self):
        return float(np.max(self.coefficients)) if self.coefficients else float("nan")

    def rows(self):
        """Yields (index, coefficient, skipped) ordered by index."""
        by_index = dict(zip(self.indices, self.coefficients))
        for index in sorted(set(self.indices) | set(self.skipped)):
            if index in by_index:
                yield index, by_index[index], 0
            else:
                yield index, "", 1

    def to_csv(self, path):
        with open(path, "w", newline="", encoding="utf-8") as file:
            writer = csv.writer(file)
            writer.writerow(["index", "coefficient", "skipped"])
            for index, coefficient, skipped in self.rows():
                if coefficient != "":
                    coefficient = repr(coefficient)
                writer.writerow([index, coefficient, skipped])

    def summary(self):
        return {
            "count": self.count,
            "skipped": self.skipped_count,
            "mean": self.mean,
            "min": self.min,
            "max": self.max,
            "channel_mode": self.channel_mode,
        }


def batch_correlation(outputs, targets):
    """Per-image Pearson correlation. Constant images are skipped and counted, never scored."""
    if len(outputs) != len(targets):
        raise UsageError(
            f"outputs and targets must be aligned, got {len(outputs)} and {len(targets)}"
        )

    report = CorrelationReport()
    for index, (o, p) in enumerate(zip(outputs, targets)):
        try:
            coefficient = pearson(o, p)
        except UndefinedCorrelationError:
            report.skipped.append(index)
            continue
        report.indices.append(index)
        report.coefficients.append(coefficient)

    if report.skipped:
        logger.warning(
            "Skipped %d constant image(s) out of %d", report.skipped_count, len(targets)
        )
    return report


def channel_correlation(image):
    """Pearson correlation between every pair of channels of one (C, H, W) image."""
    image = np.asarray(image)
    pairs = {}
    for a, b in itertools.combinations(range(image.shape[0]), 2):
        try:
            pairs[(a, b)] = pearson(image[a], image[b])
        except UndefinedCorrelationError:
            continue
    return pairs
