import csv
import os

from ...core.train import Callback, MetricsRecord
from ...core.utils.errors import FormatError

HEADER = ["epoch", "loss_l1", "train_corr", "test_corr", "seconds"]
TIMINGS_HEADER = ["epoch", "seconds"]


def write_metrics_csv(path, records):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(HEADER)
        for record in records:
            writer.writerow(record.row())


def read_metrics_csv(path):
    with open(path, "r", newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows or rows[0] != HEADER:
        raise FormatError(f"{path} does not start with the header {','.join(HEADER)}")
    try:
        return [
            MetricsRecord(int(row[0]), *(float(value) for value in row[1:5]))
            for row in rows[1:]
            if row
        ]
    except (ValueError, IndexError) as e:
        raise FormatError(f"{path} holds a malformed metrics row: {e}") from e


class MetricsCsvWriter(Callback):
    """
    Keeps metrics.csv in step with training. The file is rewritten from the full
    history on start, so a resumed run continues the same file. Measured wall
    times also go to timings.csv.
    """

    def __init__(self, path, timings_path=None):
        self.path = path
        self.timings_path = timings_path

    def on_fit_start(self, state):
        write_metrics_csv(self.path, state.records)

    def on_epoch_end(self, state, record):
        with open(self.path, "a", newline="", encoding="utf-8") as f:
            csv.writer(f, lineterminator="\n").writerow(record.row())

    def on_fit_end(self, state):
        if self.timings_path is None or not state.timings:
            return
        exists = os.path.exists(self.timings_path)
        with open(self.timings_path, "a", newline="", encoding="utf-8") as f:
            writer = csv.writer(f, lineterminator="\n")
            if not exists:
                writer.writerow(TIMINGS_HEADER)
            for epoch, seconds in state.timings:
                writer.writerow([epoch, f"{seconds:.3f}"])
