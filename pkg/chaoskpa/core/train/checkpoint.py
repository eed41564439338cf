"""
Checkpoints are zip archives of `.npy` entries plus a `manifest.json`. Entries are
stored uncompressed, in sorted order, with a fixed timestamp, so saving the same
state twice yields the same bytes.
"""

import io
import json
import logging
import os
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .adam import AdamState
from ..engine import rebuild
from ..utils.errors import FormatError, StateError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
MANIFEST = "manifest.json"
FIXED_TIMESTAMP = (1980, 1, 1, 0, 0, 0)


@dataclass
class Checkpoint:
    epoch: int
    description: dict
    params: dict
    buffers: dict
    optimizer: AdamState
    dtype: str = "float32"
    config: dict = field(default_factory=dict)
    records: list = field(default_factory=list)

    def build_model(self):
        """Rebuilds the graph from its description and loads the stored arrays into it."""
        model = rebuild(self.description, dtype=np.dtype(self.dtype))
        try:
            model.load_state(self.params, self.buffers)
        except StateError as e:
            raise FormatError(f"Checkpoint arrays do not fit its own model description: {e.message}") from e
        return model


def _npy(array):
    buffer = io.BytesIO()
    np.save(buffer, np.ascontiguousarray(array), allow_pickle=False)
    return buffer.getvalue()


def _entry(name):
    info = zipfile.ZipInfo(name, date_time=FIXED_TIMESTAMP)
    info.compress_type = zipfile.ZIP_STORED
    info.external_attr = 0o644 << 16
    return info


def save_checkpoint(path, model, optimizer_state, epoch, config=None, records=()):
    arrays = {}
    for key, tensor in model.parameters().items():
        arrays[f"params/{key}.npy"] = tensor.values
    for key, buffer in model.buffers().items():
        arrays[f"buffers/{key}.npy"] = buffer
    for key, moment in optimizer_state.m.items():
        arrays[f"adam/m/{key}.npy"] = moment
    for key, moment in optimizer_state.v.items():
        arrays[f"adam/v/{key}.npy"] = moment

    manifest = {
        "format_version": FORMAT_VERSION,
        "epoch": epoch,
        "dtype": str(model.dtype),
        "model": model.describe(),
        "optimizer": {"step": optimizer_state.step},
        "config": config or {},
        "records": [record if isinstance(record, dict) else record.as_dict() for record in records],
    }

    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    partial = path + ".part"
    with zipfile.ZipFile(partial, "w", zipfile.ZIP_STORED) as archive:
        archive.writestr(
            _entry(MANIFEST), json.dumps(manifest, sort_keys=True, indent=1).encode("utf-8")
        )
        for name in sorted(arrays):
            archive.writestr(_entry(name), _npy(arrays[name]))
    os.replace(partial, path)
    logger.debug("Saved checkpoint for epoch %d to %s", epoch, path)
    return path


def load_checkpoint(path):
    if not os.path.exists(path):
        raise FormatError(f"Checkpoint {path} does not exist")
    try:
        with zipfile.ZipFile(path) as archive:
            manifest = json.loads(archive.read(MANIFEST).decode("utf-8"))
            arrays = {
                name: np.load(io.BytesIO(archive.read(name)), allow_pickle=False)
                for name in archive.namelist()
                if name.endswith(".npy")
            }
    except (zipfile.BadZipFile, KeyError, ValueError) as e:
        raise FormatError(f"{path} is not a readable checkpoint: {e}") from e

    if manifest.get("format_version") != FORMAT_VERSION:
        raise FormatError(
            f"{path} has checkpoint format {manifest.get('format_version')!r}; this build reads {FORMAT_VERSION}"
        )

    def section(prefix):
        return {
            name[len(prefix) : -len(".npy")]: values
            for name, values in arrays.items()
            if name.startswith(prefix)
        }

    return Checkpoint(
        epoch=manifest["epoch"],
        description=manifest["model"],
        params=section("params/"),
        buffers=section("buffers/"),
        optimizer=AdamState(
            step=manifest["optimizer"]["step"],
            m=section("adam/m/"),
            v=section("adam/v/"),
        ),
        dtype=manifest.get("dtype", "float32"),
        config=manifest.get("config", {}),
        records=manifest.get("records", []),
    )
