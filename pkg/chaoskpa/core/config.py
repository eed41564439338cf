import os
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

from .chaos import ChaoticMapParams, MapFamily
from .cipher import CipherKey, CipherScheme
from .train import TrainConfig
from .utils.errors import UsageError
from ..terminal_interface.utils.local_storage_path import get_data_path, get_storage_path

DATASET_CHANNELS = {"mnist": 1, "cifar10": 3}
DEFAULT_SCHEMES = {"mnist": CipherScheme.SINGLE_LOGISTIC, "cifar10": CipherScheme.HYBRID_RGB}


# (control, seed) per map family
MAP_DEFAULTS = {
    MapFamily.LOGISTIC: (3.601, 0.1),
    MapFamily.SINE: (0.95, 0.154),
    MapFamily.CHEBYSHEV: (5.0, 0.165),
}


class MapSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    control: Optional[float] = None
    seed: Optional[float] = None
    burn_in: int = 1000

    def params(self, family):
        control, seed = MAP_DEFAULTS[family]
        return ChaoticMapParams(
            family=family,
            control=control if self.control is None else self.control,
            seed=seed if self.seed is None else self.seed,
            burn_in=self.burn_in,
        )


class CipherSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    scheme: Optional[CipherScheme] = None
    logistic: MapSettings = Field(default_factory=MapSettings)
    sine: MapSettings = Field(default_factory=MapSettings)
    chebyshev: MapSettings = Field(default_factory=MapSettings)

    def to_key(self):
        maps = {
            "logistic": self.logistic,
            "sine": self.sine,
            "chebyshev": self.chebyshev,
        }
        return CipherKey(
            scheme=self.scheme,
            **{
                family.value: maps[family.value].params(family)
                for family in key_families(self.scheme)
            },
        )


def key_families(scheme):
    if scheme is CipherScheme.HYBRID_RGB:
        return (MapFamily.LOGISTIC, MapFamily.SINE, MapFamily.CHEBYSHEV)
    return (MapFamily(scheme.value.removeprefix("single_")),)


class PathSettings(BaseModel):
    model_config = ConfigDict(extra="forbid")

    data_dir: Optional[str] = None
    output_dir: Optional[str] = None
    archive: Optional[str] = None


class SourceEntry(BaseModel):
    url: str
    filename: Optional[str] = None
    md5: Optional[str] = None


class ExperimentConfig(BaseModel):
    """Everything one experiment needs. Every field has a default, so an empty profile is valid."""

    model_config = ConfigDict(extra="forbid")

    version: int = 1
    name: str = "experiment"
    dataset: Literal["mnist", "cifar10"] = "mnist"
    network: Literal["unet", "msednet"] = "unet"
    base_width: int = Field(32, ge=8)
    cipher: CipherSettings = Field(default_factory=CipherSettings)
    train: TrainConfig = Field(default_factory=TrainConfig)
    pairs: Optional[int] = Field(None, ge=2)
    train_fraction: float = Field(0.9, gt=0, lt=1)
    split_seed: int = Field(0, ge=0)
    checkpoint_every: int = Field(1, ge=0)
    triplets: int = Field(4, ge=0)
    paths: PathSettings = Field(default_factory=PathSettings)
    sources: dict[str, list[SourceEntry]] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _default_scheme(self):
        if self.cipher.scheme is None:
            self.cipher.scheme = DEFAULT_SCHEMES[self.dataset]
        return self

    @property
    def channels(self):
        return DATASET_CHANNELS[self.dataset]

    def check(self):
        """Cross-field compatibility; raises UsageError."""
        key_channels = len(key_families(self.cipher.scheme))
        if key_channels != self.channels:
            raise UsageError(
                f"Dataset {self.dataset} has {self.channels}-channel images, "
                f"but scheme {self.cipher.scheme.value} encrypts {key_channels}-channel images"
            )
        return self

    def key(self):
        return self.cipher.to_key()

    def data_dir(self):
        return self.paths.data_dir or get_data_path(self.dataset)

    def output_dir(self):
        return self.paths.output_dir or os.path.join(get_storage_path("runs"), self.name)

    def archive_dir(self):
        return self.paths.archive or os.path.join(self.output_dir(), "pairs")

    def checkpoint_dir(self):
        return os.path.join(self.output_dir(), "checkpoints")

    def snapshot(self):
        return self.model_dump(mode="json")
