from dataclasses import dataclass

import numpy as np

from ..cipher import ImageBytes
from ..utils.errors import UsageError


@dataclass(eq=False)
class ImageCollection:
    """
    A sequence of ImageBytes backed by one stacked (N, C, H, W) uint8 array.
    Labels are parsed for provenance only.
    """

    array: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        self.array = np.asarray(self.array, dtype=np.uint8)
        if self.array.ndim != 4:
            raise UsageError(f"Expected an (N, C, H, W) array, got shape {self.array.shape}")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.uint8)
            if len(self.labels) != len(self.array):
                raise UsageError(
                    f"{len(self.labels)} labels for {len(self.array)} images"
                )

    def __len__(self):
        return len(self.array)

    def __getitem__(self, index):
        if isinstance(index, slice):
            labels = self.labels[index] if self.labels is not None else None
            return ImageCollection(self.array[index], labels)
        return ImageBytes(self.array[index])

    def __iter__(self):
        for index in range(len(self)):
            yield self[index]

    @classmethod
    def concatenate(cls, collections):
        collections = [c for c in collections if len(c)]
        if not collections:
            return cls(np.zeros((0, 1, 0, 0), dtype=np.uint8))
        labels = None
        if all(c.labels is not None for c in collections):
            labels = np.concatenate([c.labels for c in collections])
        return cls(np.concatenate([c.array for c in collections]), labels)


def stack_images(images):
    """Stacks ImageBytes (or arrays) into one (N, C, H, W) array; shapes must agree."""
    if isinstance(images, ImageCollection):
        return images.array
    if isinstance(images, np.ndarray) and images.ndim == 4:
        return images.astype(np.uint8, copy=False)

    planes = [image.data if isinstance(image, ImageBytes) else ImageBytes(image).data for image in images]
    if not planes:
        raise UsageError("No images given")
    shapes = {plane.shape for plane in planes}
    if len({shape[0] for shape in shapes}) > 1:
        raise UsageError(
            f"Mixed channel counts in input: {sorted({shape[0] for shape in shapes})}"
        )
    if len(shapes) > 1:
        raise UsageError(f"Mixed image sizes in input: {sorted(shapes)}")
    return np.stack(planes)
