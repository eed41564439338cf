"""Binary portable graymap (P5) and pixmap (P6) files with maxval 255."""

import re

import numpy as np

from ..cipher import ImageBytes
from ..utils.errors import FormatError

_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def write_pnm(path, image):
    if not isinstance(image, ImageBytes):
        image = ImageBytes(image)
    magic = b"P5" if image.channels == 1 else b"P6"
    pixels = image.data.transpose(1, 2, 0)  # interleave channels
    with open(path, "wb") as f:
        f.write(magic + b"\n%d %d\n255\n" % (image.width, image.height))
        f.write(np.ascontiguousarray(pixels).tobytes())


def read_pnm(path):
    with open(path, "rb") as f:
        raw = f.read()

    tokens = []
    position = 0
    while len(tokens) < 4:
        match = _TOKEN.match(raw, position)
        if match is None:
            raise FormatError(f"{path}: truncated header", offset=position)
        tokens.append(match.group(1))
        position = match.end()

    magic, width, height, maxval = tokens
    if magic not in (b"P5", b"P6"):
        raise FormatError(f"{path}: unsupported magic {magic!r}, expected P5 or P6", offset=0)
    try:
        width, height, maxval = int(width), int(height), int(maxval)
    except ValueError as e:
        raise FormatError(f"{path}: malformed header") from e
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")

    channels = 1 if magic == b"P5" else 3
    position += 1  # single whitespace after maxval
    size = width * height * channels
    if len(raw) - position < size:
        raise FormatError(f"{path}: truncated pixel data", offset=len(raw))
    pixels = np.frombuffer(raw, dtype=np.uint8, count=size, offset=position)
    return ImageBytes(pixels.reshape(height, width, channels).transpose(2, 0, 1))
