"""
Optional download helper. Mirrors are listed in the profile, never hardcoded here;
files are checked against their MD5 when a checksum is configured.
"""

import gzip
import hashlib
import logging
import os
import shutil
import tarfile

import requests

from ..utils.errors import FormatError, KpaError

logger = logging.getLogger(__name__)

CHUNK_SIZE = 1 << 20


def md5sum(path):
    digest = hashlib.md5()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(CHUNK_SIZE), b""):
            digest.update(chunk)
    return digest.hexdigest()


def download(url, destination, md5=None, timeout=60):
    if os.path.exists(destination) and md5 and md5sum(destination) == md5:
        logger.info("%s already present", destination)
        return destination

    os.makedirs(os.path.dirname(destination) or ".", exist_ok=True)
    partial = destination + ".part"
    try:
        with requests.get(url, stream=True, timeout=timeout) as response:
            response.raise_for_status()
            with open(partial, "wb") as f:
                for chunk in response.iter_content(chunk_size=CHUNK_SIZE):
                    f.write(chunk)
    except requests.RequestException as e:
        raise KpaError(f"Download of {url} failed: {e}") from e
    os.replace(partial, destination)

    if md5 is None:
        logger.warning("No checksum configured for %s; skipping verification", url)
    elif md5sum(destination) != md5:
        raise FormatError(f"{destination} does not match the expected MD5 {md5}")
    return destination


def unpack(path, directory):
    """Unpacks .tar.gz / .tgz / .tar archives and bare .gz files next to the download."""
    if path.endswith((".tar.gz", ".tgz", ".tar")):
        with tarfile.open(path) as archive:
            if hasattr(tarfile, "data_filter"):
                archive.extractall(directory, filter="data")
            else:
                archive.extractall(directory)
        return directory
    if path.endswith(".gz"):
        target = path[: -len(".gz")]
        with gzip.open(path, "rb") as source, open(target, "wb") as sink:
            shutil.copyfileobj(source, sink)
        return target
    return path


def fetch(sources, data_dir, timeout=60):
    """Downloads and unpacks every {url, filename?, md5?} entry of `sources` into data_dir."""
    if not sources:
        raise KpaError(
            "No download mirrors configured. Add a `sources` list to the profile."
        )
    fetched = []
    for source in sources:
        url = source["url"]
        filename = source.get("filename") or url.rstrip("/").rsplit("/", 1)[-1]
        path = download(url, os.path.join(data_dir, filename), source.get("md5"), timeout)
        fetched.append(unpack(path, data_dir))
    return fetched
