import os

import pytest

from tests.helpers import write_mnist_dir


def pytest_collection_modifyitems(config, items):
    if os.getenv("CHAOSKPA_RUN_SLOW") == "1":
        return
    skip_slow = pytest.mark.skip(reason="set CHAOSKPA_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def mnist_dir(tmp_path):
    directory = tmp_path / "mnist"
    directory.mkdir()
    write_mnist_dir(str(directory))
    return str(directory)
