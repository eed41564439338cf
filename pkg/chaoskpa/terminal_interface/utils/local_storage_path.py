import os

import platformdirs

# Using platformdirs to determine user-specific config and data paths
config_dir = platformdirs.user_config_dir("chaos-kpa")
data_dir = platformdirs.user_data_dir("chaos-kpa")


def get_storage_path(subdirectory=None):
    if subdirectory is None:
        return config_dir
    else:
        return os.path.join(config_dir, subdirectory)


def get_data_path(subdirectory=None):
    root = os.getenv("CHAOSKPA_DATA_DIR") or os.path.join(data_dir, "datasets")
    if subdirectory is None:
        return root
    return os.path.join(root, subdirectory)
