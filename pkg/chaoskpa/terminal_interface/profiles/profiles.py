import glob
import os

import yaml
from pydantic import ValidationError

from ...core.config import ExperimentConfig
from ...core.utils.errors import FormatError, ParameterError, UsageError
from ..utils.local_storage_path import get_storage_path

profile_dir = get_storage_path("profiles")

here = os.path.abspath(os.path.dirname(__file__))
default_profiles_path = os.path.join(here, "defaults")
default_profiles_paths = sorted(glob.glob(os.path.join(default_profiles_path, "*.yaml")))
default_profiles_names = [os.path.basename(path) for path in default_profiles_paths]

# Bump together with the `version:` line of every bundled profile.
PROFILE_VERSION = 1


def profile(workbench, name_or_path):
    """Loads a profile by path, bundled name or user-profile name and applies it to the workbench."""
    profile_path = resolve_profile_path(name_or_path)
    return apply_profile(workbench, get_profile(profile_path), profile_path)


def resolve_profile_path(name_or_path):
    if os.path.isfile(name_or_path):
        return name_or_path

    # Shorthand for a bundled or user profile: the extension is optional
    filename = name_or_path if name_or_path.endswith((".yaml", ".yml")) else name_or_path + ".yaml"

    user_path = os.path.join(profile_dir, filename)
    if os.path.isfile(user_path):
        return user_path
    if filename in default_profiles_names:
        return os.path.join(default_profiles_path, filename)

    raise UsageError(
        f"Profile '{name_or_path}' not found. Bundled profiles: "
        + ", ".join(os.path.splitext(name)[0] for name in default_profiles_names)
    )


def get_profile(profile_path):
    with open(profile_path, "r", encoding="utf-8") as file:
        try:
            profile = yaml.safe_load(file)
        except yaml.YAMLError as e:
            raise FormatError(f"{profile_path} is not valid YAML: {e}") from e
    if profile is None:
        return {}
    if not isinstance(profile, dict):
        raise FormatError(f"{profile_path} must hold a mapping of settings")
    return profile


def apply_profile(workbench, profile, profile_path="<profile>"):
    version = profile.get("version", PROFILE_VERSION)
    if version != PROFILE_VERSION:
        raise UsageError(
            f"{profile_path} has profile version {version!r}; this build reads version {PROFILE_VERSION}"
        )
    workbench.config = build_config(profile, profile_path)
    return workbench


def build_config(settings, source="<profile>"):
    try:
        return ExperimentConfig.model_validate(settings)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(part) for part in error['loc'])}: {error['msg']}"
            for error in e.errors()
        )
        raise ParameterError(f"Invalid settings in {source}: {problems}") from e


def apply_overrides(workbench, overrides):
    """
    Applies dotted-key overrides (`{"train.epochs": 5}`) on top of the current config.
    Keys with a None value are ignored.
    """
    settings = workbench.config.model_dump(mode="json")
    for dotted, value in overrides.items():
        if value is None:
            continue
        target = settings
        *parents, leaf = dotted.split(".")
        for part in parents:
            target = target.setdefault(part, {})
        target[leaf] = value
    workbench.config = build_config(settings, "command-line flags")
    return workbench
