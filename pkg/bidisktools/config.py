"""
config.py

Numeric defaults for every analysis, and loading of YAML job files that
override them.
"""

import copy
import logging
import os.path

import yaml

from .errors import ConfigError

logger = logging.getLogger(__name__)

DEFAULTS = {
    "poly": {
        "cluster_tol": 1e-7,
        "trim_tol": 1e-13,
        "newton_steps": 3,
    },
    "inner": {
        "stability_grid_n": 720,
        "stability_tol": 1e-9,
        "interior_angles": 64,
        "factor_tol": 1e-10,
    },
    "spectrum": {
        "tol": 1e-6,
        "grid_n": 301,
        "radius": 1.1,
        "curve_steps": 1024,
        "max_refinements": 4,
        "thin_cells": 4,
    },
    "bundle": {
        "h": 1e-4,
        "series_degree": 200,
        "max_order": 2,
        "jet_samples": 32,
        "jet_radius": 0.05,
        "hermitian_tol": 1e-6,
    },
    "reduce": {
        "max_order": 2,
        "product_length": 3,
        "rank_tol": 1e-8,
        "samples_per_component": 3,
        "projection_samples": 8,
        "cross_samples": 25,
        "orthogonality_tol": 1e-8,
        "degree2_tol": 1e-12,
    },
    "quotient": {
        "degree": 14,
        "kernel_degree": 40,
        "interior_offset": 4,
        "weight_tol": 1e-9,
    },
    "cli": {
        "threads": 1,
        "seed": 0,
    },
}


# Keys a job may override. The rest are read once at import as module
# constants and stay fixed for the process.
JOB_KEYS = {
    "inner": {"stability_grid_n", "stability_tol"},
    "spectrum": {"tol", "grid_n", "radius", "curve_steps", "max_refinements"},
    "bundle": {"h", "max_order"},
    "reduce": {"samples_per_component", "projection_samples", "cross_samples"},
    "quotient": {"degree", "kernel_degree", "interior_offset"},
    "cli": {"threads", "seed"},
}

# Lower bounds on job keys; the analyses refuse smaller values.
MINIMUMS = {
    ("spectrum", "grid_n"): 101,
    ("spectrum", "curve_steps"): 64,
    ("spectrum", "max_refinements"): 0,
    ("bundle", "max_order"): 0,
    ("reduce", "samples_per_component"): 1,
    ("reduce", "projection_samples"): 1,
    ("reduce", "cross_samples"): 1,
    ("quotient", "degree"): 1,
    ("quotient", "kernel_degree"): 1,
    ("quotient", "interior_offset"): 1,
    ("cli", "threads"): 1,
    ("cli", "seed"): 0,
}


def setting(section, key):
    return DEFAULTS[section][key]


# Job files are read with a private loader whose mappings refuse duplicate
# keys, so a typo'd override cannot silently shadow another.
class JobLoader(yaml.SafeLoader):
    pass


def dict_constructor(loader, node, deep=False):
    seen = set()
    for key_node, _ in node.value:
        key = loader.construct_object(key_node, deep=deep)
        if key in seen:
            raise ConfigError(f"duplicate key '{key}' found {node.start_mark}")
        seen.add(key)
    return dict(loader.construct_pairs(node, deep=deep))


JobLoader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG, dict_constructor
)


def abspath(frompath, relpath):
    """Gets the absolute path of relpath from the point of view of frompath."""
    basepath = os.path.realpath(os.path.join(os.path.abspath(frompath), os.pardir))
    return os.path.normpath(os.path.join(basepath, relpath))


def update_dict(parent, child):
    """
    Recursively merge child.key into parent.key, with parent overriding.
    """
    for key in child:
        if key == "_path" or key == "_include":
            continue
        elif key in parent:
            if isinstance(parent[key], dict) and isinstance(child[key], dict):
                update_dict(parent[key], child[key])
        else:
            parent[key] = child[key]


def load_yaml(path):
    with open(path, encoding="utf-8") as f:
        try:
            data = yaml.load(f, Loader=JobLoader)
        except yaml.YAMLError as e:
            raise ConfigError(f"{path}: {e}") from e
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    data["_path"] = path
    return data


def yaml_includes(parent):
    """Recursively loads any included YAML files."""
    included = []
    for relpath in parent.get("_include", []):
        path = abspath(parent["_path"], relpath)
        if path in included:
            continue
        child = load_yaml(path)
        included.append(path)
        included += yaml_includes(child)
        update_dict(parent, child)
    return included


def check_overrides(overrides, source):
    for section, values in overrides.items():
        if section.startswith("_"):
            continue
        if section not in DEFAULTS:
            raise ConfigError(f"{source}: unknown section '{section}'")
        if not isinstance(values, dict):
            raise ConfigError(f"{source}: section '{section}' must be a mapping")
        for key, value in values.items():
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{source}: unknown key '{section}.{key}'")
            if key not in JOB_KEYS.get(section, ()):
                raise ConfigError(f"{source}: '{section}.{key}' cannot be set per job")
            default = DEFAULTS[section][key]
            if isinstance(default, bool) or not isinstance(value, (int, float)):
                raise ConfigError(
                    f"{source}: '{section}.{key}' must be numeric, got {value!r}"
                )
            if isinstance(default, int) and not isinstance(default, bool):
                if int(value) != value:
                    raise ConfigError(
                        f"{source}: '{section}.{key}' must be an integer, got {value!r}"
                    )
            minimum = MINIMUMS.get((section, key))
            if minimum is not None and value < minimum:
                raise ConfigError(
                    f"{source}: '{section}.{key}' must be at least {minimum}, got {value!r}"
                )


def load_job_file(path):
    """Load a YAML job file and everything it includes."""
    root = load_yaml(path)
    included = yaml_includes(root)
    logger.debug("loaded job file %s with includes %s", path, included)
    check_overrides(root, path)
    return {k: v for k, v in root.items() if not k.startswith("_")}


def effective_parameters(job_file=None, overrides=None):
    """
    Defaults, then the job file, then explicit overrides, as one nested dict.
    """
    params = copy.deepcopy(DEFAULTS)
    layers = []
    if job_file is not None:
        layers.append((load_job_file(job_file), job_file))
    if overrides:
        check_overrides(overrides, "command line")
        layers.append((overrides, "command line"))
    for layer, _ in layers:
        for section, values in layer.items():
            for key, value in values.items():
                if isinstance(DEFAULTS[section][key], int):
                    value = int(value)
                params[section][key] = value
    return params
