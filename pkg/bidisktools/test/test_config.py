import os.path

import pytest
import yaml

from ..config import DEFAULTS, effective_parameters
from ..errors import ConfigError


def write_yaml(tmpdir, name, data):
    path = os.path.join(tmpdir, name)
    with open(path, "w") as f:
        yaml.safe_dump(data, f)
    return path


def test_defaults():
    params = effective_parameters()
    assert params == DEFAULTS
    assert params is not DEFAULTS


def test_job_file_and_overrides(tmpdir):
    job = write_yaml(tmpdir, "job.yaml", {"spectrum": {"grid_n": 151, "tol": 1e-8}})
    params = effective_parameters(job, {"spectrum": {"grid_n": 201}})
    assert params["spectrum"]["grid_n"] == 201
    assert params["spectrum"]["tol"] == 1e-8
    assert params["spectrum"]["radius"] == DEFAULTS["spectrum"]["radius"]
    assert DEFAULTS["spectrum"]["grid_n"] == 301


def test_includes(tmpdir):
    write_yaml(tmpdir, "base.yaml", {"quotient": {"degree": 10}, "cli": {"seed": 3}})
    job = write_yaml(tmpdir, "job.yaml", {"_include": ["base.yaml"], "cli": {"seed": 5}})
    params = effective_parameters(job)
    assert params["quotient"]["degree"] == 10
    assert params["cli"]["seed"] == 5


def test_duplicate_keys(tmpdir):
    path = os.path.join(tmpdir, "job.yaml")
    with open(path, "w") as f:
        f.write("spectrum:\n  grid_n: 11\n  grid_n: 21\n")
    with pytest.raises(ConfigError):
        effective_parameters(path)


def test_rejected_keys(tmpdir):
    for data in (
        {"spectra": {"grid_n": 11}},
        {"spectrum": {"grid": 11}},
        {"spectrum": {"grid_n": "many"}},
        {"spectrum": {"grid_n": 10.5}},
        {"poly": {"trim_tol": 1e-10}},
        {"spectrum": 3},
    ):
        job = write_yaml(tmpdir, "job.yaml", data)
        with pytest.raises(ConfigError):
            effective_parameters(job)


def test_not_a_mapping(tmpdir):
    path = os.path.join(tmpdir, "job.yaml")
    with open(path, "w") as f:
        f.write("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        effective_parameters(path)


def test_minimums(tmpdir):
    for data in (
        {"spectrum": {"grid_n": 50}},
        {"cli": {"threads": 0}},
        {"reduce": {"samples_per_component": 0}},
        {"quotient": {"degree": -1}},
    ):
        job = write_yaml(tmpdir, "job.yaml", data)
        with pytest.raises(ConfigError):
            effective_parameters(job)
    with pytest.raises(ConfigError):
        effective_parameters(None, {"cli": {"threads": 0}})
    params = effective_parameters(None, {"spectrum": {"grid_n": 101}})
    assert params["spectrum"]["grid_n"] == 101
