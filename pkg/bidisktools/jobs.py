"""
jobs.py

One entry point per command: load the input, run the analysis with the
effective parameters, and write the reports.
"""

import json
import logging
import os
import os.path
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import catalog, report
from .bundle import bundle_report, kernel_frame
from .config import effective_parameters
from .errors import InputFormatError, UnivariateFactorError
from .inner import boundary_modulus_error, inner_from_json, is_z_only
from .quotient import (
    commutant_dim_estimate,
    compress_shift,
    kernel_residual,
    quotient_basis,
    residual_bound,
    weights_table,
)
from .reduce import strict_reducibility
from .spectrum import (
    cowen_douglas_verdict,
    decompose_fredholm_regions,
    region_summary,
    trace_essential_curves,
    write_curves,
    write_region_map,
)

logger = logging.getLogger(__name__)

COMMANDS = ("analyze", "spectrum-map", "curves", "bundle", "reduce-check", "quotient-lab")


@dataclass(frozen=True)
class JobSpec:
    command: str
    input_path: str
    out_dir: str
    params: dict
    point: Optional[complex] = None


def make_job(
    command,
    input_path,
    out_dir,
    config_file=None,
    grid=None,
    tol=None,
    degree=None,
    seed=None,
    threads=None,
    point=None,
):
    """Merge defaults, the job file and explicit flags into a JobSpec."""
    if command not in COMMANDS:
        raise InputFormatError(f"unknown command {command!r}")
    overrides = {}
    for section, key, value in (
        ("spectrum", "grid_n", grid),
        ("spectrum", "tol", tol),
        ("quotient", "degree", degree),
        ("cli", "seed", seed),
        ("cli", "threads", threads),
    ):
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    params = effective_parameters(config_file, overrides)
    return JobSpec(command, input_path, out_dir, params, point)


def load_theta(job):
    with open(job.input_path, encoding="utf-8") as f:
        try:
            data = json.load(f)
        except ValueError as e:
            # JSONDecodeError and UnicodeDecodeError both derive from ValueError
            raise InputFormatError(f"{job.input_path}: unreadable JSON: {e}") from e
    inner = job.params["inner"]
    return inner_from_json(
        data, grid_n=inner["stability_grid_n"], tol=inner["stability_tol"]
    )


def _output(job, name):
    os.makedirs(job.out_dir, exist_ok=True)
    return os.path.join(job.out_dir, name)


def _region_map(theta, params):
    sp = params["spectrum"]
    return decompose_fredholm_regions(
        theta, sp["radius"], sp["grid_n"], sp["tol"], params["cli"]["threads"]
    )


def _curves(theta, params):
    sp = params["spectrum"]
    return trace_essential_curves(theta, sp["curve_steps"], sp["tol"], sp["max_refinements"])


def _reducibility(theta, region_map, params):
    rp = params["reduce"]
    try:
        result = strict_reducibility(
            theta,
            region_map,
            seed=params["cli"]["seed"],
            samples=rp["samples_per_component"],
            cross_samples=rp["cross_samples"],
            projection_samples=rp["projection_samples"],
        )
    except UnivariateFactorError as e:
        return {"verdict": None, "reason": str(e)}
    return result.to_json()


def _header(job, theta):
    return {"command": job.command, "input": theta.to_json(), "parameters": job.params}


def run_analyze(job):
    theta = load_theta(job)
    region_map = _region_map(theta, job.params)
    curves = _curves(theta, job.params)
    out = _header(job, theta)
    out.update(
        {
            "components": region_summary(region_map),
            "alpha": list(region_map.alpha()),
            "essential_curves": curves.branch_count,
            "cowen_douglas": cowen_douglas_verdict(theta, region_map),
            "reducibility": _reducibility(theta, region_map, job.params),
        }
    )
    if theta.mode == "inner":
        out["boundary_modulus_error"] = boundary_modulus_error(theta)
    path = _output(job, "analyze.json")
    report.write_json(path, out)
    return path


def run_spectrum_map(job):
    theta = load_theta(job)
    region_map = _region_map(theta, job.params)
    csv_path = _output(job, "spectrum.csv")
    pgm_path = _output(job, "spectrum.pgm")
    write_region_map(region_map, csv_path, pgm_path)
    out = _header(job, theta)
    out["components"] = region_summary(region_map)
    out["alpha"] = list(region_map.alpha())
    report.write_json(_output(job, "spectrum.json"), out)
    return csv_path, pgm_path


def run_curves(job):
    theta = load_theta(job)
    curves = _curves(theta, job.params)
    csv_path = _output(job, "curves.csv")
    write_curves(curves, csv_path)
    out = _header(job, theta)
    out["branches"] = curves.branch_count
    out["uncertain"] = sum(1 for c in curves.curves if c.uncertain)
    report.write_json(_output(job, "curves.json"), out)
    return csv_path


def _require_point(job):
    if job.point is None:
        raise InputFormatError(f"{job.command} needs --point")
    return job.point


def run_bundle(job):
    theta = load_theta(job)
    lam = _require_point(job)
    bp = job.params["bundle"]
    out = _header(job, theta)
    out["bundle"] = bundle_report(theta, lam, bp["h"], bp["max_order"])
    path = _output(job, "bundle.json")
    report.write_json(path, out)
    return path


def run_reduce_check(job):
    theta = load_theta(job)
    region_map = _region_map(theta, job.params)
    out = _header(job, theta)
    out["alpha"] = list(region_map.alpha())
    out["reducibility"] = _reducibility(theta, region_map, job.params)
    path = _output(job, "reduce.json")
    report.write_json(path, out)
    return path


def binomial_exponents(theta):
    """(m, n) when the generator is z^m - w^n up to a constant, else None."""
    c = theta.q.coeffs
    nonzero = [(a, b) for (a, b), v in np.ndenumerate(c) if abs(v) > 1e-14]
    if len(nonzero) != 2:
        return None
    (a1, b1), (a2, b2) = sorted(nonzero, key=lambda ab: ab[1])
    if b1 != 0 or a2 != 0 or a1 == 0 or b2 == 0:
        return None
    if abs(c[a1, 0] + c[0, b2]) > 1e-14 * abs(c[a1, 0]):
        return None
    return a1, b2


def run_quotient_lab(job):
    theta = load_theta(job)
    if is_z_only(theta):
        raise InputFormatError("the quotient lab needs a generator involving w")
    qp = job.params["quotient"]
    degree = qp["degree"]
    basis = quotient_basis(theta, degree)
    shift = compress_shift(basis, "z")
    out = _header(job, theta)
    out.update(
        {
            "complement_dim": basis.dim,
            "shift_norm": shift.norm,
            "max_edge_loss": float(np.max(shift.edge_loss)) if shift.edge_loss.size else 0.0,
            "commutant_dim": commutant_dim_estimate(shift, degree - qp["interior_offset"]),
        }
    )
    exponents = binomial_exponents(theta)
    if exponents is not None:
        rows, multiplicity = weights_table(*exponents, degree)
        report.write_csv(
            _output(job, "weights.csv"),
            ["N", "formula", "matrix", "abs_diff"],
            rows,
        )
        out["weighted_shift"] = {
            "m": exponents[0],
            "n": exponents[1],
            "multiplicity": multiplicity,
        }
    if job.point is not None:
        frame = kernel_frame(theta, job.point, job.params["spectrum"]["tol"])
        out["kernel_residual"] = {
            "point": job.point,
            "residual": kernel_residual(theta, job.point, frame, qp["kernel_degree"]),
            "bound": residual_bound(frame, qp["kernel_degree"]),
        }
    path = _output(job, "quotient.json")
    report.write_json(path, out)
    return path


RUNNERS = {
    "analyze": run_analyze,
    "spectrum-map": run_spectrum_map,
    "curves": run_curves,
    "bundle": run_bundle,
    "reduce-check": run_reduce_check,
    "quotient-lab": run_quotient_lab,
}


def run(job):
    logger.debug("running %s on %s into %s", job.command, job.input_path, job.out_dir)
    return RUNNERS[job.command](job)


def run_example(name, params, out_path):
    """Write the input JSON of a catalogued example."""
    theta = catalog.build(name, params)
    directory = os.path.dirname(out_path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    report.write_json(out_path, theta.to_json())
    return out_path
