import functools
import logging

import click

import bidisktools

from .errors import BidiskError, ConfigError, InputFormatError


class ParseFailure(click.ClickException):
    exit_code = 2


class ValidationFailure(click.ClickException):
    exit_code = 3


class OutputFailure(click.ClickException):
    exit_code = 4


def guarded(fn):
    """Map library errors onto the exit codes of the command line."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (InputFormatError, ConfigError) as e:
            raise ParseFailure(str(e)) from e
        except BidiskError as e:
            raise ValidationFailure(str(e)) from e
        except OSError as e:
            raise OutputFailure(str(e)) from e

    return wrapper


class ComplexParam(click.ParamType):
    name = "complex"

    def convert(self, value, param, ctx):
        if isinstance(value, complex):
            return value
        text = str(value).replace(" ", "")
        try:
            if "," in text:
                re, im = text.split(",")
                return complex(float(re), float(im))
            return complex(text)
        except ValueError:
            self.fail(f"{value!r} is not a complex number such as 0.5+0.1j", param, ctx)


COMPLEX = ComplexParam()


def job_options(fn):
    options = [
        click.option("--input", "input_path", required=True, help="Input JSON file"),
        click.option("--out", "out_dir", default=".", show_default=True, help="Output directory"),
        click.option("--config", "config_file", default=None, help="YAML job file"),
        click.option("--grid", type=int, default=None, help="Grid points per axis"),
        click.option("--tol", type=float, default=None, help="Spectral tolerance"),
        click.option("--degree", type=int, default=None, help="Truncation degree"),
        click.option("--seed", type=int, default=None, help="Seed for random sampling"),
        click.option(
            "--threads",
            type=int,
            default=None,
            envvar="BIDISK_THREADS",
            help="Worker processes for grid classification",
        ),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def run_command(command, point=None, **options):
    job = bidisktools.jobs.make_job(command, point=point, **options)
    return bidisktools.jobs.run(job)


@click.group()
@click.version_option(bidisktools.__version__, prog_name="bidisk")
@click.option("-v", "--verbose", is_flag=True, help="Log progress at DEBUG level")
def bidisk_cli(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING)


@click.command()
@job_options
@guarded
def analyze(**options):
    """Spectrum, index vector, Cowen-Douglas and reducibility verdicts."""
    click.echo(run_command("analyze", **options))


@click.command("spectrum-map")
@job_options
@guarded
def spectrum_map(**options):
    """Classify a grid of points and write CSV and PGM maps."""
    for path in run_command("spectrum-map", **options):
        click.echo(path)


@click.command()
@job_options
@guarded
def curves(**options):
    """Trace the essential spectrum inside the disk."""
    click.echo(run_command("curves", **options))


@click.command()
@job_options
@click.option("--point", type=COMPLEX, required=True, help="Point lambda, e.g. 0.5+0.1j")
@guarded
def bundle(point, **options):
    """Kernel frame, Gram matrix, connection and curvature at a point."""
    click.echo(run_command("bundle", point=point, **options))


@click.command("reduce-check")
@job_options
@guarded
def reduce_check(**options):
    """Decide reducibility of S_z."""
    click.echo(run_command("reduce-check", **options))


@click.command("quotient-lab")
@job_options
@click.option("--point", type=COMPLEX, default=None, help="Point for the kernel residual")
@guarded
def quotient_lab(point, **options):
    """Truncated compressed shift: weights, commutant and kernel residual."""
    click.echo(run_command("quotient-lab", point=point, **options))


@click.command()
@click.argument("name")
@click.option("--param", "params", multiple=True, help="Family parameter as key=value")
@click.option("--out", "out_path", required=True, help="Output JSON file")
@guarded
def example(name, params, out_path):
    """Write the input JSON of a catalogued example."""
    click.echo(bidisktools.jobs.run_example(name, params, out_path))


@click.command()
def version():
    """Version of bidisktools library and tool."""
    print(bidisktools.__version__)


bidisk_cli.add_command(analyze)
bidisk_cli.add_command(spectrum_map)
bidisk_cli.add_command(curves)
bidisk_cli.add_command(bundle)
bidisk_cli.add_command(reduce_check)
bidisk_cli.add_command(quotient_lab)
bidisk_cli.add_command(example)
bidisk_cli.add_command(version)
