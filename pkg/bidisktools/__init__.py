"""
bidisktools: spectral and geometric analysis of compressed shifts on
quotient modules of the bidisk.
"""

import pathlib

__version__ = open(pathlib.Path(__file__).parent / "VERSION").read().strip()

from . import bundle, catalog, config, errors, inner, jobs, poly, quotient, reduce, report, spectrum  # noqa: E402

del pathlib
