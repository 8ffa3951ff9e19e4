"""Figure rendering for projected-ensemble experiment outputs."""

__version__ = "0.1.0"

from .io import EXPECTED_HEADER, ResultsFormatError, read_results
from .render import KINDS, fit_decay_slopes, reference_root_times, render, trace_moment_reference
