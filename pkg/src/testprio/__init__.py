"""Regression test prioritization workbench.

Replays CI build histories through prioritization schemes, scores each
build's ordering with APFD, and ranks schemes with Scott-Knott splitting
gated by Cliff's delta. Ships a synthetic history generator for the two
failure regimes (streaky open-source-like, clustered closed-source-like)
and a CLI that runs the whole pipeline.
"""

from testprio.history import (
    BuildHistory,
    BuildRecord,
    ParseError,
    SanityCriteria,
    TestOutcome,
    filter_useful_builds,
    load_history,
    parse_matrix,
    sanity_check,
    serialize_matrix,
)
from testprio.metrics import ApfdInput, apfd, apfd_from_ordering, detection_curve, summarize
from testprio.prioritizers import SCHEME_IDS, ExecutionOracle
from testprio.ranking import Treatment, cliffs_delta, scott_knott
from testprio.replay import ReplayResult, SchemeConfig, replay, run_schemes
from testprio.simgen import GenProfile, generate

__version__ = "0.1.0"

__all__ = [
    "ApfdInput",
    "BuildHistory",
    "BuildRecord",
    "ExecutionOracle",
    "GenProfile",
    "ParseError",
    "ReplayResult",
    "SCHEME_IDS",
    "SanityCriteria",
    "SchemeConfig",
    "TestOutcome",
    "Treatment",
    "apfd",
    "apfd_from_ordering",
    "cliffs_delta",
    "detection_curve",
    "filter_useful_builds",
    "generate",
    "load_history",
    "parse_matrix",
    "replay",
    "run_schemes",
    "sanity_check",
    "scott_knott",
    "serialize_matrix",
    "summarize",
    "__version__",
]
