"""Metric catalog, sampling and checks, and suite reports."""

from .catalog import CatalogMetric, load, names
from .checks import ACCEPTANCE, CHECKS, TOLERANCES, CheckRecord, run_check
from .operations import (bach_covariance_check, convergence_study, cross_validate, min_norm_scan,
                         sample_ball)
from .report import SuiteReport, run_suite

__all__ = ["ACCEPTANCE", "CHECKS", "CatalogMetric", "CheckRecord", "SuiteReport", "TOLERANCES",
           "bach_covariance_check", "convergence_study", "cross_validate", "load", "min_norm_scan",
           "names", "run_check", "run_suite", "sample_ball"]
