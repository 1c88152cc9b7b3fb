"""Sweep orchestration: exponent table, log-log fits, experiments, reports and the CLI."""

from displab.harness.experiments import EXPERIMENTS, Check, SweepResult, default_config, fingerprint, run_experiment
from displab.harness.exponents import *  # noqa: F401,F403
from displab.harness.exponents import __all__ as _exp_all
from displab.harness.fitting import FitResult, fit_exponent, fit_loglog

__all__ = [
    "EXPERIMENTS",
    "Check",
    "SweepResult",
    "default_config",
    "fingerprint",
    "run_experiment",
    "FitResult",
    "fit_exponent",
    "fit_loglog",
    *_exp_all,
]
