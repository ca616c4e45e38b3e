"""Exp3 simulation, replay and maximum-likelihood estimation of the learning rate.

Arms are 0-based here, as in the C++ API. Log-likelihoods that hit a zero
probability come back as float("-inf").
"""

import csv
import io
import json

from ._core import (
    AllNegInfinity,
    DomainError,
    Error,
    IoError,
    ReplayCollapse,
    SimulationCollapse,
    Trajectory,
    estimate_constant,
    estimate_truncated,
    hard_pair,
    kl_exact,
    kl_monte_carlo,
    log_likelihood,
    log_star,
    probability_path,
    q_sequence,
    quantile,
    rate_regression,
    simulate,
    spearman_test,
    tetration_check,
    truncated_log_likelihood,
    upsilon_max,
    upsilon_n,
)
from ._core import _run_experiment


def _parse(field, text):
    if text == "":
        return float("nan")
    if field in ("n", "rep", "seed", "upsilon"):
        return int(text)
    if field == "collapsed":
        return text == "1"
    return float(text)


def run_experiment(config, jobs=0):
    """Run a replication experiment from a config dict.

    Returns (records, summary): one dict per (n, rep) and the summary that the
    CLI writes to <name>.json.
    """
    text, summary = _run_experiment(json.dumps(config), jobs)
    records = [{k: _parse(k, v) for k, v in row.items()} for row in csv.DictReader(io.StringIO(text))]
    return records, json.loads(summary)


__all__ = [
    "AllNegInfinity", "DomainError", "Error", "IoError", "ReplayCollapse", "SimulationCollapse", "Trajectory",
    "estimate_constant", "estimate_truncated", "hard_pair", "kl_exact", "kl_monte_carlo", "log_likelihood",
    "log_star", "probability_path", "q_sequence", "quantile", "rate_regression", "run_experiment", "simulate",
    "spearman_test", "tetration_check", "truncated_log_likelihood", "upsilon_max", "upsilon_n",
]
