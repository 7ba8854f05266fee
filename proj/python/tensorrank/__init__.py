"""Moment-based rank estimation for CP, Tucker, tensor-train and tensor-ring models.

Model specs are dicts with the same fields as the CLI's JSON files; results
come back as plain dicts.
"""

import json

import numpy as np

from . import _core
from ._core import (
    DEFAULT_SEED,
    ConfigError,
    DependencyError,
    DomainError,
    IoError,
    NumericError,
    required_sharing_sets,
    set_max_threads,
    theoretical_snr,
)

__all__ = [
    "DEFAULT_SEED",
    "ConfigError",
    "DependencyError",
    "DomainError",
    "IoError",
    "NumericError",
    "estimate",
    "identify",
    "moment_table",
    "oracle",
    "required_sharing_sets",
    "set_max_threads",
    "simulate",
    "theoretical_snr",
]


def _spec_text(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def simulate(spec, seed=DEFAULT_SEED):
    """Return (observed, rate) arrays drawn from a model spec."""
    return _core.simulate(_spec_text(spec), seed)


def identify(spec):
    """Rank-identifiability verdict with monomial table and witness."""
    return json.loads(_core.identify(_spec_text(spec)))


def moment_table(y, sets, n_pairs=50000, seed=DEFAULT_SEED, normalize=False):
    """Mean, covariances and pure terms for the given sharing sets ("1,2" style)."""
    return json.loads(_core.moment_table(np.asarray(y, dtype=np.float64), list(sets), n_pairs, seed, normalize))


def estimate(y, topology, B=50, n_pairs=50000, alpha=0.05, normalize=False, block_mode=1,
             seed=DEFAULT_SEED, cp_average_pairs=False, include_samples=False):
    """Bootstrap rank estimates: per rank a median and percentile interval."""
    text = _core.estimate(np.asarray(y, dtype=np.float64), topology, B, n_pairs, alpha, normalize,
                          block_mode, seed, cp_average_pairs, include_samples)
    return json.loads(text)


def oracle(spec, sharing_set, n_mc=10000, seed=DEFAULT_SEED):
    """Monte-Carlo population pure term next to its analytic monomial."""
    return _core.oracle(_spec_text(spec), sharing_set, n_mc, seed)
