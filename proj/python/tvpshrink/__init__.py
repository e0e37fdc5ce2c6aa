"""Sparse Bayesian time-varying-parameter regressions (C++ core)."""
import json

import numpy as np

from . import _tvpshrink as _core
from ._tvpshrink import (  # noqa: F401
    NumericalError,
    UserError,
    classify_indicators,
    conf_hypergeom_u,
    config_hash,
    effective_sample_size,
    log_likelihood,
    marginal_sqrt_theta_density,
    simulate,
    tpb_density,
)


class Draws:
    """Posterior draws of one chain: named columns over stored iterations."""

    def __init__(self, raw):
        self.names = list(raw["names"])
        self.array = np.asarray(raw["draws"])
        self.labels = list(raw["labels"])
        self.codes = [list(c) for c in raw["codes"]]
        self.diagnostics = json.loads(raw["diagnostics"])
        self.paths = raw.get("paths")

    def __getitem__(self, name):
        return self.array[:, self.names.index(name)]

    def __len__(self):
        return self.array.shape[0]


def fit(y, X, prior=None, sampler=None, n_burn=1000, n_draws=1000, thin=1, *, seed,
        chains=1, threads=1, labels=None):
    """Run the sampler; returns one Draws object per chain."""
    y = np.ascontiguousarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    raw = _core.fit(y, X, json.dumps(prior or {}), json.dumps(sampler or {}), n_burn, n_draws,
                    thin, seed, chains, threads, list(labels or []))
    return [Draws(r) for r in raw]


__all__ = [
    "Draws", "fit", "simulate", "log_likelihood", "conf_hypergeom_u", "tpb_density",
    "marginal_sqrt_theta_density", "classify_indicators", "effective_sample_size",
    "config_hash", "UserError", "NumericalError",
]
