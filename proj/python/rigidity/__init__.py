"""Linear rigidity of stationary random measures.

Densities, covariances, targets and kernels are given as the same JSON-like
dicts the ``rigidity`` command line reads; results come back as dicts.
"""

import json

from . import _core
from ._core import RigidityError, builtin_densities, builtin_kernels

__all__ = [
    "RigidityError",
    "builtin_densities",
    "builtin_kernels",
    "builtin",
    "classify",
    "discrete_test",
    "dpp",
    "interpolation_limit",
    "pole_test",
    "predict",
    "run_cli",
    "simulate",
]


def _text(doc):
    return doc if isinstance(doc, str) and doc.lstrip().startswith(("{", "[", '"')) else json.dumps(doc)


def builtin(name, **params):
    """Density document for a builtin density."""
    return {"density": {"kind": "builtin", "name": name, "params": params}}


def classify(density, k_cap=2, eps=0.5):
    """Verdicts for the integer orders 0..k_cap."""
    return json.loads(_core.classify(_text(density), k_cap, eps))


def pole_test(density, k, method="radial"):
    return json.loads(_core.pole_test(_text(density), list(k), method))


def predict(covariance, m, truncations, target=None):
    """Best linear predictor residuals on the window [[m]]^d for each truncation."""
    target = target if target is not None else {"kind": "mass"}
    return json.loads(_core.predict(_text(covariance), m, _text(target), sorted(truncations)))


def discrete_test(density, m, k):
    return json.loads(_core.discrete_test(_text(density), m, list(k)))


def dpp(kernel, k_cap=1):
    return json.loads(_core.dpp(_text(kernel), k_cap))


def simulate(density, n, replicates=1, seed=0):
    """Gaussian paths, shape (replicates, n) or (replicates, n, n)."""
    return _core.simulate(_text(density), n, replicates, seed)


def interpolation_limit(density):
    return _core.interpolation_limit(_text(density))


def run_cli(command, config, out, seed=None, k_cap=None):
    """Runs a command-line job; returns its exit code."""
    return _core.run_cli(command, str(config), str(out), seed, k_cap)
