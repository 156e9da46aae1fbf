"""Python access to the mflab C++ core."""

import json
from pathlib import Path

from ._core import (
    ConfigError,
    ResourceError,
    classical_rhs,
    combineq_rhs,
    count_S_Np,
    count_S_Np_enumerated,
    experiment_ids,
    quantum_rhs,
    wasserstein_exact,
)
from . import _core

__all__ = [
    "ConfigError",
    "ResourceError",
    "classical_rhs",
    "combineq_rhs",
    "count_S_Np",
    "count_S_Np_enumerated",
    "experiment_ids",
    "quantum_rhs",
    "run",
    "validate",
    "wasserstein_exact",
]


def _as_text(config):
    if isinstance(config, (str, Path)) and Path(config).is_file():
        return Path(config).read_text()
    if isinstance(config, dict):
        return json.dumps(config)
    return str(config)


def validate(config):
    """Return the list of diagnostics for a config (dict, JSON text or path); empty means valid."""
    return list(_core.validate_config_json(_as_text(config)))


def run(config, out, seed=None, jobs=1, write_files=True):
    """Run an experiment and return (exit_code, reports) with reports as dicts."""
    code, rows, _ = _core.run_json(_as_text(config), str(out), seed, jobs, write_files)
    return code, json.loads(rows)
