"""
Helpers shared by the command classes.
"""

from typing import Any, Dict

import numpy as np

from uvds.exceptions import DatasetIOError
from uvds.settings import get_settings
from uvds.solver import SolverConfig

# keyword name -> SolverConfig field
SOLVER_FLAGS = {
    "lambda_": "lambda",
    "beta": "beta",
    "gamma": "gamma",
    "alpha": "alpha",
    "k": "k",
    "iters": "outer_iters",
    "q_max_iters": "q_max_iters",
    "q_tol": "q_tol",
    "tau_init": "tau_init",
    "early_stop_tol": "early_stop_tol",
    "seed": "seed",
}


def solver_config(**kwargs) -> SolverConfig:
    """
    SolverConfig from command keywords. Flags left as None fall back to the
    environment defaults (k, seed), then to the built-in defaults.
    """
    settings = get_settings()
    values: Dict[str, Any] = {"k": settings.default_k, "seed": settings.default_seed}
    for name, field in SOLVER_FLAGS.items():
        if kwargs.get(name) is not None:
            values[field] = kwargs[name]
    return SolverConfig.build(**values)


def write_matrix(path: str, m: np.ndarray) -> None:
    """Headerless CSV, 17 significant digits."""
    try:
        np.savetxt(path, np.atleast_2d(m), fmt="%.17g", delimiter=",")
    except OSError as e:
        raise DatasetIOError(path, str(e))


def success(**payload) -> Dict[str, Any]:
    return {"status": "success", **payload}
