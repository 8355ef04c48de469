"""Learning the optimal stabilizing gain under multiplicative channel noise.

The package exposes four layers:

* :mod:`loggrowth.densities` -- the built-in noise densities D1..D4,
* :mod:`loggrowth.pvcore` -- deterministic cost / gradient / Hessian oracle,
* :mod:`loggrowth.kde` and :mod:`loggrowth.estimators` -- sample-based
  gradient estimation (naive, symmetric-pairing, KDE plug-in),
* :mod:`loggrowth.optim` and :mod:`loggrowth.experiments` -- the learning
  algorithms and the CSV experiment harness behind the ``loggrowth`` CLI.
"""

from .densities import NoiseDensity, make_builtin, uniform, sample, eval_pdf, eval_dpdf
from .pvcore import (
    GainPoint,
    HessianParts,
    LocalConstants,
    b_sing,
    cost_J,
    reg_cost,
    pv_gradient,
    reg_gradient,
    hessian_decomposition,
    find_Kstar,
    find_Kstar_eps,
    local_constants,
)

__all__ = [
    "NoiseDensity",
    "make_builtin",
    "uniform",
    "sample",
    "eval_pdf",
    "eval_dpdf",
    "GainPoint",
    "HessianParts",
    "LocalConstants",
    "b_sing",
    "cost_J",
    "reg_cost",
    "pv_gradient",
    "reg_gradient",
    "hessian_decomposition",
    "find_Kstar",
    "find_Kstar_eps",
    "local_constants",
]

__version__ = "0.1.0"
