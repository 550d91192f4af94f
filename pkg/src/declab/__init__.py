"""declab: a desk-scale numerical laboratory for oscillatory-sum experiments.

The package computes L^p moments of exponential sums on curves (exactly for
even p, by Monte Carlo otherwise), empirical lower bounds for decoupling
constants, incidence counts for tubes/plates/planks, additive energy of cone
point sets, and the classical/new fourth-derivative exponential-sum bounds.
"""

__version__ = "0.1.0"

from .expsum import CurveKind, CurveSpec, ExpSumSpec, FrenetFrame, ScalingMode
from .expsum import cone_points, eval_sum, frenet_frame

__all__ = [
    "CurveKind",
    "CurveSpec",
    "ExpSumSpec",
    "FrenetFrame",
    "ScalingMode",
    "cone_points",
    "eval_sum",
    "frenet_frame",
    "__version__",
]
