"""Deformation quantization of split solvable Ricci-type symplectic symmetric spaces.

Chart conventions used throughout the package:

* points are ``(a, v, l)`` with ``v`` in R^{2n}; the standard form on V is
  ``Omega(e_i, e_{n+j}) = delta_ij``;
* the symmetries preserve ``da^dl + Omega/2`` in this chart, so the Weyl product
  uses the Poisson brackets ``{a, l} = 1`` and ``{v_i, v_{n+i}} = 2``;
* the deformation parameter ``theta`` of a product is the Weyl parameter
  (``a * l - l * a = i theta``); the transport operators use the twisting map
  at ``theta / 2``.
"""

from .errors import (
    BoundaryMassError,
    CostLimit,
    GridMismatch,
    MissingInvolution,
    NotSkewsymmetric,
    RankAmbiguous,
    ScheduleTooAggressive,
    WrongSpaceTag,
)

__version__ = "0.1.0"
