"""HV transformation, Wishart and matrix-Kummer laws on the cone of SPD matrices.

Submodules:

* :mod:`spd_kummer.spd`: SPD linear algebra (eigendecomposition, powers,
  quadratic representation, vech coordinates).
* :mod:`spd_kummer.transform`: the HV map, its Jacobian, the Vallois map and
  the ``x_alpha`` construction.
* :mod:`spd_kummer.distributions`: Wishart and matrix-Kummer samplers,
  densities and Monte-Carlo ``Psi``.
* :mod:`spd_kummer.stats`: distance-covariance independence tests and
  repeated experiments.
* :mod:`spd_kummer.funceq`: the functional equation and its solution family.
"""
__version__ = "0.1.0"

from .distributions import MatrixKummerParams, RngStream, WishartParams  # noqa: E402
from .transform import hv_forward, hv_inverse  # noqa: E402

__all__ = ["MatrixKummerParams", "RngStream", "WishartParams", "hv_forward", "hv_inverse",
           "__version__"]
