"""
The functional equation and parameter recovery
==============================================

Log-densities of the four laws in the independence property satisfy
``A(u) + B(v) = C(x) + D(y)`` along the HV map, with ``A, B, C, D``
from a six-parameter family.  Fitting that family recovers the law
parameters.
"""

import numpy as np
from scipy import special

from spd_kummer import distributions as dist
from spd_kummer import funceq
from spd_kummer.distributions import MatrixKummerParams, RngStream, WishartParams

p = funceq.SolutionParams(a=1.3, b=-0.4, c1=0.2, c2=1.0, d=-0.5, lam=-2.0)
print(funceq.residual_report(p, 3, 200, RngStream(13)))

# %%
# Fit analytic log-densities for (a, b, c) = (2, 0.5, 1.5) at r = 1.  The
# normalizers use Tricomi's U.

a, b, c = 2.0, 0.5, 1.5
pu, pv = MatrixKummerParams(a + b, -b, c, r=1), WishartParams(a, c, r=1)
px, py = MatrixKummerParams(a, b, c, r=1), WishartParams(a + b, c, r=1)
log_cu = -np.log(special.gamma(a + b) * special.hyperu(a + b, 1 + b, c))
log_cx = -np.log(special.gamma(a) * special.hyperu(a, 1 - b, c))

fit = funceq.fit_solution_params(
    lambda m: dist.kummer_logpdf(pu, m, log_cu), lambda m: dist.wishart_logpdf(pv, m),
    lambda m: dist.kummer_logpdf(px, m, log_cx), lambda m: dist.wishart_logpdf(py, m),
    funceq.random_interior_points(1, 30, RngStream(14)))
print(fit.distribution_params(), "residual", fit.residual)

# %%
# The Pexider-type equation f1(x) + f2(y) = f3(P(x^(1/2)) y) on e + cone is
# solved by multiples of logdet, not by the trace.

x = funceq.random_interior_points(2, 5, RngStream(15))
y = funceq.random_interior_points(2, 5, RngStream(16))
q = funceq.PexiderParams(1.5, 0.3, -0.2)
print(funceq.pexider_residual(q, x, y), funceq.pexider_residual(q, x, y, base="trace"))
