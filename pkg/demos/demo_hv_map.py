"""
The HV map on pairs of SPD matrices
===================================

The map sends ``(x, y)`` to ``u = P((e+x)^(-1/2)) y`` and
``v = P((e+u)^(1/2)) x``, where ``P(a) b = a b a``.  Applying it twice gives
back the input.
"""

import numpy as np

from spd_kummer import spd, transform
from spd_kummer.distributions import RngStream, WishartParams, wishart_sample

# a few random 3x3 SPD pairs
x = wishart_sample(WishartParams(3.0, np.eye(3)), 5, RngStream(1))
y = wishart_sample(WishartParams(2.5, np.eye(3)), 5, RngStream(2))

u, v = transform.hv_forward(x, y)
xx, yy = transform.hv_forward(u, v)
print("round-trip error:", np.abs(xx - x).max(), np.abs(yy - y).max())

# %%
# For 1x1 matrices the map is the scalar transform
# (x, y) -> (y/(1+x), x(1 + y/(1+x))); (1, 2) is a fixed point.

print(transform.scalar_t0(1.0, 2.0))
print(transform.hv_forward(np.array([[3.0]]), np.array([[4.0]])), transform.scalar_t0(3.0, 4.0))

# %%
# The Jacobian of the inverse map, in vech coordinates, is
# det(e+u)^(-(r+1)) det(e+u+v)^((r+1)/2).  Central differences agree.

for k in range(3):
    ana = transform.jacobian_analytic(u[k], v[k])
    num = transform.jacobian_numeric(u[k], v[k])
    print(f"analytic {ana:.10f}  finite-difference {num:.10f}")

# %%
# Trace and determinant bookkeeping used when changing variables.

e = np.eye(3)
print(np.trace(x + y, axis1=1, axis2=2) - np.trace(u + v, axis1=1, axis2=2))
print(spd.logdet(e + x) - (spd.logdet(e + u + v) - spd.logdet(e + u)))

# %%
# The Vallois map keeps the sum: u + v = x + y.  Its square-root form stays
# in the cone; the literal form s (e+x)^-1 s - e does not.

uv, vv, ok = transform.vallois_batch(x, y)
print("sum kept:", np.abs(uv + vv - x - y).max(), "in cone:", ok)
print(transform.vallois_batch(np.eye(1), np.eye(1), literal=True))
