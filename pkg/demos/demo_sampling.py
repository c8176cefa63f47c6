"""
Wishart and matrix-Kummer samples
=================================

``W(b, S)`` has mean ``b S^-1``.  The matrix-Kummer law ``MK(a, b, S)``
has density proportional to
``det(x)^(a-(r+1)/2) det(e+x)^(-(a+b)) exp(-tr(S x))`` and is drawn
exactly by rejection from ``W(a, S)``.
"""

import numpy as np
from scipy import special

from spd_kummer import distributions as dist
from spd_kummer.distributions import MatrixKummerParams, RngStream, WishartParams

scale = np.array([[2.0, 0.4], [0.4, 1.0]])
w = WishartParams(2.5, scale)
y = dist.wishart_sample(w, 50_000, RngStream(3))
print("empirical mean\n", y.mean(axis=0), "\nexact\n", w.mean())

# %%
# Rejection sampling reports its acceptance rate.

k = MatrixKummerParams(2.0, 0.5, 1.0, r=2)
x, st = dist.kummer_sample(k, 2_000, RngStream(4), return_stats=True)
print(f"accepted {st.accepted} of {st.proposals} ({st.acceptance_rate:.3f})")

# %%
# The normalizing constant involves Psi(a, gamma; S).  At r = 1 it is
# Tricomi's U function.

print(dist.psi_scalar_quad(1.0, 0.0, 1.0), special.hyperu(1.0, 0.0, 1.0))
print(dist.psi_mc(1.0, 0.0, 1.0, 100_000, RngStream(5), r=1))

# %%
# A classical identity relates two values of Psi:
# Psi(a+b, (r+1)/2+b; c e) c^(rb) = Psi(a, (r+1)/2-b; c e).

a, b, c, r = 2.0, 0.5, 1.0, 2
lhs = dist.psi_mc(a + b, 1.5 + b, c, 100_000, RngStream(6), r=r)
rhs = dist.psi_mc(a, 1.5 - b, c, 100_000, RngStream(7), r=r)
print(lhs.estimate * c ** (r * b), "+-", lhs.se, "vs", rhs.estimate, "+-", rhs.se)
