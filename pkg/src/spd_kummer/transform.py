"""The HV map on pairs of SPD matrices, its Jacobian, and related maps.

``hv_forward(x, y) = (u, v)`` with ``u = P((e+x)^(-1/2)) y`` and
``v = P((e+u)^(1/2)) x``.  The map is an involution, so the inverse is the
same function.
"""
from __future__ import annotations

import numpy as np

from . import spd
from .errors import BoundaryViolationError, InvalidInputError, NotSPDError


def _pair(x, y):
    x = spd.certify_spd(x)
    y = spd.certify_spd(y)
    if x.shape[-1] != y.shape[-1]:
        raise InvalidInputError(f"rank mismatch: {x.shape[-1]} vs {y.shape[-1]}")
    return x, y


def hv_forward(x, y):
    """Apply the HV map to SPD ``x, y`` (batched over leading axes)."""
    x, y = _pair(x, y)
    e = np.eye(x.shape[-1])
    u = spd.quadratic_rep(spd.spd_inv_sqrt(e + x), y)
    v = spd.quadratic_rep(spd.spd_sqrt(e + u), x)
    return u, v


# involution: the inverse map is the map itself
hv_inverse = hv_forward


def scalar_t0(x: float, y: float) -> tuple[float, float]:
    """``(y/(1+x), x(1 + y/(1+x)))`` on the positive quadrant."""
    if not (x > 0 and y > 0):
        raise InvalidInputError(f"scalar_t0 needs positive arguments, got ({x}, {y})")
    u = y / (1.0 + x)
    return u, x * (1.0 + u)


def jacobian_analytic(u, v):
    """Jacobian of the inverse HV map at ``(u, v)``.

    ``det(e+u)^(-(r+1)) * det(e+u+v)^((r+1)/2)``, computed in log space.
    """
    u, v = _pair(u, v)
    r = u.shape[-1]
    e = np.eye(r)
    log_j = -(r + 1) * spd.logdet(e + u) + 0.5 * (r + 1) * spd.logdet(e + u + v)
    return np.exp(log_j)


def _hv_vech(z, r):
    d = spd.vech_dim(r)
    x = spd.unvech(z[:d], r)
    y = spd.unvech(z[d:], r)
    u, v = hv_forward(x, y)
    return np.concatenate([spd.vech(u), spd.vech(v)])


def _central_jacobian(z, r, h):
    n = z.size
    jac = np.empty((n, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        jac[:, k] = (_hv_vech(z + step, r) - _hv_vech(z - step, r)) / (2.0 * h)
    return jac


def jacobian_numeric(u, v, h: float | None = None, richardson: bool = False,
                     max_halvings: int = 5) -> float:
    """|det| of the central-difference Jacobian of the HV map in vech coordinates.

    Default step ``1e-5 * (1 + |(u, v)|)``.  If a perturbed point leaves the
    cone the step is halved, at most ``max_halvings`` times.
    """
    u, v = _pair(u, v)
    if u.ndim != 2:
        raise InvalidInputError("jacobian_numeric takes a single pair")
    r = u.shape[-1]
    z = np.concatenate([spd.vech(u), spd.vech(v)])
    if h is None:
        h = 1e-5 * (1.0 + np.linalg.norm(z))
    if h <= 0:
        raise InvalidInputError("step must be positive")
    for _ in range(max_halvings + 1):
        try:
            jac = _central_jacobian(z, r, h)
            if richardson:
                jac = (4.0 * _central_jacobian(z, r, h / 2) - jac) / 3.0
        except NotSPDError:
            h /= 2.0
            continue
        return float(abs(np.linalg.det(jac)))
    raise NotSPDError("finite-difference stencil leaves the cone after step halving")


def _vallois_raw(x, y, literal):
    x, y = _pair(x, y)
    e = np.eye(x.shape[-1])
    s = e + x + y
    inv = spd.spd_inverse(e + x)
    if literal:
        u = spd.quadratic_rep(s, inv) - e
    else:
        u = spd.quadratic_rep(spd.spd_sqrt(s), inv) - e
    v = x + y - u
    return u, v


def vallois_transform(x, y, literal: bool = False):
    """Sum-preserving alternative to the HV map: ``u + v = x + y``.

    ``u = s^(1/2) (e+x)^(-1) s^(1/2) - e`` with ``s = e + x + y``, which
    reduces to the scalar map ``scalar_t0`` at r = 1.  ``literal=True``
    uses ``s (e+x)^(-1) s - e`` instead; that form leaves the cone (at
    r = 1 the second output is always negative).

    Raises :class:`BoundaryViolationError` if either output is not SPD.
    """
    u, v, ok = vallois_batch(x, y, literal=literal)
    if not np.all(ok):
        raise BoundaryViolationError(
            f"Vallois output left the cone for {int(np.size(ok) - np.sum(ok))} input(s)")
    return u, v


def vallois_batch(x, y, literal: bool = False):
    """Like :func:`vallois_transform` but returns ``(u, v, in_cone_mask)``."""
    u, v = _vallois_raw(x, y, literal)
    ok = spd.is_spd(u) & spd.is_spd(v)
    return u, v, ok


def x_alpha(u, z, alpha: float):
    """Matrix ``x_a`` with ``x_a / a -> z`` as ``a -> 0``.

    With ``s = u + e/a`` and ``w = P(s^(-1/2)) (P(s^(1/2))(z + s))^(1/2)``,
    ``x_a = w^2 - e``.  It satisfies ``P((e + x_a)^(1/2)) s = z + s``.
    """
    if not alpha > 0:
        raise InvalidInputError("alpha must be positive")
    u, z = _pair(u, z)
    e = np.eye(u.shape[-1])
    s = u + e / alpha
    s_half = spd.spd_sqrt(s)
    x_tilde = spd.spd_sqrt(spd.quadratic_rep(s_half, z + s))
    w = spd.quadratic_rep(spd.spd_inverse(s_half), x_tilde)
    return spd.symmetrize(w @ w) - e
