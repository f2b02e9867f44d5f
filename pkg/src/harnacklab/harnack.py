"""Pointwise Harnack-type quantities evaluated on sampled fields.

All quantities are built from the evaluators in :mod:`harnacklab.geometry`, the same ones
the integrator uses, so residual checks measure identity error rather than stencil mismatch.
Vector fields ``X`` are orthonormal-frame components of shape ``(n, *grid)``.
"""

from dataclasses import dataclass, replace

import numpy as np

from . import geometry as geo
from .errors import ConfigError


@dataclass(frozen=True)
class HarnackCoefficients:
    """Coefficients of Q_S = alpha lap u - beta |grad u|^2 + a S - b u/t - d n/t.

    ``c`` is the coefficient of S f in the heat equation the trajectory solves, so the
    u-equation reads u_t = lap u - |grad u|^2 - c S + gamma u.  ``lam`` is the free constant of
    the completed-square rewrite.
    """

    alpha: float
    beta: float
    a: float
    b: float = 0.0
    c: float = 0.0
    d: float = 0.0
    lam: float = 0.0

    def with_(self, **changes):
        return replace(self, **changes)

    def check_square_form(self):
        if self.alpha == 0 or self.alpha == self.beta:
            raise ConfigError(
                f"completed-square form needs alpha != 0 and alpha != beta "
                f"(alpha={self.alpha}, beta={self.beta})")


THEOREM_A = HarnackCoefficients(alpha=2.0, beta=1.0, a=-3.0, b=0.0, c=1.0, d=2.0, lam=2.0)
THEOREM_B = THEOREM_A
THEOREM_C = HarnackCoefficients(alpha=0.0, beta=-1.0, a=0.0, b=1.0, c=0.0, d=0.0, lam=0.0)


def corollary_coefficients(a_q, d, lam=2.0):
    """The (alpha, beta, b) = (2, 1, 0) family; the u-equation potential is -(a_q + 4) S."""
    return HarnackCoefficients(alpha=2.0, beta=1.0, a=float(a_q), b=0.0, c=float(a_q) + 4.0,
                               d=float(d), lam=float(lam))


def _positive_time(geom, t):
    if not t > 0:
        raise ConfigError(f"quantity needs t > 0, got t={t}")
    return geom.check_time(t)


def mueller_H(geom, X, t):
    """dS/dt + S/t - 2 <grad S, X> + 2 S(X, X)."""
    _positive_time(geom, t)
    X = geo.make_vector_field(geom, X)
    S = geo.scalar_S(geom, t)
    return (geo.dS_dt(geom, t) + S / t - 2.0 * geo.dot(geo.grad_S(geom, t), X)
            + 2.0 * geo.contract(geo.s_tensor(geom, t), X, X))


def _evolution_part(geom, t):
    # dS/dt - lap S - 2 |S_ij|^2
    return geo.dS_dt(geom, t) - geo.laplacian_S(geom, t) - 2.0 * geo.s_norm_sq(geom, t)


def _divergence_part(geom, t):
    # components of 2 div S - grad S
    return 2.0 * geo.div_S(geom, t) - geo.grad_S(geom, t)


def cal_I(geom, X, t):
    """(R_ij - S_ij) X^i X^j."""
    geom.check_time(t)
    X = geo.make_vector_field(geom, X)
    return geo.contract(geo.ricci(geom, t) - geo.s_tensor(geom, t), X, X)


def mueller_D(geom, X, t):
    """dS/dt - lap S - 2|S_ij|^2 + (4 div S - 2 grad S)(X) + 2 (R - S)(X, X)."""
    _positive_time(geom, t)
    X = geo.make_vector_field(geom, X)
    return (_evolution_part(geom, t) + 2.0 * geo.dot(_divergence_part(geom, t), X)
            + 2.0 * cal_I(geom, X, t))


def d_coeff(geom, X, t, a, alpha, beta):
    """a (dS/dt - lap S - 2|S|^2) - alpha (2 div S - grad S)(X) + 2 beta (R - S)(X, X)."""
    _positive_time(geom, t)
    X = geo.make_vector_field(geom, X)
    return (a * _evolution_part(geom, t) - alpha * geo.dot(_divergence_part(geom, t), X)
            + 2.0 * beta * cal_I(geom, X, t))


def q_quantity(geom, u, t, coeffs):
    """Q_S = alpha lap u - beta |grad u|^2 + a S - b u/t - d n/t."""
    u = geo._values(geom, u)
    if coeffs.b != 0 or coeffs.d != 0:
        _positive_time(geom, t)
    out = (coeffs.alpha * geo.laplacian(geom, u, t) - coeffs.beta * geo.grad_norm_sq(geom, u, t)
           + coeffs.a * geo.scalar_S(geom, t))
    if coeffs.b != 0:
        out = out - coeffs.b * u / t
    if coeffs.d != 0:
        out = out - coeffs.d * geom.n / t
    return out


def r_quantity(geom, v, t, coeffs):
    """R_S: the same expression as :func:`q_quantity` applied to v = u - (n/2) log(4 pi t)."""
    _positive_time(geom, t)
    return q_quantity(geom, v, t, coeffs)


def li_yau(geom, u, t):
    """|grad u|^2 - u/t."""
    return q_quantity(geom, u, t, THEOREM_C)


def shifted_hessian(geom, u, t, k, lam):
    """grad grad u - k S_ij - (lam / 2t) g_ij as frame components."""
    _positive_time(geom, t)
    eye = np.eye(geom.n)
    return geo.hessian(geom, u, t) - k * geo.s_tensor(geom, t) - (lam / (2.0 * t)) * eye


def frob_sq(m):
    return np.einsum("...ij,...ij->...", m, m)


def trace_inequality_gap(geom, u, t):
    """|grad grad u - S - g/t|^2 - (1/n)(lap u - S - n/t)^2, nonnegative by Cauchy-Schwarz."""
    full = frob_sq(shifted_hessian(geom, u, t, 1.0, 2.0))
    trace = geo.laplacian(geom, u, t) - geo.scalar_S(geom, t) - geom.n / t
    return full - trace**2 / geom.n


def grad_norm_sq_substitution(geom, u, t, d, q=None):
    """The algebraic rewrite of |grad u|^2 in terms of Q_S (with a = -3, alpha = 2, beta = 1):

    |grad u|^2 = 2 (lap u - S - n/t) - Q_S - S - (d - 2) n/t
    """
    n = geom.n
    if q is None:
        q = q_quantity(geom, u, t, THEOREM_A.with_(d=d))
    S = geo.scalar_S(geom, t)
    return 2.0 * (geo.laplacian(geom, u, t) - S - n / t) - q - S - (d - 2.0) * n / t
