"""Discrete residuals of the evolution equations satisfied by the Harnack quantities.

Each residual compares a time derivative taken from three stored snapshots (t - delta, t,
t + delta) with the right-hand side of one of the evolution identities, evaluated with the
geometry's discrete operators at the middle snapshot.  The explicitly time-dependent parts of
Q (a S(t), -b u/t, -d n/t) are differentiated in closed form; only the state-dependent parts go
through the central difference.  On a constant solution both sides are then equal to rounding.

Sign convention: a trajectory built with heat coefficient ``a`` solves
u_t = lap u - |grad u|^2 + c_u S + gamma u with c_u = -a.
"""

import numpy as np

from .. import geometry as geo
from .. import harnack as hk
from ..errors import ConfigError

SPACING_RTOL = 1e-9


def _s_vanishes(geom):
    return geom.kind in (geo.GeometryKind.FLAT_TORUS_STATIC, geo.GeometryKind.SPHERE_STATIC)


def _u_coefficient(trajectory, heat_a):
    """c_u for the identity, checked against the equation the trajectory actually solves."""
    problem = trajectory.problem
    if heat_a is not None and heat_a != problem.a and not _s_vanishes(problem.geometry):
        raise ConfigError(
            f"identity assumes the heat equation with a={heat_a}, trajectory was built "
            f"with a={problem.a}")
    return -problem.a


class _Window:
    """Three uniformly spaced snapshots around ``t`` in a given representation."""

    def __init__(self, trajectory, t, form, t_min=None):
        if form not in ("u", "v"):
            raise ConfigError(f"form must be 'u' or 'v', got {form!r}")
        if t_min is not None and t < t_min:
            raise ConfigError(f"t={t} is below t_min={t_min}")
        if not t > 0:
            raise ConfigError(f"residuals are evaluated at t > 0, got t={t}")
        i = trajectory.index(t)
        if i == 0 or i == len(trajectory.snapshots) - 1:
            raise ConfigError(f"t={t} needs a stored snapshot on each side")
        times = trajectory.times
        tm, t0, tp = times[i - 1], times[i], times[i + 1]
        if abs((tp - t0) - (t0 - tm)) > SPACING_RTOL * (tp - tm):
            raise ConfigError(
                f"snapshot spacing around t={t0} is nonuniform ({t0 - tm:.3e} vs {tp - t0:.3e})")
        self.geom = trajectory.geometry
        self.form = form
        self.times = (tm, t0, tp)
        self.t = t0
        self.delta = 0.5 * (tp - tm)
        get = trajectory.u_at if form == "u" else trajectory.v_at
        self.states = tuple(get(s) for s in self.times)
        self.w = self.states[1]

    def _shift(self, s):
        if self.form == "u":
            return 0.0
        return 0.5 * self.geom.n * np.log(4.0 * np.pi * s)

    @property
    def log_shift(self):
        """(n/2) log(4 pi t) for the v-form, 0 for the u-form."""
        return self._shift(self.t)

    def lhs(self, coeffs):
        """d/dt of alpha lap w - beta |grad w|^2 + a S - b w/t - d n/t."""
        geom, t, dl = self.geom, self.t, self.delta
        (tm, _, tp), (wm, w, wp) = self.times, self.states

        def state_part(s, x):
            return (coeffs.alpha * geo.laplacian(geom, x, s)
                    - coeffs.beta * geo.grad_norm_sq(geom, x, s))

        out = (state_part(tp, wp) - state_part(tm, wm)) / (2.0 * dl)
        out = out + coeffs.a * geo.dS_dt(geom, t)
        if coeffs.b:
            # v carries the explicit shift -(n/2) log(4 pi t); difference only u = v + shift
            w_t = (wp + self._shift(tp) - wm - self._shift(tm)) / (2.0 * dl)
            if self.form == "v":
                w_t = w_t - 0.5 * geom.n / t
            out = out - coeffs.b * w_t / t + coeffs.b * w / t**2
        if coeffs.d:
            out = out + coeffs.d * geom.n / t**2
        return out


class _Terms:
    """Discrete building blocks of every right-hand side at one snapshot."""

    def __init__(self, geom, w, t):
        self.geom, self.w, self.t = geom, w, t
        self.n = geom.n
        self.lap = geo.laplacian(geom, w, t)
        self.grad = geo.gradient(geom, w, t)
        self.gns = geo.grad_norm_sq(geom, w, t)
        self.hess = geo.hessian(geom, w, t)
        self.S = geo.scalar_S(geom, t)
        self.dS = geo.dS_dt(geom, t)
        self.lapS = geo.laplacian_S(geom, t)
        self.gradS = geo.grad_S(geom, t)
        self.divS = geo.div_S(geom, t)
        self.Sij = geo.s_tensor(geom, t)
        self.Rij = geo.ricci(geom, t)
        self.S2 = geo.s_norm_sq(geom, t)

    def quantity(self, coeffs):
        return hk.q_quantity(self.geom, self.w, self.t, coeffs)

    def transport(self, q):
        """lap Q - 2 <grad Q, grad w>."""
        return (geo.laplacian(self.geom, q, self.t)
                - 2.0 * geo.dot(geo.gradient(self.geom, q, self.t), self.grad))

    def quad(self, tensor):
        return geo.contract(tensor, self.grad, self.grad)

    def d_coeff(self, a, alpha, beta):
        return hk.d_coeff(self.geom, -self.grad, self.t, a, alpha, beta)

    def mueller_H(self):
        return hk.mueller_H(self.geom, -self.grad, self.t)


def rhs_prop(terms, coeffs, c_u, gamma, log_shift=0.0, v_form=False):
    """General (alpha, beta, a, b, d) right-hand side; the v-form adds b n/(2t^2) and shifts
    the gamma term argument by (n/2) log(4 pi t)."""
    T, t = terms, terms.t
    al, be, a, b, d = coeffs.alpha, coeffs.beta, coeffs.a, coeffs.b, coeffs.d
    q = T.quantity(coeffs)
    out = (T.transport(q)
           + 2.0 * (a - be * c_u) * geo.dot(T.gradS, T.grad)
           - 2.0 * (al - be) * hk.frob_sq(T.hess)
           - 2.0 * al * T.quad(T.Rij)
           + 2.0 * al * np.einsum("...ij,...ij->...", T.Sij, T.hess)
           + al * c_u * T.lapS
           - (b / t) * T.gns - (b / t) * c_u * T.S + (b / t**2) * T.w + d * T.n / t**2
           + 2.0 * a * T.S2
           + T.d_coeff(a, al, be)
           + al * gamma * T.lap - 2.0 * be * gamma * T.gns
           - b * gamma / t * (T.w + log_shift))
    if v_form:
        out = out + b * T.n / (2.0 * t**2)
    return out


def rhs_square(terms, coeffs, c_u, gamma, lam, log_shift=0.0, v_form=False):
    """Completed-square rewrite of :func:`rhs_prop` with free constant ``lam``."""
    coeffs.check_square_form()
    T, t, n = terms, terms.t, terms.n
    al, be, a, b, d = coeffs.alpha, coeffs.beta, coeffs.a, coeffs.b, coeffs.d
    q = T.quantity(coeffs)
    k = al / (2.0 * (al - be))
    kappa = 2.0 * (al - be) * lam / al
    square = hk.frob_sq(hk.shifted_hessian(T.geom, T.w, t, k, lam))
    out = (T.transport(q)
           - 2.0 * (al - be) * square
           + 2.0 * (a - be * c_u) * geo.dot(T.grad, T.gradS)
           - kappa / t * q
           + (al - be) * n * lam**2 / (2.0 * t**2)
           - (b + kappa * be) * T.gns / t
           + (2.0 * a + al**2 / (2.0 * (al - be))) * T.S2
           + (al * lam - b * c_u + kappa * a) * T.S / t
           + (1.0 - kappa) * b / t**2 * T.w
           + (1.0 - kappa) * d / t**2 * n
           + al * c_u * T.lapS
           - 2.0 * al * T.quad(T.Rij)
           + T.d_coeff(a, al, be)
           + al * gamma * T.lap - 2.0 * be * gamma * T.gns
           - b * gamma / t * (T.w + log_shift))
    if v_form:
        out = out + b * n / (2.0 * t**2)
    return out


def rhs_corollary(terms, a_q, d, gamma):
    """Right-hand side for Q = 2 lap w - |grad w|^2 + a_q S - d n/t when w_t carries -(a_q+4) S."""
    T, t, n = terms, terms.t, terms.n
    q = T.quantity(hk.corollary_coefficients(a_q, d))
    square = hk.frob_sq(hk.shifted_hessian(T.geom, T.w, t, 1.0, 2.0))
    return (T.transport(q)
            - 2.0 * square
            - (2.0 / t - gamma) * q
            + (-2.0 / t - gamma) * T.gns
            - a_q * gamma * T.S
            + 2.0 * (a_q + 2.0) * T.mueller_H()
            + n / t**2 * (2.0 - d) + d * gamma * n / t
            - ((a_q + 4.0) * T.dS - 2.0 * T.S2 + (3.0 * a_q + 8.0) * T.lapS)
            + 2.0 * geo.dot(2.0 * T.divS - T.gradS, T.grad)
            - 2.0 * T.quad(T.Rij + (2.0 * a_q + 5.0) * T.Sij))


def rhs_li_yau(terms, gamma):
    """Right-hand side for Q = |grad u|^2 - u/t in the form lap Q - 2<grad Q, grad u>
    - (1/t - gamma) Q + gamma |grad u|^2 - 2 |hess u|^2 - 2 I(S, -grad u)."""
    T, t = terms, terms.t
    q = T.quantity(hk.THEOREM_C)
    return (T.transport(q) - (1.0 / t - gamma) * q + gamma * T.gns
            - 2.0 * hk.frob_sq(T.hess) - 2.0 * hk.cal_I(T.geom, -T.grad, t))


def _gamma(trajectory, gamma, t):
    sched = trajectory.problem.gamma if gamma is None else gamma
    return sched(t) if callable(sched) else float(sched)


def residual_prop(trajectory, coeffs, gamma=None, t=None, form="u", t_min=None):
    """Pointwise |LHS - RHS| of the general evolution identity for Q_S (or R_S, ``form='v'``)."""
    c_u = _u_coefficient(trajectory, coeffs.c)
    win = _Window(trajectory, t, form, t_min)
    terms = _Terms(win.geom, win.w, win.t)
    rhs = rhs_prop(terms, coeffs, c_u, _gamma(trajectory, gamma, win.t),
                   win.log_shift, form == "v")
    return np.abs(win.lhs(coeffs) - rhs)


def residual_thm2(trajectory, coeffs, gamma=None, lam=None, t=None, form="u", t_min=None):
    """Pointwise |LHS - RHS| of the completed-square identity (alpha != 0, alpha != beta)."""
    coeffs.check_square_form()
    lam = coeffs.lam if lam is None else lam
    c_u = _u_coefficient(trajectory, coeffs.c)
    win = _Window(trajectory, t, form, t_min)
    terms = _Terms(win.geom, win.w, win.t)
    rhs = rhs_square(terms, coeffs, c_u, _gamma(trajectory, gamma, win.t), lam,
                     win.log_shift, form == "v")
    return np.abs(win.lhs(coeffs) - rhs)


def residual_cor(trajectory, a_q, d, gamma=None, t=None, form="u", t_min=None):
    """Pointwise |LHS - RHS| of the (2, 1, 0)-family identity, u- or v-form."""
    _u_coefficient(trajectory, a_q + 4.0)
    win = _Window(trajectory, t, form, t_min)
    terms = _Terms(win.geom, win.w, win.t)
    rhs = rhs_corollary(terms, a_q, d, _gamma(trajectory, gamma, win.t))
    return np.abs(win.lhs(hk.corollary_coefficients(a_q, d)) - rhs)


def residual_li_yau(trajectory, gamma=None, t=None, t_min=None):
    """Pointwise |LHS - RHS| of the Li-Yau quantity's evolution in its reduced form."""
    _u_coefficient(trajectory, 0.0)
    win = _Window(trajectory, t, "u", t_min)
    terms = _Terms(win.geom, win.w, win.t)
    rhs = rhs_li_yau(terms, _gamma(trajectory, gamma, win.t))
    return np.abs(win.lhs(hk.THEOREM_C) - rhs)


def residual_bochner(geom, u, t):
    """|lap |grad u|^2 - 2|hess u|^2 - 2<grad lap u, grad u> - 2 Ric(grad u, grad u)|."""
    u = geo._values(geom, u)
    grad = geo.gradient(geom, u, t)
    lhs = geo.laplacian(geom, geo.grad_norm_sq(geom, u, t), t)
    rhs = (2.0 * hk.frob_sq(geo.hessian(geom, u, t))
           + 2.0 * geo.dot(geo.gradient(geom, geo.laplacian(geom, u, t), t), grad)
           + 2.0 * geo.contract(geo.ricci(geom, t), grad, grad))
    return np.abs(lhs - rhs)


def identity_rhs_family(trajectory, t, a_q=-3.0, d=2.0, form="u", gamma=None):
    """Right-hand sides of the three forms for the (2, 1, 0) family at one snapshot.

    Keys: ``prop``, ``square`` (lam = 2), ``corollary``.  They are algebraic rearrangements of one
    another, so they agree to rounding.
    """
    coeffs = hk.corollary_coefficients(a_q, d)
    c_u = _u_coefficient(trajectory, coeffs.c)
    get = trajectory.u_at if form == "u" else trajectory.v_at
    t = trajectory.times[trajectory.index(t)]
    w = get(t)
    geom = trajectory.geometry
    terms = _Terms(geom, w, t)
    g = _gamma(trajectory, gamma, t)
    shift = 0.0 if form == "u" else 0.5 * geom.n * np.log(4.0 * np.pi * t)
    return {
        "prop": rhs_prop(terms, coeffs, c_u, g, shift, form == "v"),
        "square": rhs_square(terms, coeffs, c_u, g, 2.0, shift, form == "v"),
        "corollary": rhs_corollary(terms, a_q, d, g),
    }


def relative_gap(x, y):
    """max |x - y| / max(1, max |x|, max |y|)."""
    scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    return float(np.max(np.abs(x - y))) / scale
