"""Closed-form model backends for the flow dg/dt = -2 S_ij and differential operators on their grids.

Every backend has a metric of the form ``g(t) = c(t) * g_ref`` where ``g_ref`` is either the flat
metric of a torus or the round metric of the unit 2-sphere, so the whole flow is carried by the
scale factor ``c(t)``:

======================== ============ ====================== =========================
kind                     c(t)         S_ij                   R_ij
======================== ============ ====================== =========================
flat_torus_static        c0           0                      0
sphere_static            c0           0                      (n-1) g_round
sphere_ricci_shrinking   c0-2(n-1)t   R_ij                   (n-1) g_round
synthetic_negative       c0 exp(2t)   -g_ij                  0
======================== ============ ====================== =========================

Sphere fields are zonal (functions of colatitude only) sampled on ``theta_j = j*pi/(N-1)``, poles
included.  Tensor-valued results (Hessians, S_ij, R_ij) and vector fields are expressed in an
orthonormal frame of ``g(t)``, so all contractions are plain Euclidean sums.  Tensor arrays have
shape ``(*grid_shape, n, n)``; vector fields have shape ``(n, *grid_shape)``.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError, SingularTimeError

MIN_RESOLUTION = 8


class GeometryKind(str, Enum):
    FLAT_TORUS_STATIC = "flat_torus_static"
    SPHERE_STATIC = "sphere_static"
    SPHERE_RICCI_SHRINKING = "sphere_ricci_shrinking"
    SYNTHETIC_NEGATIVE = "synthetic_negative"

    @property
    def is_sphere(self):
        return self in (GeometryKind.SPHERE_STATIC, GeometryKind.SPHERE_RICCI_SHRINKING)


@dataclass(frozen=True, eq=False)
class Geometry:
    """A validated model backend; build it with :func:`make_geometry`."""

    kind: GeometryKind
    n: int
    resolution: int
    c0: float
    extents: tuple
    coords: tuple = field(repr=False)
    spacing: tuple = field(repr=False)

    @property
    def shape(self):
        return self.coords[0].shape

    @property
    def h(self):
        """Largest coordinate grid spacing."""
        return max(self.spacing)

    @property
    def t_sing(self):
        if self.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
            return self.c0 / (2.0 * (self.n - 1))
        return np.inf

    @property
    def homogeneous(self):
        # all four backends have spatially constant curvature quantities
        return True

    def scale(self, t):
        """Metric scale factor c(t) with g(t) = c(t) g_ref."""
        if self.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
            return self.c0 - 2.0 * (self.n - 1) * t
        if self.kind is GeometryKind.SYNTHETIC_NEGATIVE:
            return self.c0 * np.exp(2.0 * t)
        return self.c0

    def scale_rate(self, t):
        """dc/dt, exact."""
        if self.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
            return -2.0 * (self.n - 1)
        if self.kind is GeometryKind.SYNTHETIC_NEGATIVE:
            return 2.0 * self.c0 * np.exp(2.0 * t)
        return 0.0

    def check_time(self, t):
        """Return c(t), raising :class:`SingularTimeError` at or past the singular time."""
        if not np.isfinite(t):
            raise SingularTimeError(f"non-finite time {t!r}")
        if t >= self.t_sing:
            raise SingularTimeError(
                f"t={t:.6g} is at or beyond the singular time t_sing={self.t_sing:.6g}")
        c = self.scale(t)
        if not c > 0:
            raise SingularTimeError(f"metric scale c(t)={c:.6g} is not positive at t={t:.6g}")
        return c


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Samples of a real function on a geometry's grid at time ``t``."""

    values: np.ndarray
    geometry: Geometry
    t: float

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.geometry.shape:
            raise ValueError(
                f"field shape {values.shape} does not match grid shape {self.geometry.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("scalar field contains NaN or Inf")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


def make_geometry(kind, n, resolution, c0=1.0, extents=None):
    """Build a validated backend.

    ``resolution`` is points per dimension (tori) or colatitude points including both poles
    (spheres).  ``extents`` are the torus side lengths, default ``2*pi``; ignored on spheres.
    """
    try:
        kind = GeometryKind(kind)
    except ValueError:
        raise ConfigError(f"unknown geometry kind {kind!r}") from None
    if isinstance(n, bool) or int(n) != n:
        raise ConfigError(f"dimension must be an integer, got {n!r}")
    n = int(n)
    if isinstance(resolution, bool) or int(resolution) != resolution:
        raise ConfigError(f"resolution must be an integer, got {resolution!r}")
    resolution = int(resolution)
    if resolution < MIN_RESOLUTION:
        raise ConfigError(
            f"resolution {resolution} below minimum of {MIN_RESOLUTION} points per dimension")
    c0 = float(c0)
    if not (np.isfinite(c0) and c0 > 0):
        raise ConfigError(f"scale factor c0 must be positive, got {c0}")

    if kind.is_sphere:
        if n != 2:
            raise ConfigError(f"{kind.value} supports n=2 only (zonal fields), got n={n}")
        theta = np.linspace(0.0, np.pi, resolution)
        return Geometry(kind, n, resolution, c0, (np.pi,), (theta,), (np.pi / (resolution - 1),))

    if n not in (1, 2):
        raise ConfigError(f"{kind.value} supports n in (1, 2), got n={n}")
    if extents is None:
        extents = (2.0 * np.pi,) * n
    elif np.isscalar(extents):
        extents = (float(extents),) * n
    extents = tuple(float(e) for e in extents)
    if len(extents) != n or not all(np.isfinite(e) and e > 0 for e in extents):
        raise ConfigError(f"need {n} positive extents, got {extents}")
    axes = [np.arange(resolution) * (L / resolution) for L in extents]
    coords = tuple(np.meshgrid(*axes, indexing="ij"))
    spacing = tuple(L / resolution for L in extents)
    return Geometry(kind, n, resolution, c0, extents, coords, spacing)


def _values(geom, fld):
    u = np.asarray(fld, dtype=float)
    if u.shape != geom.shape:
        raise ValueError(f"field shape {u.shape} does not match grid shape {geom.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("field contains NaN or Inf")
    return u


# --- raw stencils (no validation; used by the integrator's hot loop) ---------------------------

def _d1(geom, u, axis):
    h = geom.spacing[axis]
    if geom.kind.is_sphere:
        # even reflection across both poles: u[-1] = u[1], u[N] = u[N-2]
        p = np.pad(u, 1, mode="reflect")
        return (p[2:] - p[:-2]) / (2.0 * h)
    return (np.roll(u, -1, axis) - np.roll(u, 1, axis)) / (2.0 * h)


def _d2(geom, u, axis):
    h = geom.spacing[axis]
    if geom.kind.is_sphere:
        p = np.pad(u, 1, mode="reflect")
        return (p[2:] - 2.0 * u + p[:-2]) / h**2
    return (np.roll(u, -1, axis) - 2.0 * u + np.roll(u, 1, axis)) / h**2


def _cot_theta(geom):
    theta = geom.coords[0]
    with np.errstate(divide="ignore"):
        cot = np.cos(theta) / np.sin(theta)
    cot[0] = cot[-1] = np.nan
    return cot


def _sphere_hess_diag(geom, u, c):
    u_tt = _d2(geom, u, 0)
    u_t = _d1(geom, u, 0)
    azimuthal = _cot_theta(geom) * u_t
    # L'Hopital at the poles: cot(theta) u_theta -> u_thetatheta
    azimuthal[0] = u_tt[0]
    azimuthal[-1] = u_tt[-1]
    return u_tt / c, azimuthal / c


def _lap(geom, u, c):
    if geom.kind.is_sphere:
        a, b = _sphere_hess_diag(geom, u, c)
        return a + b
    out = _d2(geom, u, 0)
    for k in range(1, geom.n):
        out = out + _d2(geom, u, k)
    return out / c


def _grad(geom, u, c):
    if geom.kind.is_sphere:
        return np.stack([_d1(geom, u, 0) / np.sqrt(c), np.zeros_like(u)])
    return np.stack([_d1(geom, u, k) for k in range(geom.n)]) / np.sqrt(c)


def _grad_norm_sq(geom, u, c):
    return np.sum(_grad(geom, u, c) ** 2, axis=0)


def _grad_norm_sq_split(geom, u, c):
    """Mean of squared forward and backward differences.

    Second order like the central form, but its truncation error matches that of -log of the
    f-equation's Laplacian stencil more closely, so u-form and f-form solutions stay consistent.
    """
    out = np.zeros_like(u)
    for k in range(geom.n if not geom.kind.is_sphere else 1):
        h = geom.spacing[k]
        if geom.kind.is_sphere:
            p = np.pad(u, 1, mode="reflect")
            fwd, bwd = p[2:] - u, u - p[:-2]
        else:
            fwd, bwd = np.roll(u, -1, k) - u, u - np.roll(u, 1, k)
        out = out + 0.5 * (fwd**2 + bwd**2) / h**2
    return out / c


def _hess(geom, u, c):
    out = np.zeros(u.shape + (geom.n, geom.n))
    if geom.kind.is_sphere:
        out[..., 0, 0], out[..., 1, 1] = _sphere_hess_diag(geom, u, c)
        return out
    for i in range(geom.n):
        out[..., i, i] = _d2(geom, u, i) / c
    if geom.n == 2:
        mixed = _d1(geom, _d1(geom, u, 0), 1) / c
        out[..., 0, 1] = out[..., 1, 0] = mixed
    return out


# --- public evaluators ----------------------------------------------------------------------

def laplacian(geom, fld, t):
    """Laplace-Beltrami operator of g(t), second-order central differences."""
    return _lap(geom, _values(geom, fld), geom.check_time(t))


def gradient(geom, fld, t):
    """Orthonormal-frame components of the gradient, shape ``(n, *grid)``."""
    return _grad(geom, _values(geom, fld), geom.check_time(t))


def grad_norm_sq(geom, fld, t):
    """|grad u|^2 with respect to g(t)."""
    return _grad_norm_sq(geom, _values(geom, fld), geom.check_time(t))


def hessian(geom, fld, t):
    """Covariant Hessian in an orthonormal frame of g(t), shape ``(*grid, n, n)``.

    On the sphere the Christoffel term gives the azimuthal entry ``cot(theta) u_theta / c``;
    the trace is exactly :func:`laplacian`.
    """
    return _hess(geom, _values(geom, fld), geom.check_time(t))


def scalar_S(geom, t):
    """Trace S = g^{ij} S_ij."""
    c = geom.check_time(t)
    n = geom.n
    if geom.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
        value = n * (n - 1) / c
    elif geom.kind is GeometryKind.SYNTHETIC_NEGATIVE:
        value = -float(n)
    else:
        value = 0.0
    return np.full(geom.shape, value)


def dS_dt(geom, t):
    """Exact time derivative of :func:`scalar_S`."""
    c = geom.check_time(t)
    n = geom.n
    if geom.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
        # S = n(n-1)/c, c' = -2(n-1)
        value = 2.0 * n * (n - 1) ** 2 / c**2
    else:
        value = 0.0
    return np.full(geom.shape, value)


def _frame_multiple(geom, value):
    out = np.zeros(geom.shape + (geom.n, geom.n))
    out[..., np.arange(geom.n), np.arange(geom.n)] = value
    return out


def s_tensor(geom, t):
    """S_ij in an orthonormal frame of g(t)."""
    c = geom.check_time(t)
    if geom.kind is GeometryKind.SPHERE_RICCI_SHRINKING:
        return _frame_multiple(geom, (geom.n - 1) / c)
    if geom.kind is GeometryKind.SYNTHETIC_NEGATIVE:
        return _frame_multiple(geom, -1.0)
    return _frame_multiple(geom, 0.0)


def ricci(geom, t):
    """Ricci tensor R_ij of g(t) in an orthonormal frame."""
    c = geom.check_time(t)
    if geom.kind.is_sphere:
        # Ric = (n-1) g_round = ((n-1)/c) g
        return _frame_multiple(geom, (geom.n - 1) / c)
    return _frame_multiple(geom, 0.0)


def s_norm_sq(geom, t):
    """|S_ij|^2_g."""
    s = s_tensor(geom, t)
    return np.einsum("...ij,...ij->...", s, s)


def grad_S(geom, t):
    """grad S, through the same stencils as any other field (exactly zero on these backends)."""
    return gradient(geom, scalar_S(geom, t), t)


def laplacian_S(geom, t):
    return laplacian(geom, scalar_S(geom, t), t)


def div_S(geom, t):
    """nabla^i S_{il}; every backend has S_ij = s(t) g_ij, so this equals grad s = 0."""
    geom.check_time(t)
    return np.zeros((geom.n,) + geom.shape)


def contract(tensor, x, y):
    """T(X, Y) pointwise for frame components."""
    return np.einsum("...ij,i...,j...->...", tensor, x, y)


def dot(x, y):
    return np.sum(np.asarray(x) * np.asarray(y), axis=0)


def make_vector_field(geom, components):
    """Validate frame components ``(n, *grid)`` of a vector field."""
    x = np.asarray(components, dtype=float)
    if x.shape != (geom.n,) + geom.shape:
        raise ValueError(f"vector field shape {x.shape}, expected {(geom.n,) + geom.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector field contains NaN or Inf")
    return x


def sample_vector_fields(geom, count, seed, bound=1.0):
    """Seeded random vector fields with frame components uniform in [-bound, bound]."""
    rng = np.random.default_rng(seed)
    return [rng.uniform(-bound, bound, size=(geom.n,) + geom.shape) for _ in range(count)]
