"""Method-of-lines integration of the forward nonlinear heat equation with potential.

The three equivalent representations are

* ``f``:  f_t = lap f + gamma(t) f log f + a S f
* ``u``:  u_t = lap u - |grad u|^2 + gamma(t) u - a S,                     u = -log f
* ``v``:  v_t = lap v - |grad v|^2 - a S - n/(2t) + gamma(t) (v + n/2 log(4 pi t)),
  v = u - n/2 log(4 pi t)

all along a backend's flow g(t) = c(t) g_ref, advanced with classical RK4.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import geometry as geo
from .errors import ConfigError, NumericalFailure


class GammaValue(NamedTuple):
    value: float
    in_window: bool


@dataclass(frozen=True)
class GammaSchedule:
    """The coefficient gamma(t) of the f log f term.

    ``zero``: 0; ``constant``: ``value``; ``cz_shift``: -2/(t + s).
    """

    kind: str = "zero"
    value: float = 0.0
    s: float = 2.0

    def __post_init__(self):
        if self.kind not in ("zero", "constant", "cz_shift"):
            raise ConfigError(f"unknown gamma kind {self.kind!r}")
        if self.kind == "cz_shift" and not self.s > 0:
            raise ConfigError(f"cz_shift needs s > 0, got {self.s}")
        if not np.isfinite(self.value):
            raise ConfigError("gamma value must be finite")

    def __call__(self, t):
        if self.kind == "constant":
            return float(self.value)
        if self.kind == "cz_shift":
            return -2.0 / (t + self.s)
        return 0.0

    def window_holds(self, t):
        """Whether -2/t <= gamma(t) <= 0 at t > 0."""
        g = self(t)
        return bool(-2.0 / t <= g <= 0.0)

    @property
    def is_constant(self):
        return self.kind != "cz_shift"


def eval_gamma(schedule, t):
    if not t > 0:
        raise ConfigError(f"gamma is evaluated on t > 0 only, got t={t}")
    return GammaValue(schedule(t), schedule.window_holds(t))


class Representation(str, Enum):
    F = "f"
    U = "u"
    V = "v"


def u_from_f(f):
    f = np.asarray(f, dtype=float)
    if not np.all(f > 0):
        raise ValueError("u = -log f needs strictly positive f")
    return -np.log(f)


def v_from_f(f, t, n):
    if not t > 0:
        raise ValueError(f"v needs t > 0, got t={t}")
    return u_from_f(f) - 0.5 * n * np.log(4.0 * np.pi * t)


def v_from_u(u, t, n):
    if not t > 0:
        raise ValueError(f"v needs t > 0, got t={t}")
    return np.asarray(u, dtype=float) - 0.5 * n * np.log(4.0 * np.pi * t)


def u_from_v(v, t, n):
    return np.asarray(v, dtype=float) + 0.5 * n * np.log(4.0 * np.pi * t)


@dataclass(frozen=True, eq=False)
class HeatProblem:
    """Initial-value problem for the heat equation along ``geometry``'s flow.

    ``f0`` is always given as positive f-samples; the integrator converts it to the chosen
    ``representation``.  ``a`` is the coefficient of S f in the f-equation (the u-equation
    then carries -a S).
    """

    geometry: geo.Geometry
    f0: np.ndarray
    a: float = 0.0
    gamma: GammaSchedule = field(default_factory=GammaSchedule)
    representation: Representation = Representation.F
    t0: float = 0.0
    f_floor: float = 1e-12

    def __post_init__(self):
        f0 = geo._values(self.geometry, self.f0).copy()
        if not np.all(f0 > 0):
            raise ConfigError("initial data must be strictly positive")
        f0.setflags(write=False)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "representation", Representation(self.representation))
        if self.t0 < 0:
            raise ConfigError(f"t0 must be >= 0, got {self.t0}")
        if self.representation is Representation.V and not self.t0 > 0:
            raise ConfigError("v-form needs t0 > 0 since log(4 pi t) is singular at 0")
        self.geometry.check_time(self.t0)

    def initial_state(self):
        if self.representation is Representation.F:
            return self.f0.copy()
        if self.representation is Representation.U:
            return u_from_f(self.f0)
        return v_from_f(self.f0, self.t0, self.geometry.n)


@dataclass(eq=False)
class Trajectory:
    """Snapshots (t, ScalarField) in the problem's representation, strictly increasing in t."""

    problem: HeatProblem
    snapshots: list
    step_sizes: list

    @property
    def times(self):
        return np.array([s.t for s in self.snapshots])

    @property
    def geometry(self):
        return self.problem.geometry

    def index(self, t, rtol=1e-12):
        times = self.times
        i = int(np.argmin(np.abs(times - t)))
        if abs(times[i] - t) > rtol * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return i

    def at(self, t):
        return self.snapshots[self.index(t)]

    def _state_as(self, snap, rep):
        n = self.geometry.n
        own = self.problem.representation
        x = snap.values
        if own is Representation.F:
            u = u_from_f(x)
        elif own is Representation.U:
            u = x
        else:
            u = u_from_v(x, snap.t, n)
        if rep == "f":
            return x if own is Representation.F else np.exp(-u)
        if rep == "u":
            return u
        return v_from_u(u, snap.t, n)

    def f_at(self, t):
        return self._state_as(self.at(t), "f")

    def u_at(self, t):
        return self._state_as(self.at(t), "u")

    def v_at(self, t):
        return self._state_as(self.at(t), "v")


def _rhs(problem):
    geom = problem.geometry
    a = problem.a
    gamma = problem.gamma
    n = geom.n
    rep = problem.representation

    def f_rhs(t, f):
        c = geom.scale(t)
        S = geo.scalar_S(geom, t)
        return geo._lap(geom, f, c) + gamma(t) * f * np.log(f) + a * S * f

    def u_rhs(t, u):
        c = geom.scale(t)
        S = geo.scalar_S(geom, t)
        return geo._lap(geom, u, c) - geo._grad_norm_sq_split(geom, u, c) + gamma(t) * u - a * S

    def v_rhs(t, v):
        c = geom.scale(t)
        S = geo.scalar_S(geom, t)
        shift = 0.5 * n * np.log(4.0 * np.pi * t)
        return (geo._lap(geom, v, c) - geo._grad_norm_sq_split(geom, v, c) - a * S
                - 0.5 * n / t + gamma(t) * (v + shift))

    return {Representation.F: f_rhs, Representation.U: u_rhs, Representation.V: v_rhs}[rep]


def stable_step(geom, t, cfl_sigma):
    """Diffusion-limited step sigma * c(t) h^2 / (2n) with h the finest grid spacing."""
    return cfl_sigma * geom.scale(t) * min(geom.spacing) ** 2 / (2.0 * geom.n)


def integrate(problem, t_end, cfl_sigma=0.25, snapshot_times=None):
    """Integrate ``problem`` from ``t0`` to ``t_end`` with RK4, landing exactly on snapshots.

    The returned trajectory always contains ``t0`` and ``t_end``.  Raises
    :class:`NumericalFailure` on positivity loss (f-form: min f <= f_floor) or non-finite values.
    """
    geom = problem.geometry
    t0 = float(problem.t0)
    t_end = float(t_end)
    if not t_end > t0:
        raise ConfigError(f"t_end={t_end} must exceed t0={t0}")
    if t_end >= geom.t_sing:
        raise ConfigError(f"t_end={t_end} is not before the singular time {geom.t_sing}")
    if not cfl_sigma > 0:
        raise ConfigError(f"cfl_sigma must be positive, got {cfl_sigma}")

    targets = {t_end}
    for s in snapshot_times if snapshot_times is not None else ():
        s = float(s)
        if s < t0 or s > t_end:
            raise ConfigError(f"snapshot time {s} outside [{t0}, {t_end}]")
        if s > t0:
            targets.add(s)
    targets = sorted(targets)

    rhs = _rhs(problem)
    is_f = problem.representation is Representation.F
    y = problem.initial_state()
    t = t0
    snapshots = [geo.ScalarField(y.copy(), geom, t)]
    steps = []

    def check(state, t_now):
        if not np.all(np.isfinite(state)):
            raise NumericalFailure("non-finite values in solution", t_now)
        if is_f and state.min() <= problem.f_floor:
            raise NumericalFailure(
                f"positivity lost: min f = {state.min():.3e} <= f_floor = {problem.f_floor:.1e}",
                t_now)

    with np.errstate(all="ignore"):
        for target in targets:
            while t < target:
                dt = stable_step(geom, t, cfl_sigma)
                last = t + dt >= target * (1.0 - 1e-14)
                if last:
                    dt = target - t
                k1 = rhs(t, y)
                k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
                k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
                k4 = rhs(t + dt, y + dt * k3)
                y = y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                t = target if last else t + dt
                steps.append(dt)
                check(y, t)
            snapshots.append(geo.ScalarField(y.copy(), geom, t))
    return Trajectory(problem, snapshots, steps)
