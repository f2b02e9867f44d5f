"""Initial-data presets and the scenario description shared by studies and the CLI."""

from dataclasses import dataclass, field

import numpy as np

from . import geometry as geo
from .errors import ConfigError
from .evolution import GammaSchedule, HeatProblem

INITIAL_KINDS = ("constant", "fourier", "zonal", "product")


@dataclass(frozen=True)
class InitialData:
    """Positive initial f.

    * ``constant``: ``mean`` everywhere
    * ``fourier``: mean + sum_k cos_k cos(k x) + sin_k sin(k x) along the first coordinate
      (``cos[0]`` is ignored in favour of ``mean`` when both are given)
    * ``zonal``: mean + amp cos(theta) on a sphere
    * ``product``: mean + amp cos(x) cos(y) + amp2 sin(y) on a 2-torus
    """

    kind: str = "fourier"
    mean: float = 0.5
    cos: tuple = (0.0, 0.25)
    sin: tuple = ()
    amp: float = 0.25
    amp2: float = 0.0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial-data kind {self.kind!r}; choose from {INITIAL_KINDS}")
        object.__setattr__(self, "cos", tuple(float(v) for v in self.cos))
        object.__setattr__(self, "sin", tuple(float(v) for v in self.sin))

    def fourier_coefficients(self):
        cos = list(self.cos) or [0.0]
        cos[0] = self.mean
        sin = list(self.sin)
        return cos, sin

    def sample(self, geom):
        x = geom.coords[0]
        if self.kind == "constant":
            return np.full(geom.shape, float(self.mean))
        if self.kind == "fourier":
            cos, sin = self.fourier_coefficients()
            return fourier_series(cos, sin, x)
        if self.kind == "zonal":
            if not geom.kind.is_sphere:
                raise ConfigError("zonal initial data needs a sphere backend")
            return self.mean + self.amp * np.cos(x)
        if geom.n != 2 or geom.kind.is_sphere:
            raise ConfigError("product initial data needs a 2-torus backend")
        y = geom.coords[1]
        return self.mean + self.amp * np.cos(x) * np.cos(y) + self.amp2 * np.sin(y)


def fourier_series(cos, sin, x, decay_time=0.0):
    """sum_k cos[k] e^{-k^2 t} cos(k x) + sin[k] e^{-k^2 t} sin(k x)."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for k, ak in enumerate(cos):
        out = out + ak * np.exp(-k * k * decay_time) * np.cos(k * x)
    for k, bk in enumerate(sin):
        if k:
            out = out + bk * np.exp(-k * k * decay_time) * np.sin(k * x)
    return out


@dataclass(frozen=True)
class Scenario:
    """Everything needed to build and integrate one heat problem at a chosen resolution."""

    kind: str = "flat_torus_static"
    n: int = 1
    c0: float = 1.0
    extents: tuple = None
    a: float = 0.0
    gamma: GammaSchedule = field(default_factory=GammaSchedule)
    initial: InitialData = field(default_factory=InitialData)
    representation: str = "f"
    t0: float = 0.0
    t_end: float = 1.0
    cfl_sigma: float = 0.25
    f_floor: float = 1e-12

    def geometry(self, resolution):
        return geo.make_geometry(self.kind, self.n, resolution, self.c0, self.extents)

    def problem(self, resolution):
        geom = self.geometry(resolution)
        return HeatProblem(geom, self.initial.sample(geom), a=self.a, gamma=self.gamma,
                           representation=self.representation, t0=self.t0, f_floor=self.f_floor)

    @property
    def has_fourier_oracle(self):
        """The circle heat equation with no reaction or potential has a closed-form solution."""
        return (self.kind == "flat_torus_static" and self.n == 1 and self.initial.kind == "fourier"
                and self.gamma.kind == "zero" and self.a == 0.0 and self.c0 == 1.0
                and (self.extents is None or np.allclose(self.extents, 2 * np.pi)))
