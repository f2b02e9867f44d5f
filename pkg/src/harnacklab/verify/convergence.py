"""Independent oracles and grid-refinement studies."""

from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo
from .. import harnack as hk
from ..errors import ConfigError
from ..evolution import integrate
from ..scenarios import fourier_series
from . import residuals as res


def spectral_oracle_circle(cos_coeffs, t, x_samples, sin_coeffs=()):
    """Exact solution of f_t = f_xx on the unit circle from finitely many Fourier modes."""
    cos_coeffs = np.asarray(cos_coeffs, dtype=float)
    sin_coeffs = np.asarray(sin_coeffs, dtype=float)
    if cos_coeffs.ndim != 1 or sin_coeffs.ndim != 1:
        raise ValueError("Fourier coefficients must be flat sequences")
    if not (np.all(np.isfinite(cos_coeffs)) and np.all(np.isfinite(sin_coeffs))):
        raise ValueError("Fourier coefficients must be finite")
    if t < 0:
        raise ValueError(f"oracle time must be >= 0, got {t}")
    return fourier_series(cos_coeffs, sin_coeffs, x_samples, decay_time=t)


# generic coefficients exercising every term of the general identity
GENERIC = hk.HarnackCoefficients(alpha=1.5, beta=0.5, a=0.7, b=0.3, d=1.2)

DEFAULT_METRICS = ("solver", "prop", "thm2_lam0", "thm2_lam2", "cor_u_aQ-3", "cor_u_aQ0",
                   "cor_v", "thm2_v", "bochner", "q_eigen")


@dataclass
class ConvergenceReport:
    resolutions: list
    errors: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    pairwise: dict = field(default_factory=dict)
    t_eval: float = 0.0


def fitted_order(resolutions, errors):
    """Least-squares slope of -log(error) against log(resolution)."""
    e = np.asarray(errors, dtype=float)
    if np.any(~np.isfinite(e)) or np.any(e <= 0):
        return float("nan")
    return float(-np.polyfit(np.log(resolutions), np.log(e), 1)[0])


def pairwise_orders(resolutions, errors):
    out = []
    for (n0, e0), (n1, e1) in zip(zip(resolutions, errors), zip(resolutions[1:], errors[1:])):
        out.append(float(np.log(e0 / e1) / np.log(n1 / n0)) if e0 > 0 and e1 > 0 else float("nan"))
    return out


def _restrict(fine_geom, fine, coarse_geom):
    """Sample a fine-grid field at the nodes of a coarser grid."""
    if fine_geom.kind.is_sphere:
        nf, nc = fine_geom.resolution - 1, coarse_geom.resolution - 1
        if nf % nc == 0:
            return fine[:: nf // nc]
        return np.interp(coarse_geom.coords[0], fine_geom.coords[0], fine)
    step = fine_geom.resolution // coarse_geom.resolution
    return fine[tuple(slice(None, None, step) for _ in fine.shape)]


def _residual_metric(name, traj, t, a_heat):
    if name == "prop":
        return res.residual_prop(traj, GENERIC.with_(c=a_heat), t=t)
    if name.startswith("thm2_lam"):
        lam = float(name[len("thm2_lam"):])
        return res.residual_thm2(traj, GENERIC.with_(c=a_heat), lam=lam, t=t)
    if name == "thm2_v":
        return res.residual_thm2(traj, GENERIC.with_(c=a_heat), lam=2.0, t=t, form="v")
    if name.startswith("cor_u_aQ"):
        return res.residual_cor(traj, float(name[len("cor_u_aQ"):]), 2.0, t=t)
    if name == "cor_v":
        return res.residual_cor(traj, a_heat - 4.0, 2.0, t=t, form="v")
    if name == "bochner":
        return res.residual_bochner(traj.geometry, traj.u_at(t), t)
    raise ConfigError(f"unknown convergence metric {name!r}")


def _eigen_error(geom, t):
    """Error of Q_S (alpha=2, beta=1, a=-3, d=2) on u = cos(first coordinate) at time t."""
    x = geom.coords[0]
    c = geom.scale(t)
    # cos(theta) has eigenvalue 2 on the round sphere, cos(x) eigenvalue 1 on the torus
    eig = 2.0 if geom.kind.is_sphere else 1.0
    exact = (-2.0 * eig * np.cos(x) / c - np.sin(x) ** 2 / c - 3.0 * geo.scalar_S(geom, t)
             - 2.0 * geom.n / t)
    return hk.q_quantity(geom, np.cos(x), t, hk.THEOREM_A) - exact


def refinement_study(scenario, resolutions, metrics=DEFAULT_METRICS, t_eval=None, delta=1e-3):
    """Max-norm errors and fitted convergence orders over ``resolutions``.

    ``solver`` compares the final state with the Fourier oracle when the scenario has one, else
    with the finest grid restricted to each coarser one.  Residual metrics are evaluated at
    ``t_eval`` (default: half of ``t_end``) from snapshots ``t_eval +- delta``.
    """
    resolutions = [int(r) for r in resolutions]
    if len(resolutions) < 3:
        raise ConfigError(f"a refinement study needs at least 3 resolutions, got {len(resolutions)}")
    if any(r < geo.MIN_RESOLUTION for r in resolutions):
        raise ConfigError(f"every resolution must be >= {geo.MIN_RESOLUTION}")
    if sorted(set(resolutions)) != resolutions:
        raise ConfigError("resolutions must be strictly increasing")
    if t_eval is None:
        t_eval = 0.5 * (scenario.t0 + scenario.t_end)
    if not (scenario.t0 < t_eval - delta and t_eval + delta < scenario.t_end):
        raise ConfigError(f"t_eval +- delta must lie inside ({scenario.t0}, {scenario.t_end})")

    report = ConvergenceReport(resolutions, t_eval=t_eval)
    finals = {}
    for N in resolutions:
        traj = integrate(scenario.problem(N), scenario.t_end, scenario.cfl_sigma,
                         [t_eval - delta, t_eval, t_eval + delta])
        finals[N] = traj
        for name in metrics:
            if name == "solver":
                continue
            if name == "q_eigen":
                err = _eigen_error(traj.geometry, t_eval)
            else:
                err = _residual_metric(name, traj, t_eval, scenario.a)
            report.errors.setdefault(name, []).append(float(np.max(np.abs(err))))

    if "solver" in metrics:
        errs = []
        if scenario.has_fourier_oracle:
            cos, sin = scenario.initial.fourier_coefficients()
            for N in resolutions:
                traj = finals[N]
                exact = spectral_oracle_circle(cos, scenario.t_end, traj.geometry.coords[0], sin)
                errs.append(float(np.max(np.abs(traj.f_at(scenario.t_end) - exact))))
        else:
            # no closed form: compare against the finest grid
            fine = finals[resolutions[-1]]
            ref = fine.f_at(scenario.t_end)
            for N in resolutions[:-1]:
                coarse = finals[N]
                restricted = _restrict(fine.geometry, ref, coarse.geometry)
                errs.append(float(np.max(np.abs(coarse.f_at(scenario.t_end) - restricted))))
            errs.append(float("nan"))
        report.errors = {"solver": errs, **report.errors}

    for name, errs in report.errors.items():
        usable = [(N, e) for N, e in zip(resolutions, errs) if np.isfinite(e)]
        Ns, es = [p[0] for p in usable], [p[1] for p in usable]
        report.orders[name] = fitted_order(Ns, es) if len(Ns) >= 2 else float("nan")
        report.pairwise[name] = pairwise_orders(Ns, es)
    return report
