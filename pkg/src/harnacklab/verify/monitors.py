"""Inequality monitors for the Harnack estimates and scans of their hypotheses."""

from dataclasses import dataclass, field

import numpy as np

from .. import geometry as geo
from .. import harnack as hk
from ..errors import ConfigError, HypothesisViolation

HYPOTHESIS_TOL = 1e-10

# thresholds that turn "value <= threshold" into a strict inequality
STRICTLY_NEGATIVE = float(np.nextafter(0.0, -1.0))
STRICTLY_BELOW_ONE = float(np.nextafter(1.0, 0.0))

HYPOTHESIS_LABELS = {
    "2H+D": "2H + D ≥ 0",
    "S": "S ≥ 0",
    "I": "I ≥ 0",
}

THEOREMS = ("A", "B", "C", "A_v", "B_v")


@dataclass(frozen=True)
class MonitorRow:
    t: float
    monitor: str
    value: float
    threshold: float

    @property
    def passed(self):
        return bool(self.value <= self.threshold)


@dataclass
class MonitorReport:
    """Monitor rows plus the parameters of the tolerance model (C, h, dt, sampling)."""

    name: str
    rows: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    minima: dict = field(default_factory=dict)

    @property
    def verdict(self):
        return all(r.passed for r in self.rows)

    def failures(self):
        return [r for r in self.rows if not r.passed]

    def extend(self, other):
        self.rows.extend(other.rows)
        for k, v in other.minima.items():
            self.minima[k] = min(v, self.minima.get(k, np.inf))


def _hypothesis_values(geom, t, X):
    out = {}
    out["2H+D"] = 2.0 * hk.mueller_H(geom, X, t) + hk.mueller_D(geom, X, t)
    out["I"] = hk.cal_I(geom, X, t)
    return out


def condition_scan(geom, t_grid, X_samples, hypotheses=("2H+D", "S", "I"), tol=HYPOTHESIS_TOL):
    """Minimum over the grid, times and sampled X of 2H + D, S and I.

    Each row records the deficit ``-min`` of one hypothesis at one time against ``tol``, so a
    row passes iff that minimum is >= -tol.
    """
    X_samples = list(X_samples)
    if not X_samples:
        raise ConfigError("condition_scan needs at least one sampled vector field")
    unknown = set(hypotheses) - set(HYPOTHESIS_LABELS)
    if unknown:
        raise ConfigError(f"unknown hypotheses {sorted(unknown)}")
    t_grid = [float(t) for t in t_grid]
    if not t_grid:
        raise ConfigError("condition_scan needs at least one time")
    for t in t_grid:
        if not 0 < t < geom.t_sing:
            raise ConfigError(f"scan time {t} outside (0, {geom.t_sing})")

    report = MonitorReport("condition_scan", params={"samples": len(X_samples), "tol": tol})
    for t in t_grid:
        mins = {}
        if "S" in hypotheses:
            mins["S"] = float(geo.scalar_S(geom, t).min())
        for X in X_samples:
            values = _hypothesis_values(geom, t, X)
            for key in ("2H+D", "I"):
                if key in hypotheses:
                    mins[key] = min(mins.get(key, np.inf), float(values[key].min()))
        for key in hypotheses:
            report.rows.append(MonitorRow(t, f"deficit_{key}", -mins[key], tol))
            report.minima[key] = min(mins[key], report.minima.get(key, np.inf))
    return report


def describe_failures(report):
    parts = []
    for key, label in HYPOTHESIS_LABELS.items():
        if key in report.minima and report.minima[key] < -report.params.get("tol", HYPOTHESIS_TOL):
            parts.append(f"hypothesis {label} violated (min {key} = {report.minima[key]:.6g})")
    return "; ".join(parts)


def monitored_times(trajectory, t_min=None, t_max=None):
    times = trajectory.times
    positive = times[times > 0]
    if t_min is None:
        if positive.size == 0:
            raise ConfigError("trajectory has no snapshot at t > 0")
        t_min = positive[0]
    if not t_min > 0:
        raise ConfigError(f"t_min must be positive, got {t_min}")
    t_max = times[-1] if t_max is None else t_max
    sel = times[(times >= t_min) & (times <= t_max * (1 + 1e-12))]
    if sel.size == 0:
        raise ConfigError(f"no snapshots in [{t_min}, {t_max}]")
    return [float(t) for t in sel]


def _check_hypotheses(trajectory, theorem, times, x_count, seed):
    problem = trajectory.problem
    geom = problem.geometry
    gamma = problem.gamma
    base = theorem[0]
    problems = []

    if base in "AB" and problem.a != 1.0:
        problems.append(f"Theorem {base} concerns the equation with a = 1 (got a = {problem.a})")
    if base == "A":
        bad = [t for t in times if not gamma.window_holds(t)]
        if bad:
            problems.append(
                f"gamma window -2/t ≤ gamma(t) ≤ 0 fails at t = {bad[0]:.6g}")
    if base == "B" and not (gamma.is_constant and gamma(1.0) == -1.0):
        problems.append("Theorem B needs gamma ≡ -1")
    if base == "C":
        if problem.a != 0.0:
            problems.append(f"Theorem C concerns the equation with a = 0 (got a = {problem.a})")
        if any(gamma(t) > 0 for t in [problem.t0] + times):
            problems.append("Theorem C needs gamma(t) ≤ 0")
        if not (np.all(problem.f0 > 0) and np.all(problem.f0 < 1)):
            problems.append("Theorem C needs 0 < f < 1 initially")

    hypotheses = ("I",) if base == "C" else ("2H+D", "S")
    random_X = geo.sample_vector_fields(geom, x_count, seed)
    scan = MonitorReport("condition_scan", params={"samples": x_count + 1, "seed": seed,
                                                   "tol": HYPOTHESIS_TOL})
    for t in times:
        X_t = random_X + [-geo.gradient(geom, trajectory.u_at(t), t)]
        scan.extend(condition_scan(geom, [t], X_t, hypotheses))
    if not scan.verdict:
        problems.append(describe_failures(scan))
    if problems:
        raise HypothesisViolation(f"Theorem {theorem}: " + "; ".join(problems), scan)
    return scan


def check_inequality(trajectory, theorem, tolerance_C=10.0, t_min=None, t_max=None, d=2.0,
                     x_count=32, seed=0):
    """Monitor one Harnack inequality on every snapshot in [t_min, t_max].

    Refuses with :class:`HypothesisViolation` if the theorem's hypotheses fail on the sampled
    vector fields or gamma schedule.  Thresholds carry the allowance tau = tolerance_C * h^2.
    """
    if theorem not in THEOREMS:
        raise ConfigError(f"unknown theorem {theorem!r}; choose from {THEOREMS}")
    geom = trajectory.geometry
    n = geom.n
    times = monitored_times(trajectory, t_min, t_max)
    scan = _check_hypotheses(trajectory, theorem, times, x_count, seed)

    tau = tolerance_C * geom.h**2
    dts = trajectory.step_sizes
    report = MonitorReport(
        f"theorem_{theorem}",
        params={"C": tolerance_C, "h": geom.h, "tau": tau, "d": d,
                "dt_max": max(dts) if dts else 0.0, "x_samples": x_count, "seed": seed,
                "t_min": times[0]})
    report.minima.update(scan.minima)
    coeffs = hk.THEOREM_A.with_(d=d)
    for k, t in enumerate(times):
        if theorem == "C":
            u = trajectory.u_at(t)
            value = float(hk.li_yau(geom, u, t).max())
            rows = [MonitorRow(t, "harC_max", value, tau)]
            f = trajectory.f_at(t)
            rows.append(MonitorRow(t, "harC_f_max", float(f.max()), STRICTLY_BELOW_ONE))
            rows.append(MonitorRow(t, "harC_neg_f_min", float(-f.min()), STRICTLY_NEGATIVE))
        else:
            if theorem.endswith("_v"):
                value = float(hk.r_quantity(geom, trajectory.v_at(t), t, coeffs).max())
            else:
                value = float(hk.q_quantity(geom, trajectory.u_at(t), t, coeffs).max())
            bound = 0.0 if theorem[0] == "A" else n / 4.0
            rows = [MonitorRow(t, f"har{theorem}_max", value, bound + tau)]
            if theorem[0] == "B":
                # Q_S + (n/4) gamma with gamma = -1
                rows.append(MonitorRow(t, f"har{theorem}_shifted_max", value - n / 4.0, tau))
        if k == 0:
            rows.append(MonitorRow(t, f"har{theorem}_small_t", value, STRICTLY_NEGATIVE))
        report.rows.extend(rows)
    return report
