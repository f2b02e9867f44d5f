"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a single PASS/FAIL line; the lines are printed in pytest's terminal
summary (see conftest.py) and when this file is run as a script.
"""

import time

import numpy as np
import pytest

from harnacklab import cli
from harnacklab import geometry as geo
from harnacklab import harnack as hk
from harnacklab.evolution import GammaSchedule, HeatProblem, integrate, u_from_f, v_from_u
from harnacklab.scenarios import Scenario
from harnacklab.verify import convergence as conv
from harnacklab.verify import monitors as mon
from harnacklab.verify import residuals as res

from conftest import BACKENDS, smooth_field

RESULTS = {}


def record(number, title, ok, detail):
    RESULTS[number] = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}: {title} ({detail})"
    assert ok, RESULTS[number]


def circle(N, **kw):
    g = geo.make_geometry("flat_torus_static", 1, N)
    return HeatProblem(g, 0.5 + 0.25 * np.cos(g.coords[0]), **kw)


def test_criterion_01_oracle_equivalence():
    start = time.perf_counter()
    traj = integrate(circle(256), 1.0, cfl_sigma=0.25)
    elapsed = time.perf_counter() - start
    exact = conv.spectral_oracle_circle([0.5, 0.25], 1.0, traj.geometry.coords[0])
    err = float(np.max(np.abs(traj.f_at(1.0) - exact)))
    record(1, "circle solver vs Fourier oracle", err <= 1e-4 and elapsed <= 10.0,
           f"max error {err:.3e} <= 1e-4, runtime {elapsed:.2f} s <= 10 s")


def test_criterion_02_convergence_orders():
    rep = conv.refinement_study(Scenario(), [64, 128, 256])
    solver = rep.orders["solver"]
    others = {k: v for k, v in rep.orders.items() if k != "solver"}
    worst = min(others, key=others.get)
    ok = abs(solver - 2.0) <= 0.3 and all(v >= 1.7 for v in others.values())
    record(2, "convergence orders over N = 64, 128, 256", ok,
           f"solver {solver:.3f} in [1.7, 2.3]; lowest of {len(others)} residual/quantity "
           f"orders {others[worst]:.3f} ({worst}) >= 1.7")


@pytest.fixture(scope="module")
def circle256():
    return integrate(circle(256), 1.0, snapshot_times=[0.499, 0.5, 0.501])


def _families(traj, t, coeffs):
    return {
        "prop": res.residual_prop(traj, coeffs, t=t),
        "thm2 lam=0": res.residual_thm2(traj, coeffs, lam=0.0, t=t),
        "thm2 lam=2": res.residual_thm2(traj, coeffs, lam=2.0, t=t),
        "cor u aQ=-3": res.residual_cor(traj, -3.0, 2.0, t=t),
        "cor u aQ=0": res.residual_cor(traj, 0.0, 2.0, t=t),
        "cor v": res.residual_cor(traj, -3.0, 2.0, t=t, form="v"),
        "bochner": res.residual_bochner(traj.geometry, traj.u_at(t), t),
    }


def test_criterion_03_identity_residuals(circle256):
    smooth = {k: float(np.max(v)) for k, v in _families(circle256, 0.5, conv.GENERIC).items()}
    const_max = 0.0
    for N, kind, n in ((32, "flat_torus_static", 1), (16, "flat_torus_static", 2)):
        g = geo.make_geometry(kind, n, N)
        tr = integrate(HeatProblem(g, np.full(g.shape, 0.4)), 1.0,
                       snapshot_times=[0.499, 0.5, 0.501])
        for coeffs in (conv.GENERIC, hk.THEOREM_A):
            const_max = max(const_max, *(float(np.max(v)) for v in
                                         _families(tr, 0.5, coeffs).values()))
    # on the shrinking sphere only a_Q = -3 matches the heat equation with a = 1
    g = geo.make_geometry("sphere_ricci_shrinking", 2, 16)
    tr = integrate(HeatProblem(g, np.full(16, 0.4), a=1.0), 0.3,
                   snapshot_times=[0.199, 0.2, 0.201])
    for r in (res.residual_cor(tr, -3.0, 2.0, t=0.2), res.residual_cor(tr, -3.0, 2.0, t=0.2, form="v"),
              res.residual_thm2(tr, hk.THEOREM_A, t=0.2), res.residual_prop(tr, hk.THEOREM_A, t=0.2)):
        const_max = max(const_max, float(np.max(r)))
    worst = max(smooth, key=smooth.get)
    ok = smooth[worst] <= 1e-3 and const_max <= 1e-10
    record(3, "identity residuals", ok,
           f"smooth circle N=256, t=0.5: max {smooth[worst]:.3e} ({worst}) <= 1e-3; "
           f"constant solutions: max {const_max:.1e} <= 1e-10")


def test_criterion_04_identity_family_coherence(circle256, sphere_traj):
    g2 = geo.make_geometry("flat_torus_static", 2, 32)
    x, y = g2.coords
    torus = integrate(HeatProblem(g2, 0.5 + 0.2 * np.cos(x) * np.cos(y), a=1.0,
                                  gamma=GammaSchedule("cz_shift")), 0.6,
                      snapshot_times=[0.5])
    gc = geo.make_geometry("flat_torus_static", 1, 32)
    const = integrate(HeatProblem(gc, np.full(32, 0.4)), 1.0, snapshot_times=[0.5])
    cases = [(circle256, 0.5, (-3.0, 0.0)), (torus, 0.5, (-3.0,)), (sphere_traj, 0.2, (-3.0,)),
             (const, 0.5, (-3.0, 0.0))]
    worst = 0.0
    for traj, t, a_qs in cases:
        for a_q in a_qs:
            for form in ("u", "v"):
                rhs = res.identity_rhs_family(traj, t, a_q=a_q, form=form)
                worst = max(worst, res.relative_gap(rhs["prop"], rhs["square"]),
                            res.relative_gap(rhs["prop"], rhs["corollary"]),
                            res.relative_gap(rhs["square"], rhs["corollary"]))
    record(4, "prop / completed-square / corollary right-hand sides agree", worst <= 1e-10,
           f"max relative gap {worst:.2e} <= 1e-10 over {len(cases)} trajectories, u and v forms")


def _monitor_runs(gamma):
    g1 = geo.make_geometry("flat_torus_static", 1, 128)
    g2 = geo.make_geometry("flat_torus_static", 2, 48)
    gs = geo.make_geometry("sphere_ricci_shrinking", 2, 64)
    x, y = g2.coords
    runs = [
        ("flat n=1", HeatProblem(g1, 0.5 + 0.25 * np.cos(g1.coords[0]), a=1.0, gamma=gamma), 1.0),
        ("flat n=2", HeatProblem(g2, 0.5 + 0.2 * np.cos(x) * np.cos(y) + 0.1 * np.sin(y), a=1.0,
                                 gamma=gamma), 1.0),
        ("sphere n=2", HeatProblem(gs, 0.6 + 0.3 * np.cos(gs.coords[0]), a=1.0, gamma=gamma),
         min(1.0, 0.9 * gs.t_sing)),
    ]
    for name, prob, t_end in runs:
        times = np.round(np.arange(1, int(round(t_end / 0.01)) + 1) * 0.01, 12)
        yield name, integrate(prob, t_end, snapshot_times=times)


def test_criterion_05_theorem_a():
    worst, margin, count = -np.inf, np.inf, 0
    ok = True
    for gamma in (GammaSchedule(), GammaSchedule("cz_shift", s=2.0)):
        for name, traj in _monitor_runs(gamma):
            rep = mon.check_inequality(traj, "A")
            ok &= rep.verdict
            count += 1
            tau = rep.params["tau"]
            worst = max(worst, max(r.value - tau for r in rep.rows if r.monitor == "harA_max"))
            margin = min(margin, -[r for r in rep.rows if r.monitor == "harA_small_t"][0].value)
    record(5, "Theorem A: max Q_S <= 10 h^2, first snapshot < 0", ok,
           f"{count} runs; max (Q_S - tau) = {worst:.3e}; smallest first-snapshot margin "
           f"{margin:.3e} > 0")


def test_criterion_06_theorem_b():
    ok, worst, count = True, -np.inf, 0
    for name, traj in _monitor_runs(GammaSchedule("constant", -1.0)):
        rep = mon.check_inequality(traj, "B")
        ok &= rep.verdict
        count += 1
        n = traj.geometry.n
        worst = max(worst, max(r.value - r.threshold for r in rep.rows
                               if r.monitor in ("harB_max", "harB_shifted_max")))
    record(6, "Theorem B: max Q_S <= n/4 + 10 h^2 with gamma = -1", ok,
           f"{count} runs; max (value - threshold) = {worst:.3e} <= 0")


def test_criterion_07_theorem_c():
    ok, worst, count, frange = True, -np.inf, 0, (np.inf, -np.inf)
    g1 = geo.make_geometry("flat_torus_static", 1, 128)
    g2 = geo.make_geometry("flat_torus_static", 2, 48)
    x, y = g2.coords
    data = [(g1, 0.5 + 0.25 * np.cos(g1.coords[0])),
            (g2, 0.5 + 0.2 * np.cos(x) * np.cos(y) + 0.1 * np.sin(y))]
    times = np.round(np.arange(1, 101) * 0.01, 12)
    for gamma in (GammaSchedule(), GammaSchedule("constant", -1.0)):
        for g, f0 in data:
            traj = integrate(HeatProblem(g, f0, gamma=gamma), 1.0, snapshot_times=times)
            rep = mon.check_inequality(traj, "C")
            ok &= rep.verdict
            count += 1
            tau = rep.params["tau"]
            worst = max(worst, max(r.value - tau for r in rep.rows if r.monitor == "harC_max"))
            fs = [traj.f_at(t) for t in traj.times]
            frange = (min(frange[0], min(f.min() for f in fs)),
                      max(frange[1], max(f.max() for f in fs)))
            ok &= 0 < frange[0] and frange[1] < 1
    record(7, "Theorem C: |grad u|^2 - u/t <= 10 h^2 and 0 < f < 1", ok,
           f"{count} runs; max (value - tau) = {worst:.3e}; f in [{frange[0]:.4f}, "
           f"{frange[1]:.4f}]")


def test_criterion_08_algebraic_identities(circle256, sphere_traj):
    gaps = {"D(0,0,-1)+2I": 0.0, "R-Q shift": 0.0, "substitution": 0.0, "trace hessian": 0.0}
    min_trace_gap = np.inf
    for kind, n in BACKENDS:
        g = geo.make_geometry(kind, n, 24)
        u = smooth_field(g)
        for t in (0.05, 0.2, 0.4):
            for X in geo.sample_vector_fields(g, 8, seed=11):
                gaps["D(0,0,-1)+2I"] = max(gaps["D(0,0,-1)+2I"], float(np.max(np.abs(
                    hk.d_coeff(g, X, t, 0.0, 0.0, -1.0) + 2 * hk.cal_I(g, X, t)))))
            for b in (0.0, 1.0, 0.37):
                coeffs = hk.THEOREM_A.with_(b=b)
                q = hk.q_quantity(g, u, t, coeffs)
                r = hk.r_quantity(g, v_from_u(u, t, n), t, coeffs)
                shift = b * n / (2 * t) * np.log(4 * np.pi * t)
                gaps["R-Q shift"] = max(gaps["R-Q shift"], float(np.max(np.abs(r - q - shift)))
                                        / max(1.0, float(np.max(np.abs(q)))))
            for d in (2.0, 3.0):
                q = hk.q_quantity(g, u, t, hk.THEOREM_A.with_(d=d))
                sub = hk.grad_norm_sq_substitution(g, u, t, d, q)
                gaps["substitution"] = max(gaps["substitution"], float(np.max(np.abs(
                    sub - geo.grad_norm_sq(g, u, t)))) / max(1.0, float(np.max(np.abs(q)))))
            lap = geo.laplacian(g, u, t)
            tr = np.trace(geo.hessian(g, u, t), axis1=-2, axis2=-1)
            gaps["trace hessian"] = max(gaps["trace hessian"], float(np.max(np.abs(tr - lap)))
                                        / max(1.0, float(np.max(np.abs(lap)))))
    for traj in (circle256, sphere_traj):
        for t in traj.times[1:]:
            gap = hk.trace_inequality_gap(traj.geometry, traj.u_at(t), t)
            min_trace_gap = min(min_trace_gap, float(gap.min()))
    worst = max(gaps, key=gaps.get)
    ok = gaps[worst] <= 1e-10 and min_trace_gap >= -1e-10
    record(8, "algebraic identities to rounding", ok,
           f"largest gap {gaps[worst]:.1e} ({worst}) <= 1e-10; trace inequality min slack "
           f"{min_trace_gap:.3e} >= 0")


def test_criterion_09_ricci_flow_degeneracies():
    g = geo.make_geometry("sphere_ricci_shrinking", 2, 32)
    rng = np.random.default_rng(5)
    d_max = dc_max = 0.0
    for t in (0.01, 0.1, 0.25, 0.4, 0.45):
        for X in geo.sample_vector_fields(g, 16, seed=9, bound=3.0):
            d_max = max(d_max, float(np.max(np.abs(hk.mueller_D(g, X, t)))))
            for a, alpha, beta in rng.uniform(-5, 5, size=(4, 3)):
                dc_max = max(dc_max, float(np.max(np.abs(hk.d_coeff(g, X, t, a, alpha, beta)))))
    h_err = float(np.max(np.abs(hk.mueller_H(g, np.zeros((2, 32)), 0.25) - 32.0)))
    ok = d_max <= 1e-10 and dc_max <= 1e-10 and h_err <= 1e-10
    record(9, "Ricci-flow degeneracies on the shrinking sphere", ok,
           f"max |D| {d_max:.1e}, max |D_(a,alpha,beta)| {dc_max:.1e}, |H - 32| {h_err:.1e}, "
           f"all <= 1e-10")


def test_criterion_10_f_u_equivalence():
    times = [0.1, 0.25, 0.5, 0.75, 1.0]
    worst = 0.0
    for gamma in (GammaSchedule(), GammaSchedule("constant", -1.0)):
        tf = integrate(circle(256, gamma=gamma), 1.0, snapshot_times=times)
        tu = integrate(circle(256, gamma=gamma, representation="u"), 1.0, snapshot_times=times)
        for t in times:
            worst = max(worst, float(np.max(np.abs(tu.at(t) - u_from_f(tf.at(t))))))
    record(10, "u-form vs -log(f-form) at N = 256, gamma in {0, -1}", worst <= 1e-5,
           f"max difference {worst:.3e} <= 1e-5")


def test_criterion_11_hypothesis_gate_and_determinism(tmp_path, capsys):
    from pathlib import Path
    configs = Path(__file__).resolve().parent.parent / "configs"
    code = cli.main(["run", "--config", str(configs / "synthetic_negative_theorem_a.yaml"),
                     "--out-dir", str(tmp_path / "neg"), "--quiet"])
    err = capsys.readouterr().err
    named = "S ≥ 0" in err
    outs = []
    for k in range(2):
        cli.main(["run", "--config", str(configs / "circle_theorem_c.yaml"), "--out-dir",
                  str(tmp_path / f"r{k}"), "--seed", "4", "--quiet"])
        outs.append((tmp_path / f"r{k}" / "monitors.csv").read_bytes())
    same = outs[0] == outs[1] and len(outs[0]) > 100
    record(11, "hypothesis gate and determinism", code == 5 and named and same,
           f"synthetic_negative exit {code} (want 5), diagnostic names 'S ≥ 0': {named}; "
           f"repeated CSV byte-identical: {same}")


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
