"""Acceptance criteria, one test each, run at their stated tolerances and time budgets."""

import contextlib
import math
import time

import numpy as np
import pytest

from conftest import VERDICTS, timed_report, timed_run
from curvflow import FlowConfig, PhiFunction, SpeedFunction, run, sphere
from curvflow.cli import main
from curvflow.phi import check_conditions_phi, critical_log_power
from curvflow.pinch import (
    cone_constants,
    g_umbilic_contraction,
    pinching_table,
    random_second_fundamental,
    verify_curvest,
    verify_fconvprops,
)
from curvflow.sphere_ode import solve_psi
from curvflow.symfunc import ConeSampler, Convexity, classify_convexity, derivatives

ZZ3 = PhiFunction.from_id("power-sum:1,1;1,3")
T_ZZ3 = 0.5 * (1 - math.log(2))
BUILTINS = [("mean", 2), ("mean", 3), ("norm-A", 2), ("norm-A", 3), ("gauss-root", 2), ("gauss-root", 3),
            ("sigma-k:2", 3), ("sigma-k:3", 3)]


@contextlib.contextmanager
def criterion(number: int, title: str, budget: float):
    t0 = time.perf_counter()
    notes = {}
    try:
        yield notes
        elapsed = time.perf_counter() - t0 + notes.pop("extra_seconds", 0.0)
        notes["seconds"] = round(elapsed, 2)
        assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"
    except BaseException as exc:
        line = f"FAIL {number:2d} {title}: {exc}"
        VERDICTS.append(line)
        print(line)
        raise
    detail = ", ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in notes.items())
    line = f"PASS {number:2d} {title} ({detail})"
    VERDICTS.append(line)
    print(line)


def test_01_closed_form_ode_reproduction():
    with criterion(1, "closed-form sphere ODE", 1.0) as notes:
        traj = solve_psi(1.0, ZZ3)
        keep = (traj.psi >= 1e-3) & (traj.psi <= 1.0)
        psi = traj.psi[keep]
        residual = traj.t[keep] - 0.5 * (1 - psi**2) - 0.5 * np.log((1 + psi**2) / 2)
        notes["residual_max"] = float(np.abs(residual).max())
        notes["T_error"] = abs(traj.extinction_time - T_ZZ3)
        assert notes["residual_max"] <= 1e-6
        assert notes["T_error"] <= 1e-4


def test_02_condition_d_constant():
    with criterion(2, "condition-d constant for z + z^3", 1.0) as notes:
        rep = check_conditions_phi(ZZ3, 1e-6, 1e6)
        notes["c_estimate"] = rep.c_estimate
        assert rep.passed
        assert rep.c_estimate <= 2 + 1e-9


def test_03_log_power_window():
    with criterion(3, "log-power admissibility window", 5.0) as notes:
        p = critical_log_power(1e-3, 1e3)
        notes["p_star"] = p
        assert 1.15 <= p <= 1.30
        for q in (1.25, 1.5, 2.0):
            rep = check_conditions_phi(PhiFunction.log_power(q), 1e-3, 1e3)
            assert rep.a and rep.b and rep.c, q
        assert not check_conditions_phi(PhiFunction.log_power(1.1), 1e-3, 1e3).c


def test_04_inequality_suites():
    with criterion(4, "inequality suites", 30.0) as notes:
        worst = math.inf
        for n in (2, 3):
            for eps in (0.25, 0.5, 0.9):
                sample = random_second_fundamental(n, eps, 100_000, seed=1000 * n + int(100 * eps))
                slack = verify_curvest(sample, eps)
                assert slack.holds(1e-12), (n, eps, slack.violations(1e-12))
                worst = min(worst, float(min((slack.i / slack.scale_i).min(), (slack.ii / slack.scale_ii).min(),
                                              (slack.iii / slack.scale_iii).min())))
        notes["min_scaled_slack"] = worst
        for fid, kind in (("norm-A", Convexity.CONVEX), ("gauss-root", Convexity.CONCAVE)):
            for n in (2, 3):
                f = SpeedFunction.from_id(fid, n)
                sampler = ConeSampler(n, 0.2, 10_000, seed=17)
                assert classify_convexity(f, sampler).kind is kind
                kappa = sampler.draw()
                first, second = verify_fconvprops(f, kappa, kind)
                scale = (kappa**2).sum(axis=1) * kappa.sum(axis=1)
                if kind is Convexity.CONVEX:
                    assert np.all(first <= 1e-12 * scale) and np.all(second <= 1e-12 * scale)
                else:
                    assert np.all(first >= -1e-12 * scale)
        for fid, n in BUILTINS:
            f = SpeedFunction.from_id(fid, n)
            kappa = ConeSampler(n, 0.2, 10_000, seed=23).draw()
            b = derivatives(f, kappa)
            assert np.all(np.abs((kappa * b.gradient).sum(axis=1) - b.value) <= 1e-8 * b.value), fid
            radial = np.linalg.norm(np.einsum("sij,sj->si", b.hessian, kappa), axis=1)
            bound = 1e-6 * np.linalg.norm(b.hessian, axis=(1, 2)) * np.linalg.norm(kappa, axis=1)
            assert np.all(radial <= bound), fid


def test_05_contraction_identity():
    with criterion(5, "zero-order contraction identity", 1.0) as notes:
        rng = np.random.default_rng(5)
        worst = 0.0
        for n in (2, 3):
            k1, k2 = (np.exp(rng.uniform(math.log(0.1), math.log(10.0), 10_000)) for _ in range(2))
            diff, _, _, _ = g_umbilic_contraction(k1, k2, n)
            worst = max(worst, float(np.abs(diff).max()))
        notes["max_abs_difference"] = worst
        assert worst <= 1e-12


def test_06_cone_constants():
    with criterion(6, "cone-optimisation constants", 60.0) as notes:
        mean = SpeedFunction.from_id("mean", 2)
        worst_q = 0.0
        for eps in np.linspace(0.05, 1.0, 20):
            p = cone_constants(mean, 2, float(eps), 0.0)
            assert abs(p.M1 - 0.5) <= 1e-12 and abs(p.M2) <= 1e-12
            worst_q = max(worst_q, abs(p.Q + eps**2 / 16))
        notes["Q_error"] = worst_q
        assert worst_q <= 1e-9
        gauss = SpeedFunction.from_id("gauss-root", 2)
        grid = np.linspace(0.01, 1.0, 100)
        for c in (0.0, 0.05):
            Q = np.array([p.Q for p in pinching_table(gauss, 2, c, grid)])
            notes[f"max_Q_increase_c{c:g}"] = float(np.diff(Q).max())
            assert np.all(np.diff(Q) <= 1e-6)


def test_07_flow_tracks_sphere_ode():
    with criterion(7, "flow vs ODE on the unit sphere", 60.0) as notes:
        res = run(sphere(1.0, 512), SpeedFunction.from_id("mean", 2), ZZ3,
                  FlowConfig(t_max=0.9 * T_ZZ3, bracket=False))
        traj = solve_psi(1.0, ZZ3)
        t = res.times()
        radius = res.series("min_s")
        notes["max_radius_deviation"] = float(np.abs(radius - traj.psi_at(t)).max())
        assert res.status == "t_max" and t[-1] == pytest.approx(0.9 * T_ZZ3, rel=1e-15)
        assert notes["max_radius_deviation"] <= 1e-3


def test_08_roundness_under_pinching():
    res, seconds = timed_run("spheroid:1,1.1", "mean", "power:2", 256)
    with criterion(8, "roundness of a 1:1.1 spheroid", 120.0) as notes:
        notes["extra_seconds"] = seconds
        ratio = res.series("kappa_ratio_max")
        notes["initial_ratio"] = float(ratio[0])
        notes["final_ratio"] = float(ratio[-1])
        notes["max_increase"] = float(np.diff(ratio).max())
        assert res.status == "extinct"
        assert ratio[-1] <= 1.01
        assert np.all(np.diff(ratio) <= 0)


def test_09_self_similar_discrimination():
    _, sph, s1 = timed_report("sphere:1", "mean", "power-sum:1,1;1,3", 256)
    _, oid, s2 = timed_report("spheroid:1,1.5", "mean", "power-sum:1,1;1,3", 256)
    with criterion(9, "self-similar residual discriminates sphere from spheroid", 120.0) as notes:
        notes["extra_seconds"] = s1 + s2
        notes["sphere_max"] = float(sph.relative_max.max())
        notes["spheroid_initial"] = float(oid.relative_max[0])
        assert notes["sphere_max"] <= 1e-3
        assert notes["spheroid_initial"] >= 10 * notes["sphere_max"]


COMMANDS = [
    ["sphere-ode", "--phi", "power-sum:1,1;1,3", "--r", "1"],
    ["check-phi", "--phi", "power-sum:1,1;1,3"],
    ["check-phi", "--phi", "log-power:1.1", "--zmin", "1e-3", "--zmax", "1e3"],
    ["check-f", "--f", "gauss-root", "--n", "3", "--seed", "2024"],
    ["pinch-threshold", "--f", "gauss-root", "--n", "2", "--c", "0", "--points", "10"],
    ["pinch-threshold", "--f", "gauss-root", "--n", "2", "--c", "2", "--points", "10"],
    ["flow", "--f", "mean", "--phi", "power:2", "--shape", "spheroid:1,1.1", "--m", "96"],
    ["ss-residual", "--f", "mean", "--phi", "power-sum:1,1;1,3", "--shape", "spheroid:1,1.5", "--m", "96"],
]


def test_10_determinism(tmp_path):
    with criterion(10, "byte-identical reruns", 300.0) as notes:
        files = 0
        for i, args in enumerate(COMMANDS):
            out = tmp_path / str(i)
            codes = []
            snapshots = []
            for _ in range(2):
                codes.append(main(args + ["--out", str(out)]))
                snapshots.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            assert codes[0] == codes[1] and codes[0] in (0, 1), args
            assert snapshots[0] == snapshots[1], args
            files += len(snapshots[0])
        notes["artifacts_compared"] = files
