"""Contraction of convex axisymmetric hypersurfaces in the support parametrisation.

A convex body is encoded by its support function ``s`` on the Gauss sphere.
For a body of revolution ``s`` depends only on the colatitude ``theta`` of the
outer normal, and the principal radii are

    r_axial      = s'' + s
    r_rotational = s + s' cot(theta)      (multiplicity n - 1)

with ``r_rotational -> r_axial`` at the poles.  The flow with normal speed
``Phi(F)`` becomes the pointwise update ``ds/dt = -Phi(F)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import List, Optional

import numpy as np

from . import _kernels as K
from .errors import ConvexityLost, DomainError, StepTooLarge
from .phi import PhiFunction, PhiKind
from .sphere_ode import solve_psi
from .symfunc import SpeedFunction, SpeedKind

__all__ = [
    "SupportProfile",
    "FlowDiagnostics",
    "FlowState",
    "FlowConfig",
    "FlowRun",
    "SelfSimilarityReport",
    "sphere",
    "spheroid",
    "spheroid_curvatures",
    "read_shape",
    "write_shape",
    "parse_shape",
    "derivatives_theta",
    "principal_radii",
    "curvatures",
    "embedding",
    "speed",
    "stable_dt",
    "diagnose",
    "step",
    "run",
    "self_similarity_report",
]


@dataclass(frozen=True, eq=False)
class SupportProfile:
    """Support function samples on the uniform grid ``theta_j = j pi / (m - 1)``."""

    theta: np.ndarray
    s: np.ndarray
    n: int = 2

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float)
        s = np.asarray(self.s, dtype=float)
        if theta.shape != s.shape or theta.ndim != 1:
            raise ValueError("theta and s must be 1-D arrays of equal length")
        m = theta.size
        if m < 8:
            raise ValueError("need at least 8 grid points")
        if not np.allclose(theta, np.linspace(0.0, math.pi, m), rtol=0, atol=1e-9):
            raise ValueError("theta must be the uniform grid on [0, pi] including both poles")
        if self.n < 2:
            raise ValueError("hypersurface dimension must be >= 2")
        object.__setattr__(self, "theta", np.linspace(0.0, math.pi, m))
        object.__setattr__(self, "s", s)

    @property
    def m(self) -> int:
        return self.s.size

    @property
    def h(self) -> float:
        return math.pi / (self.m - 1)

    def with_s(self, s) -> "SupportProfile":
        return SupportProfile(self.theta, s, self.n)

    def min_width(self) -> float:
        # width in direction theta is s(theta) + s(pi - theta); the grid is mirror-symmetric
        return float(np.min(self.s + self.s[::-1]))

    def inradius(self) -> float:
        """Radius of the largest origin-centred ball inside the body."""
        return float(self.s.min())

    def circumradius(self) -> float:
        """Radius of the smallest origin-centred ball containing the body."""
        ds, _ = derivatives_theta(self)
        return float(np.sqrt(self.s**2 + ds**2).max())


def _grid(m: int) -> np.ndarray:
    return np.linspace(0.0, math.pi, m)


def sphere(radius: float, m: int = 256, n: int = 2) -> SupportProfile:
    return SupportProfile(_grid(m), np.full(m, float(radius)), n)


def spheroid(a: float, b: float, m: int = 256, n: int = 2) -> SupportProfile:
    """Ellipsoid of revolution with equatorial semi-axis ``a`` and polar semi-axis ``b``."""
    th = _grid(m)
    return SupportProfile(th, np.sqrt((a * np.sin(th)) ** 2 + (b * np.cos(th)) ** 2), n)


def spheroid_curvatures(a: float, b: float, theta):
    """Closed-form (axial, rotational) curvatures of a spheroid at normal colatitude ``theta``."""
    q = (a * np.sin(theta)) ** 2 + (b * np.cos(theta)) ** 2
    meridian = a**2 * b**2 / q**1.5
    prime_vertical = a**2 / np.sqrt(q)
    return 1.0 / meridian, 1.0 / prime_vertical


def read_shape(path) -> SupportProfile:
    """Plain-text shape file: header ``m n`` then ``m`` lines ``theta s``."""
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    try:
        m, n = (int(x) for x in lines[0].split())
        rows = np.array([[float(x) for x in ln.split()] for ln in lines[1:]])
    except (ValueError, IndexError) as exc:
        raise ValueError(f"malformed shape file {path}: {exc}") from None
    if rows.shape != (m, 2):
        raise ValueError(f"shape file {path} declares {m} points but has {rows.shape[0]} rows of 2 columns")
    return SupportProfile(rows[:, 0], rows[:, 1], n)


def write_shape(profile: SupportProfile, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{profile.m} {profile.n}\n")
        for th, sv in zip(profile.theta, profile.s):
            fh.write(f"{th:.17g} {sv:.17g}\n")


def parse_shape(text: str, m: int, n: int) -> SupportProfile:
    """``sphere:<R>``, ``spheroid:<a>,<b>`` or ``file:<path>``."""
    kind, _, arg = text.partition(":")
    if kind == "sphere":
        return sphere(float(arg), m, n)
    if kind == "spheroid":
        a, b = (float(x) for x in arg.split(","))
        return spheroid(a, b, m, n)
    if kind == "file":
        return read_shape(arg)
    raise ValueError(f"unknown shape {text!r}")


# --- geometry -------------------------------------------------------------------


def _padded(s: np.ndarray) -> np.ndarray:
    # even reflection about both poles
    return np.concatenate((s[2:0:-1], s, s[-2:-4:-1]))


def derivatives_theta(profile: SupportProfile):
    """``(s', s'')`` by fourth-order centred differences."""
    sp = _padded(profile.s)
    h = profile.h
    c = slice(2, -2)
    p1, p2, m1, m2 = sp[3:-1], sp[4:], sp[1:-3], sp[:-4]
    d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h)
    d2 = (-p2 + 16.0 * p1 - 30.0 * sp[c] + 16.0 * m1 - m2) / (12.0 * h * h)
    d1[0] = d1[-1] = 0.0
    return d1, d2


def principal_radii(profile: SupportProfile):
    d1, d2 = derivatives_theta(profile)
    s = profile.s
    r1 = d2 + s
    r2 = np.empty_like(s)
    th = profile.theta[1:-1]
    r2[1:-1] = s[1:-1] + d1[1:-1] * np.cos(th) / np.sin(th)
    r2[0], r2[-1] = r1[0], r1[-1]
    return r1, r2


def curvatures(profile: SupportProfile):
    """``(kappa_axial, kappa_rotational)`` per grid point; raises ConvexityLost."""
    r1, r2 = principal_radii(profile)
    bad = (r1 <= 0) | (r2 <= 0)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise ConvexityLost(f"principal radius {min(r1[j], r2[j]):.3g} <= 0 at theta={profile.theta[j]:.6g}")
    return 1.0 / r1, 1.0 / r2


def full_curvatures(profile: SupportProfile) -> np.ndarray:
    ka, kr = curvatures(profile)
    return np.column_stack([ka] + [kr] * (profile.n - 1))


def embedding(profile: SupportProfile):
    """Meridian coordinates ``(distance from axis, height)`` of ``X = s nu + s' d nu/d theta``."""
    d1, _ = derivatives_theta(profile)
    th, s = profile.theta, profile.s
    rho = s * np.sin(th) + d1 * np.cos(th)
    z = s * np.cos(th) - d1 * np.sin(th)
    return rho, z


def speed(profile: SupportProfile, f: SpeedFunction, phi: PhiFunction):
    """Normal speed ``Phi(F)`` and the curvature function ``F`` per grid point."""
    F = np.asarray(f(full_curvatures(profile)), dtype=float)
    return phi.value(F), F


def stable_dt(profile: SupportProfile, f: SpeedFunction, phi: PhiFunction, safety: float = 0.2) -> float:
    """Explicit parabolic step limit ``safety r_min^2 / (max Phi' * max sum f^i * (m / pi)^2)``."""
    from .symfunc import derivatives

    r1, r2 = principal_radii(profile)
    kappa = full_curvatures(profile)
    b = derivatives(f, kappa)
    rmin = min(r1.min(), r2.min())
    return safety * rmin**2 / (float(np.max(phi.d1(b.value))) * float(b.gradient.sum(axis=1).max()) * (profile.m / math.pi) ** 2)


# --- states -----------------------------------------------------------------


@dataclass(frozen=True)
class FlowDiagnostics:
    kappa_ratio_max: float
    bound_min: float
    F_min: float
    F_max: float
    min_s: float
    max_s: float
    min_width: float
    psi_fit: float = math.nan
    ss_residual: float = math.nan


def pinching_bound_field(F: np.ndarray, phi: PhiFunction) -> np.ndarray:
    """``1 + 2 Phi'(F) / (Phi''(F) F)`` evaluated on the current surface, ``inf`` where Phi'' = 0."""
    d1, d2 = phi.d1(F), phi.d2(F)
    out = np.full(F.shape, np.inf)
    pos = d2 > 0
    out[pos] = 1.0 + 2.0 * d1[pos] / (d2[pos] * F[pos])
    return out


def diagnose(profile: SupportProfile, f: SpeedFunction, phi: PhiFunction, width0: Optional[float] = None) -> FlowDiagnostics:
    ka, kr = curvatures(profile)
    kappa = np.column_stack([ka] + [kr] * (profile.n - 1))
    F = np.asarray(f(kappa), dtype=float)
    ratio = np.maximum(ka, kr) / np.minimum(ka, kr)
    width = profile.min_width()
    return FlowDiagnostics(
        kappa_ratio_max=float(ratio.max()),
        bound_min=float(pinching_bound_field(F, phi).min()),
        F_min=float(F.min()),
        F_max=float(F.max()),
        min_s=float(profile.s.min()),
        max_s=float(profile.s.max()),
        min_width=width,
        psi_fit=width / width0 if width0 else 1.0,
    )


@dataclass(frozen=True)
class FlowState:
    """A recorded state; ``elapsed`` is the time since the previous record."""

    t: float
    profile: SupportProfile
    diagnostics: FlowDiagnostics
    steps: int = 0
    elapsed: float = 0.0


def initial_state(profile: SupportProfile, f: SpeedFunction, phi: PhiFunction) -> FlowState:
    return FlowState(0.0, profile, diagnose(profile, f, phi))


def step(state: FlowState, f: SpeedFunction, phi: PhiFunction, dt: float, safety: float = 0.2) -> FlowState:
    """One explicit Euler step ``s <- s - dt Phi(F)`` with refreshed diagnostics."""
    limit = stable_dt(state.profile, f, phi, safety)
    if dt > limit * (1.0 + 1e-12):
        raise StepTooLarge(f"dt={dt:.6g} exceeds the stability limit {limit:.6g}")
    v, _ = speed(state.profile, f, phi)
    profile = state.profile.with_s(state.profile.s - dt * v)
    width0 = state.diagnostics.min_width / state.diagnostics.psi_fit
    return FlowState(state.t + dt, profile, diagnose(profile, f, phi, width0), state.steps + 1, dt)


# --- runs -------------------------------------------------------------------


@dataclass(frozen=True)
class FlowConfig:
    dt_safety: float = 0.2
    extinction_ratio: float = 1e-3
    record_ratio: float = 0.995
    t_max: float = math.inf
    max_steps: int = 2_000_000_000
    bracket: bool = True


@dataclass
class FlowRun:
    states: List[FlowState]
    f: SpeedFunction
    phi: PhiFunction
    config: FlowConfig
    status: str
    summary: dict = field(default_factory=dict)

    @property
    def initial(self) -> FlowState:
        return self.states[0]

    @property
    def final(self) -> FlowState:
        return self.states[-1]

    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    def series(self, name: str) -> np.ndarray:
        return np.array([getattr(st.diagnostics, name) for st in self.states])


def _encode_f(f: SpeedFunction):
    par = np.zeros(6)
    if f.kind is SpeedKind.MEAN:
        return K.F_MEAN, par
    if f.kind is SpeedKind.NORM_A:
        return K.F_NORM_A, par
    if f.kind is SpeedKind.GAUSS_ROOT:
        return K.F_GAUSS, par
    if f.kind is SpeedKind.SIGMA_K:
        n, k = f.n, f.k

        def C(a, b):
            return math.comb(a, b) if 0 <= b <= a else 0

        par[:] = (k, C(n, k), C(n - 1, k), C(n - 1, k - 1), C(n - 2, k - 1), C(n - 2, k - 2))
        return K.F_SIGMA_K, par
    return None, None


def _encode_phi(phi: PhiFunction):
    if phi.kind is PhiKind.POWER_SUM:
        return K.PHI_POWER_SUM, np.array(phi.params[0]), np.array(phi.params[1])
    code = {PhiKind.LOG_POWER: K.PHI_LOG_POWER, PhiKind.SHIFTED_ENTROPY: K.PHI_ENTROPY, PhiKind.POWER: K.PHI_POWER}[phi.kind]
    return code, np.array([phi.params[0]]), np.zeros(1)


class _CompiledStepper:
    def __init__(self, profile: SupportProfile, f: SpeedFunction, phi: PhiFunction, safety: float):
        self.fcode, self.fpar = _encode_f(f)
        self.pcode, self.pc, self.pk = _encode_phi(phi)
        self.n = profile.n
        self.h = profile.h
        th = profile.theta
        cot = np.zeros(profile.m)
        cot[1:-1] = np.cos(th[1:-1]) / np.sin(th[1:-1])
        self.cot = cot
        self.safety = safety

    def advance(self, s, horizon, s_target, max_steps):
        return K.advance(s, self.h, self.cot, self.n, self.fcode, self.fpar, self.pcode, self.pc, self.pk,
                         horizon, s_target, self.safety, max_steps)


class _Clock:
    """Compensated running sum of segment durations."""

    def __init__(self):
        self.hi = 0.0
        self.lo = 0.0

    @property
    def value(self) -> float:
        return self.hi + self.lo

    def add(self, dt: float) -> float:
        y = dt + self.lo
        hi = self.hi + y
        self.lo = y - (hi - self.hi)
        self.hi = hi
        return self.value


def run(initial: SupportProfile, f: SpeedFunction, phi: PhiFunction, config: FlowConfig = FlowConfig()) -> FlowRun:
    """Integrate until ``min s < extinction_ratio * min s(0)``, ``t_max`` or loss of convexity.

    A state is recorded whenever ``min s`` has dropped by the factor
    ``record_ratio`` since the previous record, plus the first and last state.
    Loss of convexity is raised after the run is closed off.
    """
    if f.n != initial.n:
        raise ValueError(f"speed function dimension {f.n} != profile dimension {initial.n}")
    first = initial_state(initial, f, phi)
    width0 = first.diagnostics.min_width
    states = [first]
    threshold = config.extinction_ratio * first.diagnostics.min_s
    s = initial.s.copy()
    t, steps, status = 0.0, 0, "running"
    compiled = _encode_f(f)[0] is not None

    if compiled:
        stepper = _CompiledStepper(initial, f, phi, config.dt_safety)
        clock = _Clock()
        while status == "running":
            target = max(threshold, config.record_ratio * states[-1].diagnostics.min_s)
            horizon = config.t_max - clock.value
            elapsed, k, code = stepper.advance(s, horizon, target, config.max_steps - steps)
            steps += k
            t = config.t_max if code == K.STATUS_TIME else clock.add(elapsed)
            if code == K.STATUS_CONVEXITY:
                status = "convexity_lost"
                break
            profile = initial.with_s(s.copy())
            states.append(FlowState(t, profile, diagnose(profile, f, phi, width0), steps, elapsed))
            if code == K.STATUS_TIME:
                status = "t_max"
            elif code == K.STATUS_MAX_STEPS:
                status = "max_steps"
            elif s.min() < threshold:
                status = "extinct"
    else:
        state = first
        while status == "running":
            try:
                dt = min(stable_dt(state.profile, f, phi, config.dt_safety), config.t_max - state.t)
                state = step(state, f, phi, dt, config.dt_safety)
            except ConvexityLost:
                status = "convexity_lost"
                break
            steps += 1
            if state.profile.s.min() < threshold:
                status = "extinct"
            elif state.t >= config.t_max:
                status = "t_max"
            elif steps >= config.max_steps:
                status = "max_steps"
            if status != "running" or state.diagnostics.min_s <= config.record_ratio * states[-1].diagnostics.min_s:
                states.append(replace(state, elapsed=state.t - states[-1].t))

    out = FlowRun(states, f, phi, config, status)
    out.summary = _summarise(out, steps)
    if status == "convexity_lost":
        raise ConvexityLost(f"convexity lost after {steps} steps at t={t:.6g}")
    return out


def _summarise(result: FlowRun, steps: int) -> dict:
    first, last = result.initial, result.final
    ratio = result.series("kappa_ratio_max")
    summary = {
        "status": result.status,
        "steps": steps,
        "records": len(result.states),
        "t_final": last.t,
        "min_s_initial": first.diagnostics.min_s,
        "min_s_final": last.diagnostics.min_s,
        "kappa_ratio_initial": first.diagnostics.kappa_ratio_max,
        "kappa_ratio_final": last.diagnostics.kappa_ratio_max,
        "kappa_ratio_max_increase": float(np.max(np.diff(ratio), initial=0.0)),
        "bound_min_over_run": float(result.series("bound_min").min()),
        "pinching_bound_violated": bool(np.any(ratio > result.series("bound_min"))),
        "psi_fit_method": "min-width",
    }
    if result.config.bracket:
        phi = result.phi
        rin, rout = first.profile.inradius(), first.profile.circumradius()
        summary["extinction_bracket"] = [solve_psi(rin, phi).extinction_time, solve_psi(rout, phi).extinction_time]
        if result.status == "extinct":
            # remaining time lies between that of the final in- and circumscribed spheres
            t_in = solve_psi(last.profile.inradius(), phi).extinction_time
            t_out = solve_psi(last.profile.circumradius(), phi).extinction_time
            summary["extinction_estimate"] = [last.t + t_in, last.t + t_out]
    return summary


# --- self-similarity -------------------------------------------------------------


@dataclass
class SelfSimilarityReport:
    t: np.ndarray
    psi: np.ndarray
    psi_prime: np.ndarray
    residual_max: np.ndarray
    residual_l2: np.ndarray
    relative_max: np.ndarray
    relative_l2: np.ndarray


def _gradient(y: np.ndarray, dx: np.ndarray) -> np.ndarray:
    """Second-order derivative of samples ``y`` with spacings ``dx`` (one-sided at the ends)."""
    out = np.empty_like(y)
    a, b = dx[:-1], dx[1:]
    out[1:-1] = (-b / (a * (a + b))) * y[:-2] + ((b - a) / (a * b)) * y[1:-1] + (a / (b * (a + b))) * y[2:]
    a, b = dx[0], dx[1]
    out[0] = -(2 * a + b) / (a * (a + b)) * y[0] + (a + b) / (a * b) * y[1] - a / (b * (a + b)) * y[2]
    a, b = dx[-2], dx[-1]
    out[-1] = b / (a * (a + b)) * y[-3] - (a + b) / (a * b) * y[-2] + (a + 2 * b) / (b * (a + b)) * y[-1]
    return out


def self_similarity_report(result: FlowRun, phi: Optional[PhiFunction] = None) -> SelfSimilarityReport:
    """Residual of the self-similar equation along a completed run.

    psi is the ratio of minimal widths, psi' its second-order finite
    difference in time.  At each recorded time the residual
    ``s0 (-psi') - Phi(F0 / psi)`` is evaluated on the initial grid; the
    relative norms divide by ``max Phi(F0 / psi)``.  Recorded states are
    annotated with the relative max residual.
    """
    phi = phi or result.phi
    t = result.times()
    if t.size < 3:
        raise DomainError("need at least three recorded states")
    psi = result.series("min_width") / result.initial.diagnostics.min_width
    dpsi = _gradient(psi, np.array([st.elapsed for st in result.states[1:]]))
    if np.any(dpsi >= 0):
        raise DomainError("psi' >= 0 at some recorded time")
    prof0 = result.initial.profile
    s0 = prof0.s
    F0 = np.asarray(result.f(full_curvatures(prof0)), dtype=float)
    rmax, rl2, relmax, rell2 = (np.empty(t.size) for _ in range(4))
    for i in range(t.size):
        target = phi.value(F0 / psi[i])
        res = s0 * (-dpsi[i]) - target
        scale = np.abs(target).max()
        rmax[i] = np.abs(res).max()
        rl2[i] = math.sqrt(np.mean(res**2))
        relmax[i] = rmax[i] / scale
        rell2[i] = rl2[i] / scale
    result.states = [
        replace(st, diagnostics=replace(st.diagnostics, ss_residual=float(relmax[i])))
        for i, st in enumerate(result.states)
    ]
    return SelfSimilarityReport(t, psi, dpsi, rmax, rl2, relmax, rell2)
