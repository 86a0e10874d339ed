"""Scale factor of a shrinking sphere and the self-similar residual.

A sphere of radius ``r`` contracts self-similarly with ``X(t) = psi(t) X(0)``
where ``psi' = -Phi(1 / (r psi)) / r`` and ``psi(0) = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError, StiffFailure
from .phi import PhiFunction, PhiKind

__all__ = [
    "PsiTrajectory",
    "psi_rhs",
    "solve_psi",
    "closed_form_time",
    "closed_form_extinction",
    "self_similar_residual",
]


def psi_rhs(psi: float, r: float, phi: PhiFunction) -> float:
    if psi <= 0:
        raise DomainError(f"psi must be positive, got {psi}")
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    return -float(phi.value(1.0 / (r * psi))) / r


@dataclass
class PsiTrajectory:
    t: np.ndarray
    psi: np.ndarray
    psi_prime: np.ndarray
    extinction_time: float
    r: float
    phi: str
    tail_exponent: float
    steps: int
    rejected: int

    def psi_at(self, t):
        """Cubic Hermite interpolant of psi; NaN past the last accepted step."""
        # drop repeated times from the tail where increments fall below float spacing
        keep = np.concatenate(([True], np.diff(self.t) > 0))
        spline = CubicHermiteSpline(self.t[keep], self.psi[keep], self.psi_prime[keep], extrapolate=False)
        return spline(t)


def _rk4(psi, h, r, phi):
    k1 = psi_rhs(psi, r, phi)
    k2 = psi_rhs(psi + 0.5 * h * k1, r, phi)
    k3 = psi_rhs(psi + 0.5 * h * k2, r, phi)
    k4 = psi_rhs(psi + h * k3, r, phi)
    return psi + h * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def solve_psi(
    r: float,
    phi: PhiFunction,
    rel_tol: float = 1e-8,
    psi_stop: float = 1e-6,
    max_steps: int = 1_000_000,
) -> PsiTrajectory:
    """Integrate the sphere ODE until ``psi < psi_stop``.

    Classical RK4 with step-doubling error control and local Richardson
    extrapolation.  The extinction time adds to the final time the remaining
    time of a power law ``psi' = -A psi**(-k)`` fitted over the last decade
    of psi.
    """
    if r <= 0:
        raise DomainError(f"radius must be positive, got {r}")
    t, psi = 0.0, 1.0
    dpsi = psi_rhs(psi, r, phi)
    h = min(0.01 * psi / abs(dpsi), 0.1 * r)
    ts, ps, ds = [t], [psi], [dpsi]
    steps = rejected = 0
    while psi >= psi_stop:
        if steps + rejected >= max_steps:
            raise StiffFailure(f"no extinction after {max_steps} step attempts (psi={psi:.3g})")
        if h < 1e-300 or not math.isfinite(h):
            raise StiffFailure(f"step size underflow at t={t:.17g}, psi={psi:.3g}")
        try:
            big = _rk4(psi, h, r, phi)
            half = _rk4(psi, 0.5 * h, r, phi)
            small = _rk4(half, 0.5 * h, r, phi)
        except DomainError:
            # a stage stepped through psi = 0
            h *= 0.25
            rejected += 1
            continue
        err = abs(small - big) / 15.0
        new = small + (small - big) / 15.0
        if new <= 0 or new >= psi:
            h *= 0.25
            rejected += 1
            continue
        scale = rel_tol * abs(new)
        if err <= scale:
            t += h
            psi = new
            dpsi = psi_rhs(psi, r, phi)
            ts.append(t)
            ps.append(psi)
            ds.append(dpsi)
            steps += 1
        else:
            rejected += 1
        factor = 4.0 if err == 0 else 0.9 * (scale / err) ** 0.2
        h *= min(4.0, max(0.1, factor))

    t_arr, p_arr, d_arr = np.array(ts), np.array(ps), np.array(ds)
    tail = p_arr <= 10.0 * p_arr[-1]
    if tail.sum() < 2:
        tail[-2:] = True
    slope, intercept = np.polyfit(np.log(p_arr[tail]), np.log(-d_arr[tail]), 1)
    k = -slope
    amp = math.exp(intercept)
    remaining = p_arr[-1] ** (k + 1) / (amp * (k + 1)) if k > -1 else math.inf
    return PsiTrajectory(t_arr, p_arr, d_arr, float(t_arr[-1] + remaining), float(r), phi.id,
                         float(k), steps, rejected)


def closed_form_time(phi: PhiFunction, r: float, psi):
    """Exact time at which the sphere of radius ``r`` reaches scale ``psi``.

    Available for pure powers and for ``a z + b z**3``; ``None`` otherwise.
    """
    psi = np.asarray(psi, dtype=float)
    if phi.kind is PhiKind.POWER:
        (alpha,) = phi.params
        return r ** (alpha + 1) * (1.0 - psi ** (alpha + 1)) / (alpha + 1)
    if phi.kind is PhiKind.POWER_SUM:
        terms = dict(zip(phi.params[1], phi.params[0]))
        if set(terms) == {1.0, 3.0}:
            a, b = terms[1.0], terms[3.0]
            u = psi**2
            lam = a * r**2
            return 0.5 * r**4 * ((1.0 - u) / lam + b / lam**2 * np.log((lam * u + b) / (lam + b)))
        if len(terms) == 1:
            ((k, cf),) = terms.items()
            return r ** (k + 1) * (1.0 - psi ** (k + 1)) / ((k + 1) * cf)
    return None


def closed_form_extinction(phi: PhiFunction, r: float) -> Optional[float]:
    out = closed_form_time(phi, r, 0.0)
    return None if out is None else float(out)


def self_similar_residual(support, F_val, psi, psi_prime, phi: PhiFunction):
    """``<X, nu> + Phi(F / psi) / psi'``; zero exactly on self-similar points."""
    if np.any(np.asarray(psi_prime) >= 0):
        raise DomainError("psi' must be negative for a contracting solution")
    if np.any(np.asarray(psi) <= 0):
        raise DomainError("psi must be positive")
    out = np.asarray(support, dtype=float) + phi.value(np.asarray(F_val, dtype=float) / psi) / psi_prime
    return float(out) if np.ndim(out) == 0 else out
