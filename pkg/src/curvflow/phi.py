"""Scalar speed modifiers Phi applied on top of the curvature function.

The flow speed is ``Phi(F)``.  Admissible modifiers satisfy

    a) Phi(0) = 0            b) Phi' > 0 on z > 0
    c) Phi'' >= 0 on z > 0   d) z |Phi''(z)| <= c Phi'(z) for some c

and :func:`check_conditions_phi` certifies these on a finite log-spaced grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError

__all__ = [
    "PhiKind",
    "PhiFunction",
    "PhiConditionReport",
    "eval_phi",
    "check_conditions_phi",
    "taylor_gap",
    "min_second_derivative",
    "critical_log_power",
]


class PhiKind(str, enum.Enum):
    POWER_SUM = "power-sum"
    LOG_POWER = "log-power"
    SHIFTED_ENTROPY = "shifted-entropy"
    POWER = "power"


@dataclass(frozen=True)
class PhiFunction:
    """One member of the built-in Phi families.

    ``params`` holds ``(coeffs, exponents)`` for power sums, ``(p,)`` for
    ``ln(1 + z) + z**p``, ``(z0,)`` for the shifted entropy and ``(alpha,)``
    for a pure power.
    """

    kind: PhiKind
    params: tuple

    def __post_init__(self):
        object.__setattr__(self, "kind", PhiKind(self.kind))
        if self.kind is PhiKind.POWER_SUM:
            coeffs, exps = (tuple(float(x) for x in v) for v in self.params)
            if len(coeffs) != len(exps) or not coeffs:
                raise ValueError("power-sum needs matching, non-empty coefficient and exponent lists")
            if any(c <= 0 for c in coeffs) or any(k <= 0 for k in exps):
                raise ValueError("power-sum coefficients and exponents must be positive")
            object.__setattr__(self, "params", (coeffs, exps))
        else:
            if len(self.params) != 1:
                raise ValueError(f"{self.kind.value} takes exactly one parameter")
            (a,) = (float(x) for x in self.params)
            if self.kind is PhiKind.SHIFTED_ENTROPY and a <= 0:
                raise ValueError("shifted-entropy needs z0 > 0")
            if self.kind in (PhiKind.POWER, PhiKind.LOG_POWER) and a <= 0:
                raise ValueError(f"{self.kind.value} exponent must be positive")
            object.__setattr__(self, "params", (a,))

    # constructors -----------------------------------------------------------

    @classmethod
    def power_sum(cls, coeffs, exponents) -> "PhiFunction":
        return cls(PhiKind.POWER_SUM, (tuple(coeffs), tuple(exponents)))

    @classmethod
    def log_power(cls, p: float) -> "PhiFunction":
        return cls(PhiKind.LOG_POWER, (p,))

    @classmethod
    def shifted_entropy(cls, z0: float) -> "PhiFunction":
        return cls(PhiKind.SHIFTED_ENTROPY, (z0,))

    @classmethod
    def power(cls, alpha: float) -> "PhiFunction":
        return cls(PhiKind.POWER, (alpha,))

    @classmethod
    def from_id(cls, text: str) -> "PhiFunction":
        name, _, arg = text.strip().partition(":")
        try:
            kind = PhiKind(name)
        except ValueError:
            raise ValueError(f"unknown Phi family {text!r}") from None
        try:
            if kind is PhiKind.POWER_SUM:
                pairs = [p.split(",") for p in arg.split(";") if p.strip()]
                coeffs = [float(c) for c, _ in pairs]
                exps = [float(k) for _, k in pairs]
                return cls.power_sum(coeffs, exps)
            return cls(kind, (float(arg),))
        except (TypeError, ValueError) as exc:
            raise ValueError(f"bad parameters in Phi id {text!r}: {exc}") from None

    @property
    def id(self) -> str:
        if self.kind is PhiKind.POWER_SUM:
            return "power-sum:" + ";".join(f"{c:g},{k:g}" for c, k in zip(*self.params))
        return f"{self.kind.value}:{self.params[0]:g}"

    # evaluators ---------------------------------------------------------------

    def value(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind is PhiKind.POWER_SUM:
                return sum(c * z**k for c, k in zip(*self.params))
            (a,) = self.params
            if self.kind is PhiKind.LOG_POWER:
                return np.log1p(z) + z**a
            if self.kind is PhiKind.SHIFTED_ENTROPY:
                w = z + a
                return w * (np.log(w) - 1.0) + a * (1.0 - math.log(a))
            return z**a

    def d1(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind is PhiKind.POWER_SUM:
                return sum(c * k * z ** (k - 1) for c, k in zip(*self.params))
            (a,) = self.params
            if self.kind is PhiKind.LOG_POWER:
                return 1.0 / (1.0 + z) + a * z ** (a - 1)
            if self.kind is PhiKind.SHIFTED_ENTROPY:
                return np.log(z + a)
            return a * z ** (a - 1)

    def d2(self, z):
        z = np.asarray(z, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind is PhiKind.POWER_SUM:
                # linear terms contribute exactly zero, including at z = 0
                return sum(c * k * (k - 1) * z ** (k - 2) for c, k in zip(*self.params) if k != 1) + 0.0 * z
            (a,) = self.params
            if self.kind is PhiKind.LOG_POWER:
                return -1.0 / (1.0 + z) ** 2 + a * (a - 1) * z ** (a - 2)
            if self.kind is PhiKind.SHIFTED_ENTROPY:
                return 1.0 / (z + a)
            if a == 1:
                return 0.0 * z
            return a * (a - 1) * z ** (a - 2)

    def __call__(self, z):
        return self.value(z)


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def eval_phi(phi: PhiFunction, z) -> Tuple:
    """``(Phi, Phi', Phi'')`` at ``z >= 0``.

    ``z = 0`` is accepted so that Phi(0) can be inspected; derivatives there
    may be infinite for exponents below 2.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z < 0) or np.any(np.isnan(z)):
        raise DomainError(f"Phi is defined on [0, inf), got z={z}")
    return _scalar(phi.value(z)), _scalar(phi.d1(z)), _scalar(phi.d2(z))


def taylor_gap(phi: PhiFunction, z):
    """``z Phi'(z) - Phi(z)``; nonnegative whenever Phi is convex with Phi(0) = 0."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0) or np.any(np.isnan(z)):
        raise DomainError(f"taylor_gap needs z > 0, got z={z}")
    return _scalar(z * phi.d1(z) - phi.value(z))


@dataclass
class PhiConditionReport:
    phi: str
    zmin: float
    zmax: float
    grid: int
    a: bool
    b: bool
    c: bool
    d: bool
    phi_at_zero: float
    min_d1: float
    min_d2: float
    c_estimate: float
    worst_witness: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.a and self.b and self.c and self.d

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["passed"] = self.passed
        return d


PHI_ZERO_TOL = 1e-14


def check_conditions_phi(phi: PhiFunction, zmin: float = 1e-6, zmax: float = 1e6, grid: int = 10_000) -> PhiConditionReport:
    """Evaluate conditions a)-d) on ``grid`` log-spaced points of ``[zmin, zmax]``.

    The condition-d constant is reported as the largest observed
    ``z |Phi''| / Phi'``; it certifies d) on the scanned range only.
    """
    if not 0 < zmin < zmax:
        raise ValueError("need 0 < zmin < zmax")
    if grid < 1000:
        raise ValueError("grid must have at least 1000 points")
    z = np.logspace(math.log10(zmin), math.log10(zmax), grid)
    p0 = float(phi.value(0.0))
    d1 = phi.d1(z)
    d2 = phi.d2(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = z * np.abs(d2) / d1
    i1, i2 = int(np.argmin(d1)), int(np.argmin(d2))
    bad_ratio = ~np.isfinite(ratio) | (d1 <= 0)
    if np.any(bad_ratio):
        i3 = int(np.argmax(bad_ratio))
        c_est = math.inf
    else:
        i3 = int(np.argmax(ratio))
        c_est = float(ratio[i3])
    return PhiConditionReport(
        phi=phi.id,
        zmin=zmin,
        zmax=zmax,
        grid=grid,
        a=abs(p0) <= PHI_ZERO_TOL,
        b=bool(np.all(d1 > 0)),
        c=bool(np.all(d2 >= 0)),
        d=math.isfinite(c_est),
        phi_at_zero=p0,
        min_d1=float(d1[i1]),
        min_d2=float(d2[i2]),
        c_estimate=c_est,
        worst_witness={"b": float(z[i1]), "c": float(z[i2]), "d": float(z[i3])},
    )


def min_second_derivative(phi: PhiFunction, zmin: float = 1e-3, zmax: float = 1e3, grid: int = 20_001) -> Tuple[float, float]:
    """Minimum of Phi'' over ``[zmin, zmax]``: log grid scan, then bounded refinement."""
    lz = np.linspace(math.log(zmin), math.log(zmax), grid)
    vals = phi.d2(np.exp(lz))
    i = int(np.argmin(vals))
    lo, hi = lz[max(i - 1, 0)], lz[min(i + 1, grid - 1)]
    best_x, best = lz[i], float(vals[i])
    if hi > lo:
        res = minimize_scalar(lambda x: float(phi.d2(math.exp(x))), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < best:
            best_x, best = res.x, float(res.fun)
    return float(math.exp(best_x)), best


def critical_log_power(zmin: float = 1e-3, zmax: float = 1e3, tol: float = 1e-8) -> float:
    """Smallest p in [1, 2] for which ``ln(1 + z) + z**p`` is convex on ``[zmin, zmax]``.

    Found by bisection on the sign of the minimum of Phi''.
    """
    def margin(p):
        return min_second_derivative(PhiFunction.log_power(p), zmin, zmax)[1]

    lo, hi = 1.0, 2.0
    if margin(hi) < 0:
        raise ValueError("log-power family is not convex even at p = 2 on this range")
    if margin(lo) >= 0:
        return lo
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if margin(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return hi
