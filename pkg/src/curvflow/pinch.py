"""Pinching-cone constants and pointwise verifiers for the curvature inequalities.

The cone constants are optimised over the compact slice
``{kappa : kappa_i >= eps * kappa_j, |kappa| = 1}``.  By symmetry of ``f`` it
suffices to search the ordered chamber ``kappa_1 >= ... >= kappa_n``, which is
parametrised by the unit cube through successive curvature ratios so that the
cone boundary sits exactly on the faces of the cube.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import ConeViolation, DomainError, NotAchievable, Unclassified
from .phi import PhiFunction
from .symfunc import (
    ConeSampler,
    Convexity,
    SpeedFunction,
    _as_kappa,
    default_convexity,
    derivatives,
)

__all__ = [
    "PinchingConstants",
    "SecondFundamentalSample",
    "CurvestSlack",
    "chamber_points",
    "cone_quantities",
    "cone_constants",
    "absorption_constant",
    "weakest_pinching",
    "pinching_table",
    "random_second_fundamental",
    "verify_curvest",
    "verify_fconvprops",
    "g_umbilic_contraction",
    "pinching_bound",
]


@dataclass(frozen=True)
class PinchingConstants:
    epsilon: float
    M0: float
    M1: float
    M2: float
    Q: float
    c: float
    n: int
    f: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def absorption_constant(n: int, eps: float, M0: float, M1: float, M2: float, c: float) -> float:
    """Q(eps): negative values mean the gradient terms can be absorbed."""
    return math.sqrt(n * (n - 1) / 2.0) * ((1.0 - eps) * M2 + c * M0) - (n - 1) / (2.0 * n**2) * eps**2 * M1


def chamber_points(u: np.ndarray, eps: float) -> np.ndarray:
    """Map ``u in [0, 1]^(n-1)`` onto unit vectors of the ordered pinching chamber."""
    u = np.asarray(u, dtype=float)
    shape = u.shape[:-1]
    m = u.shape[-1]
    kappa = np.empty(shape + (m + 1,))
    kappa[..., 0] = 1.0
    prod = np.ones(shape)
    for i in range(m):
        lower = eps / prod
        prod = prod * (lower + (1.0 - lower) * u[..., i])
        kappa[..., i + 1] = prod
    return kappa / np.linalg.norm(kappa, axis=-1, keepdims=True)


def cone_quantities(f: SpeedFunction, kappa: np.ndarray):
    """Pointwise ``(|kappa| |grad f|^2 / f, min grad f, max |eig Hess f|)``."""
    b = derivatives(f, kappa)
    norm = np.linalg.norm(kappa, axis=-1)
    m0 = norm * (b.gradient**2).sum(axis=-1) / b.value
    m1 = b.gradient.min(axis=-1)
    m2 = np.abs(np.linalg.eigvalsh(b.hessian)).max(axis=-1)
    return m0, m1, m2


def _default_resolution(n: int) -> int:
    return {2: 10_001, 3: 301}.get(n, 41)


def _refine(objective, u0: np.ndarray, h: float, rounds: int = 3, points: int = 21) -> tuple:
    """Coordinate descent in the unit cube; the step shrinks tenfold each round."""
    u = u0.copy()
    best = float(objective(u[None, :])[0])
    for _ in range(rounds):
        for d in range(u.size):
            line = np.repeat(u[None, :], points, axis=0)
            line[:, d] = np.clip(u[d] + np.linspace(-h, h, points), 0.0, 1.0)
            vals = objective(line)
            j = int(np.argmax(vals))
            if vals[j] > best:
                best = float(vals[j])
                u = line[j].copy()
        h /= 10.0
    return best, u


def cone_constants(f: SpeedFunction, n: int, eps: float, c: float, resolution: Optional[int] = None) -> PinchingConstants:
    """M0, M1, M2 by dense chamber grid plus three rounds of local refinement."""
    if n != f.n:
        raise ValueError(f"dimension mismatch: f is defined for n={f.n}, got n={n}")
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    res = resolution or _default_resolution(n)
    axes = [np.linspace(0.0, 1.0, res)] * (n - 1)
    u = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n - 1)
    kappa = chamber_points(u, eps)
    m0, m1, m2 = cone_quantities(f, kappa)
    if not (np.all(np.isfinite(m0)) and np.all(np.isfinite(m1)) and np.all(np.isfinite(m2))):
        raise ConeViolation(f"{f.id} is not finite on the pinching slice eps={eps}")
    h = 1.0 / (res - 1)
    out = []
    for k, (vals, sign) in enumerate(((m0, 1.0), (m1, -1.0), (m2, 1.0))):
        i = int(np.argmax(sign * vals))

        def objective(x, k=k, sign=sign):
            return sign * cone_quantities(f, chamber_points(x, eps))[k]

        best, _ = _refine(objective, u[i], h)
        out.append(sign * max(best, float(sign * vals[i])))
    M0, M1, M2 = out
    Q = absorption_constant(n, eps, M0, M1, M2, c)
    return PinchingConstants(float(eps), M0, M1, M2, Q, float(c), n, f.id)


def weakest_pinching(f: SpeedFunction, n: int, c: float, tol: float = 1e-4, resolution: Optional[int] = None) -> float:
    """Smallest eps in (0, 1] with Q(eps) <= 0, by bisection to ``tol``.

    Returns 0.0 when Q is already non-positive at ``eps = tol``.
    """
    def Q(eps):
        return cone_constants(f, n, eps, c, resolution).Q

    q1 = Q(1.0)
    if q1 >= 0:
        raise NotAchievable(f"Q(1) = {q1:.6g} >= 0 for f={f.id}, n={n}, c={c}")
    lo, hi = tol, 1.0
    if Q(lo) <= 0:
        return 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if Q(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return hi


def pinching_table(f: SpeedFunction, n: int, c: float, eps_grid: Sequence[float], resolution: Optional[int] = None):
    return [cone_constants(f, n, float(e), c, resolution) for e in eps_grid]


# --- curvature inequalities ---------------------------------------------------


@dataclass(frozen=True)
class SecondFundamentalSample:
    """Diagonal second fundamental form with a Codazzi-symmetric derivative.

    ``grad_a[..., i, j, k]`` is the component ``nabla_i h_jk`` and is totally
    symmetric.  Leading axes index independent samples.
    """

    kappa: np.ndarray
    grad_a: np.ndarray

    @property
    def n(self) -> int:
        return self.kappa.shape[-1]

    @property
    def H(self):
        return self.kappa.sum(axis=-1)

    @property
    def A2(self):
        return (self.kappa**2).sum(axis=-1)

    @property
    def A0_2(self):
        return self.A2 - self.H**2 / self.n

    @property
    def C(self):
        return (self.kappa**3).sum(axis=-1)


def _symmetric_tensors(rng: np.random.Generator, n: int, size: int) -> np.ndarray:
    """Totally symmetric 3-tensors; each independent entry is uniform in [-1, 1]."""
    t = np.empty((size, n, n, n))
    for i in range(n):
        for j in range(i, n):
            for k in range(j, n):
                v = rng.uniform(-1.0, 1.0, size)
                for a, b, c in {(i, j, k), (i, k, j), (j, i, k), (j, k, i), (k, i, j), (k, j, i)}:
                    t[:, a, b, c] = v
    return t


def random_second_fundamental(n: int, eps: float, size: int, seed: int = 0) -> SecondFundamentalSample:
    sampler = ConeSampler(n, eps=eps, size=size, seed=seed)
    rng = sampler.rng()
    kappa = sampler.draw(rng)
    return SecondFundamentalSample(kappa, _symmetric_tensors(rng, n, size))


@dataclass(frozen=True)
class CurvestSlack:
    """Slacks of the three pinching inequalities and their natural scales."""

    i: np.ndarray
    ii: np.ndarray
    iii: np.ndarray
    scale_i: np.ndarray
    scale_ii: np.ndarray
    scale_iii: np.ndarray

    def violations(self, tol: float = 1e-12) -> dict:
        return {
            "i": int(np.sum(self.i < -tol * self.scale_i)),
            "ii": int(np.sum(self.ii < -tol * self.scale_ii)),
            "iii": int(np.sum(self.iii < -tol * self.scale_iii)),
        }

    def holds(self, tol: float = 1e-12) -> bool:
        return not any(self.violations(tol).values())


def verify_curvest(sample: SecondFundamentalSample, eps: float) -> CurvestSlack:
    kappa = np.asarray(sample.kappa, dtype=float)
    n = kappa.shape[-1]
    if np.any(kappa <= 0) or np.any(kappa.min(axis=-1) < eps * kappa.max(axis=-1)):
        raise ConeViolation(f"sample is not pinched with eps={eps}")
    H, A2, A02, C = sample.H, sample.A2, sample.A0_2, sample.C
    t = np.asarray(sample.grad_a, dtype=float)
    grad_h = np.einsum("...ijj->...i", t)
    h = kappa[..., :, None] * np.eye(n)
    diff = H[..., None, None, None] * t - h[..., None, :, :] * grad_h[..., :, None, None]
    lhs_iii = (diff**2).sum(axis=(-3, -2, -1))
    grad_norm = (t**2).sum(axis=(-3, -2, -1))
    H2 = H**2
    return CurvestSlack(
        i=(n - 1) / 2.0 * (1.0 - eps) ** 2 * H2 - A02,
        ii=H * C - A2**2 - eps**2 / n * H2 * A02,
        iii=lhs_iii - (n - 1) / (2.0 * n**2) * eps**2 * H2 * grad_norm,
        scale_i=H2,
        scale_ii=H2**2,
        scale_iii=H2 * np.maximum(grad_norm, 1.0),
    )


def verify_fconvprops(f: SpeedFunction, kappa, convexity: Optional[Convexity] = None):
    """``(|A|^2 F - H sum f^i k_i^2,  F H - n sum f^i k_i^2)`` at ``kappa``.

    For convex ``f`` both are <= 0; for concave ``f`` the first is >= 0.
    """
    kind = convexity if convexity is not None else default_convexity(f).kind
    kind = Convexity(kind)
    if kind is Convexity.NEITHER:
        raise Unclassified(f"{f.id} is neither convex nor concave on the sampled cone")
    kappa = _as_kappa(kappa)
    b = derivatives(f, kappa)
    H = kappa.sum(axis=-1)
    A2 = (kappa**2).sum(axis=-1)
    weighted = (b.gradient * kappa**2).sum(axis=-1)
    first = A2 * b.value - weighted * H
    second = b.value * H - f.n * weighted
    if np.ndim(first) == 0:
        return float(first), float(second)
    return first, second


def g_umbilic_contraction(kappa1, kappa2, n: int):
    """Both sides of the zero-order identity for ``G = n |A0|^2 / H^2``.

    ``kappa1`` is the simple (axial) curvature and ``kappa2`` has multiplicity
    ``n - 1``.  Returns ``(difference, G, left, right)``.
    """
    k1 = np.asarray(kappa1, dtype=float)
    k2 = np.asarray(kappa2, dtype=float)
    if np.any(k1 <= 0) or np.any(k2 <= 0):
        raise DomainError("axisymmetric curvatures must be positive")
    H = k1 + (n - 1) * k2
    if np.any(H == 0):
        raise DomainError("mean curvature vanishes")
    H3 = H**3
    dg1 = 2.0 * n * (n - 1) * k2 * (k1 - k2) / H3
    dg2 = 2.0 * n * k1 * (k2 - k1) / H3
    left = dg1 * k1**2 + (n - 1) * dg2 * k2**2
    right = 2.0 * n * (n - 1) * k1 * k2 * (k1 - k2) ** 2 / H3
    G = (n - 1) * (k1 - k2) ** 2 / H**2
    out = (left - right, G, left, right)
    if np.ndim(left) == 0:
        return tuple(float(x) for x in out)
    return out


def pinching_bound(kappa, f: SpeedFunction, phi: PhiFunction, psi: float = 1.0):
    """``(kappa_max / kappa_min, 1 + 2 Phi'(z) / (Phi''(z) F), ratio <= bound)`` with ``z = F / psi``.

    The bound is ``+inf`` wherever ``Phi''(z) = 0``.
    """
    kappa = _as_kappa(kappa)
    if np.any(kappa <= 0):
        raise DomainError("pinching bound needs positive curvatures")
    if psi <= 0:
        raise DomainError("psi must be positive")
    F = np.asarray(f(kappa), dtype=float)
    z = F / psi
    d1, d2 = phi.d1(z), phi.d2(z)
    with np.errstate(divide="ignore"):
        bound = np.where(d2 > 0, 1.0 + 2.0 * d1 / (np.where(d2 > 0, d2, 1.0) * F), np.inf)
    ratio = kappa.max(axis=-1) / kappa.min(axis=-1)
    ok = ratio <= bound
    if np.ndim(ratio) == 0:
        return float(ratio), float(bound), bool(ok)
    return ratio, bound, ok
