"""Degree-one homogeneous symmetric speed functions of the principal curvatures.

Every built-in function ``f`` is normalised so that ``f(1, ..., 1) = 1`` and is
evaluated on the positive cone.  All evaluators are vectorised over leading
axes: a ``(..., n)`` array of curvature vectors gives ``(...)`` values,
``(..., n)`` gradients and ``(..., n, n)`` Hessians.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .errors import ConeViolation

__all__ = [
    "SpeedKind",
    "CurvatureVector",
    "SpeedFunction",
    "DerivativeBundle",
    "ConeSampler",
    "ConditionReport",
    "Convexity",
    "ConvexityReport",
    "evaluate",
    "derivatives",
    "check_conditions_F",
    "classify_convexity",
    "elementary_symmetric",
]


class SpeedKind(str, enum.Enum):
    MEAN = "mean"
    SIGMA_K = "sigma-k"
    NORM_A = "norm-A"
    GAUSS_ROOT = "gauss-root"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class CurvatureVector:
    """Principal curvatures at a point, with cone-membership queries."""

    kappa: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=float).reshape(-1)
        if k.size < 2:
            raise ValueError("need at least two principal curvatures")
        object.__setattr__(self, "kappa", k)

    @property
    def n(self) -> int:
        return self.kappa.size

    def in_positive_cone(self) -> bool:
        return bool(np.all(self.kappa > 0))

    def pinching(self) -> float:
        """Largest eps with kappa_i >= eps * kappa_j for all i, j (0 outside the cone)."""
        if not self.in_positive_cone():
            return 0.0
        return float(self.kappa.min() / self.kappa.max())

    def in_pinching_cone(self, eps: float) -> bool:
        return self.in_positive_cone() and bool(self.kappa.min() >= eps * self.kappa.max())


def _as_kappa(kappa) -> np.ndarray:
    if isinstance(kappa, CurvatureVector):
        return kappa.kappa
    return np.asarray(kappa, dtype=float)


def elementary_symmetric(kappa: np.ndarray, k: int) -> np.ndarray:
    """sigma_k over the last axis; sigma_0 = 1 and sigma_k = 0 for k < 0 or k > n."""
    kappa = np.asarray(kappa, dtype=float)
    n = kappa.shape[-1]
    shape = kappa.shape[:-1]
    if k < 0 or k > n:
        return np.zeros(shape)
    e = [np.ones(shape)] + [np.zeros(shape) for _ in range(k)]
    for i in range(n):
        ki = kappa[..., i]
        for j in range(k, 0, -1):
            e[j] = e[j] + ki * e[j - 1]
    return e[k]


@dataclass(frozen=True)
class DerivativeBundle:
    value: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray


@dataclass(frozen=True)
class SpeedFunction:
    """A normalised, symmetric, degree-one homogeneous function of curvature.

    Use :meth:`from_id` for the built-ins ("mean", "sigma-k:<k>", "norm-A",
    "gauss-root").  ``custom`` wraps an arbitrary vectorised callable and is
    meant for test fixtures; its derivatives come from finite differences and
    nothing about it is assumed.
    """

    kind: SpeedKind
    n: int
    k: Optional[int] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None
    label: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SpeedKind(self.kind))
        if self.n < 2:
            raise ValueError("dimension n must be >= 2")
        if self.kind is SpeedKind.SIGMA_K:
            if self.k is None or not 1 <= self.k <= self.n:
                raise ValueError(f"sigma-k needs 1 <= k <= n, got k={self.k}, n={self.n}")
        if self.kind is SpeedKind.CUSTOM and self.func is None:
            raise ValueError("custom speed function needs a callable")

    @classmethod
    def from_id(cls, text: str, n: int) -> "SpeedFunction":
        name, _, arg = text.strip().partition(":")
        if name == "sigma-k":
            try:
                k = int(arg)
            except ValueError:
                raise ValueError(f"bad sigma-k order in {text!r}") from None
            return cls(SpeedKind.SIGMA_K, n, k=k)
        if arg:
            raise ValueError(f"speed function {name!r} takes no parameter")
        try:
            kind = SpeedKind(name)
        except ValueError:
            raise ValueError(f"unknown speed function {text!r}") from None
        if kind is SpeedKind.CUSTOM:
            raise ValueError("custom speed functions cannot be named by id")
        return cls(kind, n)

    @classmethod
    def custom(cls, func, n: int, label: str = "custom") -> "SpeedFunction":
        return cls(SpeedKind.CUSTOM, n, func=func, label=label)

    @property
    def id(self) -> str:
        if self.kind is SpeedKind.SIGMA_K:
            return f"sigma-k:{self.k}"
        if self.kind is SpeedKind.CUSTOM:
            return self.label or "custom"
        return self.kind.value

    def __call__(self, kappa) -> np.ndarray:
        return evaluate(self, kappa)


def _check_cone(f: SpeedFunction, kappa: np.ndarray) -> None:
    if kappa.shape[-1] != f.n:
        raise ValueError(f"{f.id} expects {f.n} curvatures, got {kappa.shape[-1]}")
    bad = ~np.all(kappa > 0, axis=-1)
    if np.any(bad):
        witness = kappa[bad][0] if kappa.ndim > 1 else kappa
        raise ConeViolation(f"{f.id} requires kappa in the positive cone, got {witness}")


def _value(f: SpeedFunction, kappa: np.ndarray) -> np.ndarray:
    n = f.n
    if f.kind is SpeedKind.MEAN:
        return kappa.sum(axis=-1) / n
    if f.kind is SpeedKind.NORM_A:
        return np.sqrt((kappa**2).sum(axis=-1) / n)
    if f.kind is SpeedKind.GAUSS_ROOT:
        return np.exp(np.log(kappa).mean(axis=-1))
    if f.kind is SpeedKind.SIGMA_K:
        s = elementary_symmetric(kappa, f.k) / math.comb(n, f.k)
        return s ** (1.0 / f.k)
    return np.asarray(f.func(kappa), dtype=float)


def evaluate(f: SpeedFunction, kappa) -> np.ndarray:
    kappa = _as_kappa(kappa)
    _check_cone(f, kappa)
    out = _value(f, kappa)
    return float(out) if np.ndim(out) == 0 else out


def _sigma_k_bundle(f: SpeedFunction, kappa: np.ndarray) -> DerivativeBundle:
    n, k = f.n, f.k
    s = elementary_symmetric(kappa, k)
    ds = np.stack([elementary_symmetric(np.delete(kappa, i, axis=-1), k - 1) for i in range(n)], axis=-1)
    d2s = np.zeros(kappa.shape + (n,))
    if k >= 2:
        for i in range(n):
            for j in range(i + 1, n):
                rest = np.delete(kappa, [i, j], axis=-1)
                v = elementary_symmetric(rest, k - 2)
                d2s[..., i, j] = v
                d2s[..., j, i] = v
    value = (s / math.comb(n, k)) ** (1.0 / k)
    fv = value[..., None]
    grad = fv * ds / (k * s[..., None])
    outer = ds[..., :, None] * ds[..., None, :]
    hess = fv[..., None] * (
        (1.0 / k) * (1.0 / k - 1.0) * outer / (s**2)[..., None, None] + d2s / (k * s)[..., None, None]
    )
    return DerivativeBundle(value, grad, hess)


def _fd_bundle(f: SpeedFunction, kappa: np.ndarray) -> DerivativeBundle:
    # central differences, h = 1e-6 |kappa|
    n = f.n
    h = 1e-6 * np.linalg.norm(kappa, axis=-1)
    eye = np.eye(n)
    value = _value(f, kappa)
    grad = np.empty(kappa.shape)
    hess = np.empty(kappa.shape + (n,))
    hh = h[..., None]
    for i in range(n):
        ei = eye[i] * hh
        fp, fm = _value(f, kappa + ei), _value(f, kappa - ei)
        grad[..., i] = (fp - fm) / (2 * h)
        hess[..., i, i] = (fp - 2 * value + fm) / h**2
        for j in range(i + 1, n):
            ej = eye[j] * hh
            v = (
                _value(f, kappa + ei + ej)
                - _value(f, kappa + ei - ej)
                - _value(f, kappa - ei + ej)
                + _value(f, kappa - ei - ej)
            ) / (4 * h**2)
            hess[..., i, j] = v
            hess[..., j, i] = v
    return DerivativeBundle(value, grad, hess)


def derivatives(f: SpeedFunction, kappa) -> DerivativeBundle:
    """Value, gradient and Hessian of ``f`` at ``kappa``.

    Closed forms for every built-in; finite differences for custom functions.
    """
    kappa = _as_kappa(kappa)
    _check_cone(f, kappa)
    n = f.n
    eye = np.eye(n)
    if f.kind is SpeedKind.MEAN:
        value = kappa.sum(axis=-1) / n
        return DerivativeBundle(value, np.full(kappa.shape, 1.0 / n), np.zeros(kappa.shape + (n,)))
    if f.kind is SpeedKind.NORM_A:
        norm = np.linalg.norm(kappa, axis=-1)[..., None]
        u = kappa / norm
        grad = u / math.sqrt(n)
        hess = (eye - u[..., :, None] * u[..., None, :]) / (norm[..., None] * math.sqrt(n))
        return DerivativeBundle(norm[..., 0] / math.sqrt(n), grad, hess)
    if f.kind is SpeedKind.GAUSS_ROOT:
        value = np.exp(np.log(kappa).mean(axis=-1))
        inv = 1.0 / kappa
        fv = value[..., None]
        grad = fv * inv / n
        hess = fv[..., None] * (inv[..., :, None] * inv[..., None, :] / n**2 - eye * (inv**2)[..., None, :] / n)
        return DerivativeBundle(value, grad, hess)
    if f.kind is SpeedKind.SIGMA_K:
        return _sigma_k_bundle(f, kappa)
    return _fd_bundle(f, kappa)


@dataclass(frozen=True)
class ConeSampler:
    """Seeded sampler of the pinching cone ``{kappa_i >= eps * kappa_j}``.

    Directions are uniform on the slice of the cone through the unit simplex,
    radii are log-uniform in ``radius``.
    """

    n: int
    eps: float = 0.2
    size: int = 10_000
    seed: int = 0
    radius: tuple = (0.1, 10.0)

    def __post_init__(self):
        if not 0.0 <= self.eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)

    def draw(self, rng: Optional[np.random.Generator] = None) -> np.ndarray:
        rng = self.rng() if rng is None else rng
        n, eps = self.n, self.eps
        # the slice lies inside the shrunken simplex {x_i >= eps / (eps + n - 1)}
        lo = eps / (eps + n - 1)
        chunks, have = [], 0
        while have < self.size:
            y = rng.dirichlet(np.ones(n), size=max(self.size, 1024))
            x = lo + (1.0 - n * lo) * y
            x = x[x.min(axis=1) >= eps * x.max(axis=1)]
            chunks.append(x)
            have += len(x)
        x = np.concatenate(chunks)[: self.size]
        r = np.exp(rng.uniform(math.log(self.radius[0]), math.log(self.radius[1]), size=(self.size, 1)))
        return x * r


@dataclass
class ConditionReport:
    """Outcome of the sampled structure checks on a speed function."""

    function: str
    samples: int
    symmetric: bool
    symmetry_residual: float
    increasing: bool
    min_gradient: float
    homogeneous: bool
    homogeneity_residual: float
    positive: bool
    normalised: bool
    normalisation_residual: float
    witnesses: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.symmetric and self.increasing and self.homogeneous and self.positive and self.normalised

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "witnesses"}
        d["passed"] = self.passed
        d["witnesses"] = {k: np.asarray(v).tolist() for k, v in self.witnesses.items()}
        return d


SYMMETRY_TOL = 1e-10
HOMOGENEITY_TOL = 1e-10
NORMALISATION_TOL = 1e-12


def check_conditions_F(f: SpeedFunction, sampler: ConeSampler) -> ConditionReport:
    """Sampled check of symmetry, monotonicity, homogeneity and normalisation.

    Residuals are relative to the local value of ``f``.  Failures are reported
    with the worst sample as witness rather than raised.
    """
    rng = sampler.rng()
    kappa = sampler.draw(rng)
    value = _value(f, kappa)
    scale = np.maximum(np.abs(value), np.finfo(float).tiny)

    perm = rng.permuted(kappa, axis=1)
    sym = np.abs(_value(f, perm) - value) / scale
    i_sym = int(np.argmax(sym))

    grad = derivatives(f, kappa).gradient
    gmin = grad.min(axis=1)
    i_grad = int(np.argmin(gmin))

    k = rng.uniform(0.1, 10.0, size=len(kappa))
    hom = np.abs(_value(f, k[:, None] * kappa) - k * value) / (k * scale)
    i_hom = int(np.argmax(hom))

    i_pos = int(np.argmin(value))
    one = float(_value(f, np.ones(f.n)))

    return ConditionReport(
        function=f.id,
        samples=len(kappa),
        symmetric=bool(sym[i_sym] <= SYMMETRY_TOL),
        symmetry_residual=float(sym[i_sym]),
        increasing=bool(gmin[i_grad] > 0),
        min_gradient=float(gmin[i_grad]),
        homogeneous=bool(hom[i_hom] <= HOMOGENEITY_TOL),
        homogeneity_residual=float(hom[i_hom]),
        positive=bool(value[i_pos] > 0),
        normalised=bool(abs(one - 1.0) <= NORMALISATION_TOL),
        normalisation_residual=abs(one - 1.0),
        witnesses={
            "symmetry": kappa[i_sym],
            "symmetry_permuted": perm[i_sym],
            "gradient": kappa[i_grad],
            "homogeneity": kappa[i_hom],
            "homogeneity_factor": k[i_hom],
            "positivity": kappa[i_pos],
        },
    )


class Convexity(str, enum.Enum):
    CONVEX = "convex"
    CONCAVE = "concave"
    NEITHER = "neither"


@dataclass(frozen=True)
class ConvexityReport:
    kind: Convexity
    margin: float
    min_eigenvalue: float
    max_eigenvalue: float


CONVEXITY_TOL = 1e-9


def nonradial_hessian_eigenvalues(hess: np.ndarray, kappa: np.ndarray) -> np.ndarray:
    """Eigenvalues of the Hessian restricted to the complement of the radial direction.

    Returned scaled by ``|kappa|`` so they are invariant under dilation.
    """
    n = kappa.shape[-1]
    norm = np.linalg.norm(kappa, axis=-1, keepdims=True)
    u = kappa / norm
    # Householder reflection swapping u and e_n; its other columns span u-perp
    v = u.copy()
    v[..., -1] -= 1.0
    vv = (v**2).sum(axis=-1, keepdims=True)[..., None]
    house = np.eye(n) - 2.0 * v[..., :, None] * v[..., None, :] / vv
    basis = house[..., :, :-1]
    restricted = np.swapaxes(basis, -1, -2) @ hess @ basis
    return np.linalg.eigvalsh(restricted) * norm


def classify_convexity(f: SpeedFunction, sampler: ConeSampler) -> ConvexityReport:
    """Sign pattern of the nonradial Hessian eigenvalues across cone samples."""
    kappa = sampler.draw()
    eig = nonradial_hessian_eigenvalues(derivatives(f, kappa).hessian, kappa)
    lo, hi = float(eig.min()), float(eig.max())
    if lo > CONVEXITY_TOL:
        kind = Convexity.CONVEX
    elif hi < -CONVEXITY_TOL:
        kind = Convexity.CONCAVE
    else:
        kind = Convexity.NEITHER
    return ConvexityReport(kind, float(np.abs(eig).min()), lo, hi)


@lru_cache(maxsize=64)
def default_convexity(f: SpeedFunction) -> ConvexityReport:
    return classify_convexity(f, ConeSampler(f.n))
