"""Command-line entry point: one analysis pipeline per invocation.

Exit codes: 0 success, 1 a checked mathematical condition failed (or the
requested pinching is not achievable), 2 invalid input or runtime error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from . import report
from .errors import ConfigInvalid, CurvFlowError, NotAchievable
from .flow_sim import FlowConfig, parse_shape, run, self_similarity_report
from .phi import PhiFunction, check_conditions_phi
from .pinch import pinching_table, weakest_pinching
from .sphere_ode import closed_form_extinction, closed_form_time, solve_psi
from .symfunc import ConeSampler, SpeedFunction, check_conditions_F, classify_convexity

COMMANDS = ("check-f", "check-phi", "pinch-threshold", "sphere-ode", "flow", "ss-residual")

# per-command default for the shared --tol flag
DEFAULT_TOL = {"sphere-ode": 1e-8, "pinch-threshold": 1e-4}


@dataclass(frozen=True)
class RunConfig:
    command: str
    f: str = "mean"
    phi: str = "power-sum:1,1;1,3"
    n: int = 2
    eps: float = 0.2
    c: float = 0.0
    r: float = 1.0
    tol: Optional[float] = None
    m: int = 256
    shape: str = "sphere:1"
    dt_safety: float = 0.2
    samples: int = 10_000
    zmin: float = 1e-6
    zmax: float = 1e6
    points: int = 20
    seed: int = 0
    out: str = "."

    def __post_init__(self):
        self.validate()

    @classmethod
    def keys(cls):
        return [fl.name for fl in fields(cls)]

    @classmethod
    def from_mapping(cls, mapping: dict) -> "RunConfig":
        """Build from strings or typed values; unknown keys raise ConfigInvalid."""
        kwargs = {}
        types = {fl.name: fl.type for fl in fields(cls)}
        for raw_key, value in mapping.items():
            key = raw_key.replace("-", "_")
            if key not in types:
                raise ConfigInvalid(raw_key, "unknown key")
            kwargs[key] = _convert(key, types[key], value)
        if "command" not in kwargs:
            raise ConfigInvalid("command", "missing")
        return cls(**kwargs)

    def to_mapping(self) -> dict:
        return {k: getattr(self, k) for k in self.keys()}

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigInvalid("command", f"must be one of {', '.join(COMMANDS)}")
        if self.n < 2:
            raise ConfigInvalid("n", "dimension must be >= 2")
        if self.command in ("flow", "ss-residual") and self.n not in (2, 3):
            raise ConfigInvalid("n", "the flow simulator supports n = 2 or 3")
        if not 0.0 < self.eps <= 1.0:
            raise ConfigInvalid("eps", "must lie in (0, 1]")
        if not (math.isfinite(self.c) and self.c >= 0):
            raise ConfigInvalid("c", "must be finite and >= 0")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ConfigInvalid("r", "must be positive")
        if self.tol is not None and not (math.isfinite(self.tol) and self.tol > 0):
            raise ConfigInvalid("tol", "must be positive")
        if self.m < 8:
            raise ConfigInvalid("m", "grid needs at least 8 points")
        if not 0.0 < self.dt_safety <= 1.0:
            raise ConfigInvalid("dt_safety", "must lie in (0, 1]")
        if self.samples < 1:
            raise ConfigInvalid("samples", "must be >= 1")
        if not 0.0 < self.zmin < self.zmax:
            raise ConfigInvalid("zmin", "need 0 < zmin < zmax")
        if self.points < 2:
            raise ConfigInvalid("points", "must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigInvalid("seed", "must be a 64-bit unsigned integer")
        for key, parse in (("f", lambda v: SpeedFunction.from_id(v, self.n)), ("phi", PhiFunction.from_id)):
            try:
                parse(getattr(self, key))
            except ValueError as exc:
                raise ConfigInvalid(key, str(exc)) from None
        kind = self.shape.partition(":")[0]
        if kind not in ("sphere", "spheroid", "file"):
            raise ConfigInvalid("shape", f"unknown shape {self.shape!r}")

    @property
    def tolerance(self) -> float:
        return self.tol if self.tol is not None else DEFAULT_TOL.get(self.command, 1e-8)

    def speed(self) -> SpeedFunction:
        return SpeedFunction.from_id(self.f, self.n)

    def modifier(self) -> PhiFunction:
        return PhiFunction.from_id(self.phi)


def _convert(key, typ, value):
    if isinstance(typ, str):
        typ = {"str": str, "int": int, "float": float, "Optional[float]": Optional[float]}[typ]
    try:
        if typ is Optional[float]:
            if value is None or (isinstance(value, str) and value.strip().lower() in ("", "none", "null")):
                return None
            return float(value)
        if typ is int:
            if isinstance(value, float) and not value.is_integer():
                raise ValueError(f"{value} is not an integer")
            return int(value)
        if typ is float:
            return float(value)
        return str(value).strip()
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(key, str(exc)) from None


def read_config_file(path) -> dict:
    """``key = value`` per line; lines starting with ``#`` are comments; keys are RunConfig field names."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigInvalid(f"line {lineno}", f"expected key=value, got {line!r}")
        key = key.strip().replace("-", "_")
        if key not in RunConfig.keys():
            raise ConfigInvalid(key, "unknown key")
        out[key] = value.strip()
    return out


# --- pipelines --------------------------------------------------------------


def _check_f(cfg: RunConfig, meta: dict, out: Path) -> int:
    f = cfg.speed()
    sampler = ConeSampler(cfg.n, cfg.eps, cfg.samples, cfg.seed)
    rep = check_conditions_F(f, sampler)
    conv = classify_convexity(f, sampler)
    payload = {
        "report": rep.to_dict(),
        "convexity": {"kind": conv.kind.value, "min_eigenvalue": conv.min_eigenvalue,
                      "max_eigenvalue": conv.max_eigenvalue},
    }
    report.write_json(out / "check_f.json", payload, meta)
    return 0 if rep.passed else 1


def _check_phi(cfg: RunConfig, meta: dict, out: Path) -> int:
    rep = check_conditions_phi(cfg.modifier(), cfg.zmin, cfg.zmax)
    report.write_json(out / "check_phi.json", {"report": rep.to_dict()}, meta)
    return 0 if rep.passed else 1


def _pinch_threshold(cfg: RunConfig, meta: dict, out: Path) -> int:
    f = cfg.speed()
    eps_grid = np.linspace(1.0 / cfg.points, 1.0, cfg.points)
    table = pinching_table(f, cfg.n, cfg.c, eps_grid)
    try:
        eps_star, status, code = weakest_pinching(f, cfg.n, cfg.c, cfg.tolerance), "achievable", 0
    except NotAchievable as exc:
        eps_star, status, code = None, f"not_achievable: {exc}", 1
    rows = [(p.epsilon, p.M0, p.M1, p.M2, p.Q) for p in table]
    report.write_csv(out / "pinch_threshold.csv", ["epsilon", "M0", "M1", "M2", "Q"], rows, meta)
    payload = {
        "epsilon_star": eps_star,
        "status": status,
        "table": [{"epsilon": r[0], "M0": r[1], "M1": r[2], "M2": r[3], "Q": r[4]} for r in rows],
    }
    report.write_json(out / "pinch_threshold.json", payload, meta)
    return code


def _sphere_ode(cfg: RunConfig, meta: dict, out: Path) -> int:
    phi = cfg.modifier()
    traj = solve_psi(cfg.r, phi, rel_tol=cfg.tolerance)
    report.write_csv(out / "sphere_ode.csv", ["t", "psi", "psi_prime"],
                     zip(traj.t.tolist(), traj.psi.tolist(), traj.psi_prime.tolist()), meta)
    payload = {"T": traj.extinction_time, "steps": traj.steps, "rejected": traj.rejected,
               "tail_exponent": traj.tail_exponent, "t_last": float(traj.t[-1]), "psi_last": float(traj.psi[-1])}
    exact = closed_form_extinction(phi, cfg.r)
    if exact is not None:
        keep = traj.psi >= 1e-3
        residual = np.abs(traj.t[keep] - closed_form_time(phi, cfg.r, traj.psi[keep]))
        payload["closed_form_T"] = exact
        payload["closed_form_residual_max"] = float(residual.max())
    report.write_json(out / "sphere_ode.json", payload, meta)
    return 0


def _simulate(cfg: RunConfig):
    profile = parse_shape(cfg.shape, cfg.m, cfg.n)
    if profile.n != cfg.n:
        raise ConfigInvalid("n", f"shape file is for n={profile.n}")
    result = run(profile, cfg.speed(), cfg.modifier(), FlowConfig(dt_safety=cfg.dt_safety))
    return result, self_similarity_report(result)


def _flow(cfg: RunConfig, meta: dict, out: Path) -> int:
    result, ss = _simulate(cfg)
    cols = ["t", "min_s", "max_s", "kappa_ratio_max", "bound_min", "F_min", "F_max", "ss_residual"]
    rows = [[st.t] + [getattr(st.diagnostics, c) for c in cols[1:]] for st in result.states]
    report.write_csv(out / "flow.csv", cols, rows, meta)
    payload = {"summary": result.summary,
               "self_similarity": {"relative_max_initial": float(ss.relative_max[0]),
                                   "relative_max_over_run": float(ss.relative_max.max())}}
    report.write_json(out / "flow.json", payload, meta)
    return 0


def _ss_residual(cfg: RunConfig, meta: dict, out: Path) -> int:
    result, ss = _simulate(cfg)
    cols = ["t", "psi", "psi_prime", "residual_max", "residual_l2", "relative_max", "relative_l2"]
    rows = zip(*(getattr(ss, c).tolist() for c in cols))
    report.write_csv(out / "ss_residual.csv", cols, rows, meta)
    payload = {"status": result.status, "records": len(result.states),
               "relative_max_initial": float(ss.relative_max[0]),
               "relative_max_over_run": float(ss.relative_max.max()),
               "relative_l2_over_run": float(ss.relative_l2.max()),
               "psi_fit_method": result.summary["psi_fit_method"]}
    report.write_json(out / "ss_residual.json", payload, meta)
    return 0


PIPELINES = {
    "check-f": _check_f,
    "check-phi": _check_phi,
    "pinch-threshold": _pinch_threshold,
    "sphere-ode": _sphere_ode,
    "flow": _flow,
    "ss-residual": _ss_residual,
}


def dispatch(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    meta = report.metadata(cfg.to_mapping(), cfg.seed)
    return PIPELINES[cfg.command](cfg, meta, out)


# --- argument parsing -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--f", help="speed function id: mean, sigma-k:<k>, norm-A, gauss-root")
    common.add_argument("--phi", help="Phi id: power-sum:c,k;c,k, log-power:<p>, shifted-entropy:<z0>, power:<a>")
    common.add_argument("--n", type=int, help="hypersurface dimension")
    common.add_argument("--eps", type=float, help="pinching ratio of the sampled cone")
    common.add_argument("--c", type=float, help="Phi growth constant entering Q")
    common.add_argument("--r", type=float, help="sphere radius")
    common.add_argument("--tol", type=float, help="ODE relative tolerance or bisection tolerance")
    common.add_argument("--m", type=int, help="grid points on [0, pi]")
    common.add_argument("--shape", help="sphere:<R> | spheroid:<a>,<b> | file:<path>")
    common.add_argument("--dt-safety", dest="dt_safety", type=float, help="fraction of the explicit step limit")
    common.add_argument("--samples", type=int, help="cone samples for check-f")
    common.add_argument("--zmin", type=float, help="lower end of the Phi scan")
    common.add_argument("--zmax", type=float, help="upper end of the Phi scan")
    common.add_argument("--points", type=int, help="epsilon grid size for pinch-threshold")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--config", help="key=value file; its entries override flags")

    parser = argparse.ArgumentParser(prog="curvflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def config_from_args(argv=None) -> RunConfig:
    ns = vars(build_parser().parse_args(argv))
    path = ns.pop("config", None)
    if path is not None:
        ns.update(read_config_file(path))
    return RunConfig.from_mapping(ns)


def main(argv=None) -> int:
    try:
        cfg = config_from_args(argv)
        return dispatch(cfg)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (CurvFlowError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
