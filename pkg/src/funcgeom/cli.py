"""Command-line entry point.

Exit codes: 0 when every check passes, 1 on a tolerance failure, 2 on a
configuration error.  Errors are also written to stderr as one line of
JSON.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

from . import experiments as ex
from .gridspace import gaussian_kernel, make_grid

SCENARIOS = {
    "spectrometer": "plane waves through a magnetic spectrometer: screen deltas, metric pair, eigenproblem, flow rescaling",
    "two-slit": "piecewise geodesic path with a refraction kink, plus functional versus spatial distance of two deltas",
    "pauli": "free packet times Pauli spinor: product geodesic residuals and the chamber exit state",
    "curvature": "Killing metric of SU(2) and its sectional curvature with the 1/8 rescaling",
    "geodesic-check": "flows of random Hermitian operators as geodesics of K = (A A*)^-1",
    "embed-metric": "Riemannian metric induced on deltas by a Gaussian kernel and delta-path speeds",
    "delta-scan": "kernel norm of a stretched profile approaching its L2 norm",
    "eigen-covariance": "dual-space eigenproblems and operator equations under the DFT",
    "invariants": "property suite over all modules",
}

PARAM_KEYS = {
    "spectrometer": {"p0", "p1", "field_scale"},
    "two-slit": {"tau1", "tau_end", "steps", "separation", "width", "a", "b", "distance_a", "distance_b"},
    "pauli": {"mu_b0", "theta", "steps"},
    "curvature": set(),
    "geodesic-check": {"trials", "steps", "dtau"},
    "embed-metric": {"points"},
    "delta-scan": {"L"},
    "eigen-covariance": {"mass"},
    "invariants": set(),
}

TOP_KEYS = {"scenario", "grid", "kernel", "tolerances", "output_dir", "seed", "params"}
GRID_KEYS = {"dim", "n", "extent", "periodic"}
KERNEL_KEYS = {"family", "alpha"}
DEFAULT_OUT = "funcgeom_output"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    scenario: str | None = None
    grid: dict = field(default_factory=dict)
    kernel: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    output_dir: str | None = None
    seed: int = 0
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(d) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(
            scenario=d.get("scenario"),
            grid=dict(d.get("grid") or {}),
            kernel=dict(d.get("kernel") or {}),
            tolerances=dict(d.get("tolerances") or {}),
            output_dir=d.get("output_dir"),
            seed=d.get("seed", 0),
            params=dict(d.get("params") or {}),
        )
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.scenario is not None and self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}")
        bad = set(self.grid) - GRID_KEYS
        if bad:
            raise ConfigError(f"unknown grid keys: {sorted(bad)}")
        bad = set(self.kernel) - KERNEL_KEYS
        if bad:
            raise ConfigError(f"unknown kernel keys: {sorted(bad)}")
        if self.kernel.get("family", "gaussian") != "gaussian":
            raise ConfigError("only the gaussian kernel family is supported")
        if "alpha" in self.kernel and not _positive(self.kernel["alpha"]):
            raise ConfigError("kernel alpha must be positive")
        if "n" in self.grid and (not isinstance(self.grid["n"], int) or self.grid["n"] < 4):
            raise ConfigError("grid n must be an integer >= 4")
        if "extent" in self.grid and not _positive(self.grid["extent"]):
            raise ConfigError("grid extent must be positive")
        if self.grid.get("dim", 1) != 1:
            raise ConfigError("scenarios run on one-dimensional grids")
        if self.grid.get("periodic", True) is not True:
            raise ConfigError("scenarios need periodic grids")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed must be a nonnegative integer")
        for k, v in self.tolerances.items():
            if k not in ex.DEFAULT_TOLERANCES:
                raise ConfigError(f"unknown tolerance key {k!r}")
            if not _positive(v):
                raise ConfigError(f"tolerance {k!r} must be positive")
        if self.scenario is not None:
            bad = set(self.params) - PARAM_KEYS[self.scenario]
            if bad:
                raise ConfigError(f"unknown params for {self.scenario}: {sorted(bad)}")


def _positive(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v) and v > 0


def _run(cfg: RunConfig) -> list[ex.ScenarioReport]:
    s, g, p, tol, seed = cfg.scenario, cfg.grid, cfg.params, cfg.tolerances, cfg.seed
    if s == "spectrometer":
        return [ex.run_spectrometer(n=g.get("n", 128), extent=g.get("extent", 16 * math.pi),
                                    p0=p.get("p0", 2.0), p1=p.get("p1", -3.0),
                                    field_scale=p.get("field_scale", 1.0), tolerances=tol)]
    if s == "two-slit":
        from .dynamics import hamiltonian

        h = hamiltonian(make_grid(1, g.get("n", 128), g.get("extent", 64.0), True))
        amp = p.get("a", 1 / math.sqrt(2))
        two = ex.run_two_slit(h, a=amp, b=p.get("b", math.sqrt(max(0.0, 1 - amp * amp))),
                              tau1=p.get("tau1", 1.0), tau_end=p.get("tau_end", 2.0),
                              steps=p.get("steps", 100), separation=p.get("separation", 20.0),
                              width=p.get("width", 1.0), tolerances=tol)
        K = gaussian_kernel(make_grid(1, 64, 64.0, True), cfg.kernel.get("alpha", 0.5))
        dist = ex.run_distance_contrast(K, p.get("distance_a", -10.0), p.get("distance_b", 10.0),
                                        tolerances=tol)
        return [two, dist]
    if s == "pauli":
        return [ex.run_pauli_chamber(mu_b0=p.get("mu_b0", 1.0), theta=p.get("theta", 0.0),
                                     n=g.get("n", 64), extent=g.get("extent", 32.0),
                                     steps=p.get("steps", 400), tolerances=tol)]
    if s == "curvature":
        return [ex.run_curvature(tolerances=tol)]
    if s == "geodesic-check":
        return [ex.run_geodesic_check(n=g.get("n", 32), trials=p.get("trials", 5),
                                      steps=p.get("steps", 200), dtau=p.get("dtau", 1e-3),
                                      seed=seed, tolerances=tol)]
    if s == "embed-metric":
        return [ex.run_embed_metric(points=p.get("points", 10), seed=seed,
                                    alpha=cfg.kernel.get("alpha", 0.5), tolerances=tol)]
    if s == "delta-scan":
        return [ex.run_delta_scan(tuple(p.get("L", (1, 3, 10, 30, 100))), tolerances=tol)]
    if s == "eigen-covariance":
        return [ex.run_eigen_covariance(n=g.get("n", 128), extent=g.get("extent", 64.0),
                                        mass=p.get("mass", 1.0), seed=seed, tolerances=tol)]
    if s == "invariants":
        from .suite import run_invariants

        return [run_invariants(seed=seed, tolerances=tol)]
    raise ConfigError(f"unknown scenario {s!r}")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory for the JSON report and CSV tables")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--tolerance", action="append", default=[], metavar="KEY=VAL",
                        help="override one tolerance (repeatable)")
    common.add_argument("--n", type=int, help="points per axis")
    parser = argparse.ArgumentParser(prog="funcgeom", description=__doc__.splitlines()[0])
    parser.add_argument("--list", action="store_true", help="list scenarios and exit")
    sub = parser.add_subparsers(dest="command")
    for name, desc in SCENARIOS.items():
        sp = sub.add_parser(name, parents=[common], help=desc, description=desc)
        sp.add_argument("--list", action="store_true", help="list scenarios and exit")
    return parser


def _fail(kind: str, message: str, code: int, **extra) -> int:
    payload = {"error": kind, "message": message, "exit_code": code}
    payload.update(extra)
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def _build_config(args) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = RunConfig.from_dict(data)
    if cfg.scenario is not None and cfg.scenario != args.command:
        raise ConfigError(f"config is for {cfg.scenario!r}, not {args.command!r}")
    cfg.scenario = args.command
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n is not None:
        cfg.grid["n"] = args.n
    for item in args.tolerance:
        key, sep, val = item.partition("=")
        if not sep:
            raise ConfigError(f"--tolerance expects KEY=VAL, got {item!r}")
        try:
            cfg.tolerances[key] = float(val)
        except ValueError as exc:
            raise ConfigError(f"tolerance {key!r} is not a number") from exc
    if args.out:
        cfg.output_dir = args.out
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return 0
        return _fail("config", "invalid command line", 2)
    if args.list:
        for name, desc in SCENARIOS.items():
            print(f"{name:18s} {desc}")
        return 0
    if args.command is None:
        parser.print_usage(sys.stderr)
        return _fail("config", "no scenario given", 2)
    try:
        cfg = _build_config(args)
        reports = _run(cfg)
    except ConfigError as exc:
        return _fail("config", str(exc), 2)
    except (ValueError, KeyError) as exc:
        return _fail("config", str(exc), 2)

    out = cfg.output_dir or DEFAULT_OUT
    for rep in reports:
        rep.write(out)
        for c in rep.checks:
            flag = "PASS" if c.passed else "FAIL"
            rel = "<=" if c.kind == "max" else ">="
            print(f"{flag} {c.name} = {c.value:.6g} ({rel} {c.tolerance:g})")
        if rep.scenario == "curvature":
            print(f"sectional curvature {rep.params['sectional_curvature']:.1f}")
            print(f"radius {rep.params['radius']:.0f} (Planck units)")
    failed = [c.to_dict() for r in reports for c in r.failures()]
    if failed:
        return _fail("tolerance", f"{len(failed)} check(s) failed", 1, failed=failed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
