"""Command-line entry point.

Three subcommands: `validate` runs the oracle-equivalence and identity
suites, `experiment` dispatches one of the named Monte-Carlo experiments,
`sample` emits spin configurations.  Configuration comes from (lowest to
highest precedence) built-in defaults, a JSON --config file, ISINGTREE_*
environment variables, and explicit flags.

Exit codes: 0 pass, 1 runtime failure, 2 usage or configuration error,
3 a suite or experiment check failed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

from . import harness, reports
from .couplings import uniform
from .rng import RngStream
from .samplers import sample_broadcast, sample_conditional
from .topology import build_tree, label_to_str

ENV_PREFIX = "ISINGTREE_"

EXIT_PASS = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_CHECK_FAILED = 3

EXPERIMENTS = (
    "depth-decay",
    "root-decay",
    "reference-match",
    "h-consistency",
    "factor-map",
    "glauber",
)


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    """Validated run parameters; exactly one of beta / tanh_beta is set."""

    experiment: str | None = None
    d: int = 3
    depth: int = 2
    r_max: int = 4
    beta: float | None = None
    tanh_beta: float | None = None
    gamma: float | None = None
    t_end: float = 1.0
    dt: float = 1e-3
    delta_gamma: float = 1e-3
    replicas: int = 1000
    seed: int = 0
    threads: int = 0
    out: str = "."
    ks_inflation: float = 1.5
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.beta is not None and self.tanh_beta is not None:
            raise ConfigError("give exactly one of beta / tanh_beta")
        if self.beta is None and self.tanh_beta is None:
            self.tanh_beta = 0.2
        if self.tanh_beta is not None:
            if not 0.0 <= self.tanh_beta < 1.0:
                raise ConfigError(f"tanh_beta={self.tanh_beta} outside [0, 1)")
            self.beta = math.atanh(self.tanh_beta)
        else:
            if self.beta < 0:
                raise ConfigError(f"beta={self.beta} must be >= 0")
            self.tanh_beta = math.tanh(self.beta)
        if self.d < 2:
            raise ConfigError(f"d={self.d} must be >= 2")
        if self.depth < 0:
            raise ConfigError(f"depth={self.depth} must be >= 0")
        if self.r_max < 1:
            raise ConfigError(f"r_max={self.r_max} must be >= 1")
        if self.gamma is not None and not 0.0 <= self.gamma <= self.beta:
            raise ConfigError(f"gamma={self.gamma} outside [0, beta]")
        if self.dt <= 0:
            raise ConfigError(f"dt={self.dt} must be positive")
        if self.replicas < 1:
            raise ConfigError(f"replicas={self.replicas} must be >= 1")

    def as_dict(self) -> dict:
        return {
            "experiment": self.experiment, "d": self.d, "depth": self.depth,
            "r_max": self.r_max, "tanh_beta": self.tanh_beta,
            "gamma": self.gamma, "t_end": self.t_end, "dt": self.dt,
            "delta_gamma": self.delta_gamma, "replicas": self.replicas,
            "seed": self.seed, "out": self.out,
            "ks_inflation": self.ks_inflation,
        }


_FIELD_TYPES = {
    "d": int, "depth": int, "r_max": int, "beta": float, "tanh_beta": float,
    "gamma": float, "t_end": float, "dt": float, "delta_gamma": float,
    "replicas": int, "seed": int, "threads": int, "out": str,
    "ks_inflation": float,
}


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="isingtree",
        description="Tree-Ising inference, samplers, and drift-SDE experiments.",
        epilog=f"Any flag can also be set via {ENV_PREFIX}<NAME> environment "
               "variables, e.g. ISINGTREE_SEED=7.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--config", help="JSON config file")
        sp.add_argument("--d", type=int, dest="d")
        sp.add_argument("--depth", type=int, dest="depth")
        sp.add_argument("--r-max", type=int, dest="r_max")
        sp.add_argument("--beta", type=float, dest="beta")
        sp.add_argument("--tanh-beta", type=float, dest="tanh_beta")
        sp.add_argument("--gamma", type=float, dest="gamma")
        sp.add_argument("--t", type=float, dest="t_end")
        sp.add_argument("--dt", type=float, dest="dt")
        sp.add_argument("--delta-gamma", type=float, dest="delta_gamma")
        sp.add_argument("--replicas", type=int, dest="replicas")
        sp.add_argument("--seed", type=int, dest="seed")
        sp.add_argument("--threads", type=int, dest="threads",
                        help="worker hint; results are independent of it")
        sp.add_argument("--out", dest="out", help="output directory")
        sp.add_argument("--ks-inflation", type=float, dest="ks_inflation")

    sp = sub.add_parser("validate", help="run the oracle and identity suites")
    add_common(sp)
    sp = sub.add_parser("experiment", help="run a named experiment")
    sp.add_argument("name", choices=EXPERIMENTS)
    add_common(sp)
    sp = sub.add_parser("sample", help="emit spin configurations")
    sp.add_argument("kind", choices=("broadcast", "conditional"))
    add_common(sp)
    return p


def _load_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config file {args.config}: {e}")
    for name, cast in _FIELD_TYPES.items():
        env = os.environ.get(ENV_PREFIX + name.upper())
        if env is not None:
            try:
                values[name] = cast(env)
            except ValueError:
                raise ConfigError(f"bad value for {ENV_PREFIX}{name.upper()}: {env}")
    for name in _FIELD_TYPES:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    values = {k: v for k, v in values.items() if k in _FIELD_TYPES}
    if "beta" in values and "tanh_beta" in values:
        raise ConfigError("give exactly one of beta / tanh_beta")
    return ExperimentConfig(experiment=getattr(args, "name", None), **values)


def _print_report(report) -> None:
    d = report.as_dict()
    print(f"{d['name']}: {'PASS' if d['passed'] else 'FAIL'}")
    for c in d.get("checks", []):
        mark = "pass" if c["passed"] else "FAIL"
        rest = ", ".join(
            f"{k}={v}" for k, v in c.items() if k not in ("name", "passed")
        )
        print(f"  [{mark}] {c['name']}  {rest}")


def _ensure_outdir(path: str) -> None:
    try:
        os.makedirs(path, exist_ok=True)
        probe = os.path.join(path, ".write-probe")
        with open(probe, "w"):
            pass
        os.remove(probe)
    except OSError as e:
        raise ConfigError(f"output directory {path} is not writable: {e}")


def cmd_validate(cfg: ExperimentConfig) -> int:
    _ensure_outdir(cfg.out)
    manifest = reports.RunManifest(config=cfg.as_dict())
    r1 = harness.suite_inference_vs_oracle(seed=cfg.seed)
    r2 = harness.suite_identities(seed=cfg.seed + 1)
    _print_report(r1)
    _print_report(r2)
    body = {"suites": [r1.as_dict(), r2.as_dict()],
            "passed": r1.passed and r2.passed}
    path = os.path.join(cfg.out, "validate.json")
    reports.write_json(path, body)
    manifest.record(path)
    manifest.write(os.path.join(cfg.out, "validate.manifest.json"))
    return EXIT_PASS if body["passed"] else EXIT_CHECK_FAILED


def _run_experiment(cfg: ExperimentConfig):
    name = cfg.experiment
    if name == "depth-decay":
        return harness.experiment_depth_decay(
            d=cfg.d, tanh_beta=cfg.tanh_beta, t_end=cfg.t_end, dt=cfg.dt,
            r_max=cfg.r_max, replicas=cfg.replicas, seed=cfg.seed)
    if name == "root-decay":
        return harness.experiment_root_decay(
            d=cfg.d, tanh_beta=cfg.tanh_beta, t_end=cfg.t_end, dt=cfg.dt,
            r_max=cfg.r_max, replicas=cfg.replicas, seed=cfg.seed)
    if name == "reference-match":
        return harness.experiment_reference_match(
            d=cfg.d, depth=cfg.depth, tanh_beta=cfg.tanh_beta,
            t_end=cfg.t_end, dt=cfg.dt, replicas=cfg.replicas,
            seed=cfg.seed, ks_inflation=cfg.ks_inflation)
    if name == "h-consistency":
        return harness.experiment_h_consistency(
            d=cfg.d, depth=cfg.depth, tanh_beta=cfg.tanh_beta,
            gamma=cfg.gamma, t_end=cfg.t_end,
            delta_gamma=cfg.delta_gamma, seed=cfg.seed)
    if name == "factor-map":
        return harness.experiment_factor_map(
            d=cfg.d, tanh_beta=cfg.tanh_beta, depth=cfg.depth,
            replicas=cfg.replicas, seed=cfg.seed)
    if name == "glauber":
        return harness.experiment_glauber(
            d=cfg.d, depth=cfg.depth, tanh_beta=cfg.tanh_beta,
            t_end=cfg.t_end, replicas=cfg.replicas, seed=cfg.seed)
    raise ConfigError(f"unknown experiment {name!r}")


def cmd_experiment(cfg: ExperimentConfig) -> int:
    _ensure_outdir(cfg.out)
    manifest = reports.RunManifest(config=cfg.as_dict())
    report = _run_experiment(cfg)
    body = report.as_dict()
    if hasattr(report, "checks"):
        _print_report(report)
    else:
        print(f"{body['name']}: {'PASS' if body['passed'] else 'FAIL'} "
              f"ratio={body['ratio_point']:.4f} ucb95={body['ratio_ucb95']:.4f}")

    stem = os.path.join(cfg.out, cfg.experiment)
    json_path = stem + ".json"
    reports.write_json(json_path, body)
    manifest.record(json_path)
    csv_path = stem + ".csv"
    if "r_values" in body:
        reports.write_csv(
            csv_path, ["R", "estimate", "standard_error"],
            zip(body["r_values"], body["estimates"], body["standard_errors"]),
        )
    else:
        rows = [
            (c["name"], int(c["passed"]), c.get("value", ""), c.get("se", ""))
            for c in body["checks"]
        ]
        reports.write_csv(csv_path, ["check", "passed", "value", "se"], rows)
    manifest.record(csv_path)
    manifest.write(stem + ".manifest.json")
    return EXIT_PASS if body["passed"] else EXIT_CHECK_FAILED


def cmd_sample(cfg: ExperimentConfig, kind: str) -> int:
    topo = build_tree(cfg.d, cfg.depth)
    rng = RngStream(cfg.seed, "cli-sample")
    if kind == "broadcast":
        spins = sample_broadcast(topo, cfg.tanh_beta, rng, cfg.replicas)
    else:
        spins = sample_conditional(
            topo, uniform(cfg.beta), [0.0] * topo.n_vertices, rng, cfg.replicas
        )
    print("vertex_label,spin")
    for row in spins:
        for v, s in zip(topo.vertices, row):
            print(f"{label_to_str(v)},{int(s)}")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    try:
        cfg = _load_config(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "validate":
            return cmd_validate(cfg)
        if args.command == "experiment":
            return cmd_experiment(cfg)
        if args.command == "sample":
            return cmd_sample(cfg, args.kind)
        return EXIT_USAGE
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # runtime failure: report and signal exit 1
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
