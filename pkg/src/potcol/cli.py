"""Configuration-driven runs: train, sample, evaluate and comparison sweeps.

Config files are YAML (JSON also parses).  Unknown keys are errors so typos
cannot silently fall back to defaults; the effective configuration is echoed
into the output directory next to the artifacts it produced.

Exit codes: 0 success, 2 configuration error, 3 numerical failure (NaN),
4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import yaml

from . import bench, io
from .bench import CaseId, evaluate_case, parse_case
from .net import ActivationKind, NetworkSpec, init_params, parse_activation
from .optim import AdamConfig, LbfgsConfig, train
from .physics import attach_case_bcs
from .sampling import SamplerKind, parse_sampler, sample_domain


class ConfigError(ValueError):
    """Malformed or invalid run configuration."""


class NumericalError(RuntimeError):
    """Training produced a non-finite loss."""


@dataclass(frozen=True)
class RunConfig:
    """One experiment: geometry case, sampling, network, optimizers, output.

    Defaults reproduce the headline configuration: arctan activation, Latin
    hypercube points (3000 interior / 300 per face), two hidden layers of 30,
    1000 Adam steps then up to 2000 L-BFGS iterations, seed 0.
    """

    case: CaseId = CaseId.CASE1_EXPONENTIAL
    sampler: str = "latin_hypercube"
    korobov_generator: int = 17
    n_interior: int = 3000
    n_per_face: int = 300
    hidden_widths: tuple[int, ...] = (30, 30)
    activation: ActivationKind = ActivationKind("arctan")
    adam: AdamConfig = AdamConfig(max_iters=1000)
    lbfgs: LbfgsConfig = LbfgsConfig(max_iters=2000)
    eval_grid: int = 21
    seed: int = 0
    output_dir: str = "potcol_out"

    def __post_init__(self):
        for key in ("n_interior", "n_per_face"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be a positive count, got {getattr(self, key)}")
        if self.eval_grid < 2:
            raise ConfigError(f"eval_grid must be at least 2, got {self.eval_grid}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ConfigError(f"hidden_widths must be positive, got {self.hidden_widths}")

    def sampler_kind(self) -> SamplerKind:
        return parse_sampler(self.sampler, seed=self.seed, generator=self.korobov_generator)

    def network_spec(self) -> NetworkSpec:
        return NetworkSpec(self.hidden_widths, self.activation, seed=self.seed)

    def as_dict(self) -> dict:
        return {
            "case": self.case.value,
            "sampler": self.sampler,
            "korobov_generator": self.korobov_generator,
            "n_interior": self.n_interior,
            "n_per_face": self.n_per_face,
            "hidden_widths": list(self.hidden_widths),
            "activation": self.activation.name,
            "swish_beta": self.activation.beta,
            "adam": dataclasses.asdict(self.adam),
            "lbfgs": dataclasses.asdict(self.lbfgs),
            "eval_grid": self.eval_grid,
            "seed": self.seed,
            "output_dir": self.output_dir,
        }


def _expect(value, types, path: str):
    if isinstance(value, bool) or not isinstance(value, types):
        names = types.__name__ if isinstance(types, type) else "/".join(t.__name__ for t in types)
        raise ConfigError(f"{path}: expected {names}, got {value!r}")
    return value


def _sub_config(cls, data: dict, path: str, overrides: dict):
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = dict(overrides)
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"unknown key {path}.{key}")
        want = (int,) if known[key].type in ("int", int) else (int, float)
        kwargs[key] = _expect(value, want, f"{path}.{key}")
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def parse_config(text: str) -> RunConfig:
    """Parse a YAML/JSON document; unknown keys are rejected with their path."""
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not well-formed YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config must be a key-value document, got {type(data).__name__}")

    kwargs: dict = {}
    swish_beta = 1.0
    if "swish_beta" in data:
        swish_beta = float(_expect(data.pop("swish_beta"), (int, float), "swish_beta"))
    for key, value in data.items():
        if key == "case":
            try:
                kwargs["case"] = parse_case(_expect(value, str, "case"))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        elif key == "sampler":
            try:
                parse_sampler(_expect(value, str, "sampler"))
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
            kwargs["sampler"] = value
        elif key == "activation":
            try:
                kwargs["activation"] = parse_activation(_expect(value, str, "activation"),
                                                        beta=swish_beta)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        elif key == "hidden_widths":
            if not isinstance(value, list) or not value:
                raise ConfigError(f"hidden_widths: expected a non-empty list, got {value!r}")
            kwargs["hidden_widths"] = tuple(_expect(v, int, "hidden_widths[]") for v in value)
        elif key == "adam":
            kwargs["adam"] = _sub_config(AdamConfig, _expect(value, dict, "adam"), "adam",
                                         {"max_iters": 1000})
        elif key == "lbfgs":
            kwargs["lbfgs"] = _sub_config(LbfgsConfig, _expect(value, dict, "lbfgs"), "lbfgs",
                                          {"max_iters": 2000})
        elif key in ("n_interior", "n_per_face", "eval_grid", "seed", "korobov_generator"):
            kwargs[key] = _expect(value, int, key)
        elif key == "output_dir":
            kwargs[key] = _expect(value, str, key)
        else:
            raise ConfigError(f"unknown key {key}")
    return RunConfig(**kwargs)


def load_config(path: str, seed: Optional[int] = None,
                output_dir: Optional[str] = None) -> RunConfig:
    with open(path) as f:
        cfg = parse_config(f.read())
    if seed is not None:
        cfg = dataclasses.replace(cfg, seed=seed)
    if output_dir is not None:
        cfg = dataclasses.replace(cfg, output_dir=output_dir)
    return cfg


# ---------------------------------------------------------------------------
# execution
# ---------------------------------------------------------------------------


@dataclass
class RunSummary:
    config: dict
    loss: dict
    relative_error: float
    l2_relative: float
    max_abs_error: float
    iterations: dict
    lbfgs_converged: bool
    wall_clock_s: float
    files: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _build_problem(cfg: RunConfig):
    geom = bench.case_geometry(cfg.case)
    raw = sample_domain(cfg.sampler_kind(), geom, cfg.n_interior, cfg.n_per_face)
    cset = attach_case_bcs(cfg.case, raw)
    model = bench.case_material(cfg.case)
    params = init_params(cfg.network_spec())
    return model, cset, params


def _execute(cfg: RunConfig, quiet: bool = True):
    """Sample, train and evaluate one configuration (no filesystem output)."""
    start = time.perf_counter()
    model, cset, params = _build_problem(cfg)
    trained, history = train(params, model, cset, cfg.adam, cfg.lbfgs)
    if history.diverged or not history.entries:
        raise NumericalError("training aborted on a non-finite loss")
    metric, table = evaluate_case(cfg.case, trained, cfg.eval_grid)
    wall = time.perf_counter() - start
    if not quiet:
        fr = history.final_report
        print(f"[potcol] {cfg.case.value}: loss {fr.total:.3e} "
              f"(g {fr.mse_g:.2e}, d {fr.mse_d:.2e}, n {fr.mse_n:.2e}), "
              f"relative error {metric.relative_error:.3e}, {wall:.1f}s")
    return trained, history, metric, table, wall


class _OutputDir:
    """Exclusive ownership of an output directory for the duration of a run."""

    def __init__(self, path: str):
        self.path = path
        self.lock = os.path.join(path, ".potcol.lock")
        self.written: list[str] = []

    def __enter__(self):
        os.makedirs(self.path, exist_ok=True)
        try:
            fd = os.open(self.lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OSError(f"output directory {self.path!r} is locked by another run "
                          f"(remove {self.lock} if that run is dead)") from None
        os.close(fd)
        return self

    def file(self, name: str) -> str:
        path = os.path.join(self.path, name)
        self.written.append(path)
        return path

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            io.remove_files(self.written)   # no partial artifacts on failure
        try:
            os.unlink(self.lock)
        except FileNotFoundError:
            pass


def _write_config_echo(out: _OutputDir, cfg: RunConfig) -> None:
    with open(out.file("config.yaml"), "w") as f:
        yaml.safe_dump(cfg.as_dict(), f, sort_keys=False)


def run_train(cfg: RunConfig, quiet: bool = False) -> RunSummary:
    """Full pipeline; writes convergence.csv, fields.csv/vtk, params.txt,
    summary.json and the effective config into ``cfg.output_dir``."""
    with _OutputDir(cfg.output_dir) as out:
        _write_config_echo(out, cfg)
        trained, history, metric, table, wall = _execute(cfg, quiet=quiet)
        io.write_convergence_csv(out.file("convergence.csv"), history)
        io.write_fields_csv(out.file("fields.csv"), table)
        io.write_fields_vtk(out.file("fields.vtk"), table, title=f"potcol {cfg.case.value}")
        io.save_params(out.file("params.txt"), trained)
        fr = history.final_report
        summary = RunSummary(
            config=cfg.as_dict(),
            loss={"total": fr.total, "mse_g": fr.mse_g, "mse_d": fr.mse_d, "mse_n": fr.mse_n},
            relative_error=metric.relative_error,
            l2_relative=metric.l2_relative,
            max_abs_error=metric.max_abs,
            iterations=history.phase_counts(),
            lbfgs_converged=history.lbfgs_converged,
            wall_clock_s=wall,
            files=[os.path.basename(p) for p in out.written] + ["summary.json"],
        )
        with open(out.file("summary.json"), "w") as f:
            json.dump(summary.as_dict(), f, indent=2)
            f.write("\n")
    return summary


def run_sample(cfg: RunConfig, quiet: bool = False) -> str:
    """Write the case's attached collocation set as CSV; returns the path."""
    with _OutputDir(cfg.output_dir) as out:
        _write_config_echo(out, cfg)
        geom = bench.case_geometry(cfg.case)
        raw = sample_domain(cfg.sampler_kind(), geom, cfg.n_interior, cfg.n_per_face)
        cset = attach_case_bcs(cfg.case, raw)
        path = out.file("collocation.csv")
        io.write_collocation_csv(path, cset)
        if not quiet:
            n_i, n_d, n_n = cset.counts
            print(f"[potcol] wrote {path}: {n_i} interior, {n_d} dirichlet, {n_n} neumann")
    return path


def run_evaluate(cfg: RunConfig, snapshot_path: str, quiet: bool = False) -> RunSummary:
    """Evaluate a saved parameter snapshot on the case grid."""
    params = io.load_params(snapshot_path)
    with _OutputDir(cfg.output_dir) as out:
        _write_config_echo(out, cfg)
        start = time.perf_counter()
        metric, table = evaluate_case(cfg.case, params, cfg.eval_grid)
        io.write_fields_csv(out.file("fields.csv"), table)
        io.write_fields_vtk(out.file("fields.vtk"), table, title=f"potcol {cfg.case.value}")
        summary = RunSummary(
            config=cfg.as_dict(),
            loss={},
            relative_error=metric.relative_error,
            l2_relative=metric.l2_relative,
            max_abs_error=metric.max_abs,
            iterations={},
            lbfgs_converged=False,
            wall_clock_s=time.perf_counter() - start,
            files=[os.path.basename(p) for p in out.written] + ["summary.json"],
        )
        with open(out.file("summary.json"), "w") as f:
            json.dump(summary.as_dict(), f, indent=2)
            f.write("\n")
        if not quiet:
            print(f"[potcol] {cfg.case.value}: relative error {metric.relative_error:.3e}")
    return summary


MATRIX_AXES = ("activation", "sampler", "depth", "n_interior", "n_per_face",
               "optimizer-schedule")


def _matrix_variants(cfg: RunConfig, vary: str, values: Optional[Sequence] = None):
    from .net import ACTIVATION_NAMES
    from .sampling import SAMPLER_NAMES

    if vary == "activation":
        values = values or ACTIVATION_NAMES
        return [(str(v), dataclasses.replace(cfg, activation=parse_activation(str(v))))
                for v in values]
    if vary == "sampler":
        values = values or SAMPLER_NAMES
        return [(str(v), dataclasses.replace(cfg, sampler=str(v))) for v in values]
    if vary == "depth":
        values = values or (1, 2, 3, 4, 5, 6)
        width = cfg.hidden_widths[0]
        return [(f"{int(v)}x{width}",
                 dataclasses.replace(cfg, hidden_widths=(width,) * int(v)))
                for v in values]
    if vary == "n_interior":
        values = values or (500, 1000, 2000, 3000, 4000)
        return [(str(int(v)), dataclasses.replace(cfg, n_interior=int(v))) for v in values]
    if vary == "n_per_face":
        values = values or (50, 100, 200, 300, 400)
        return [(str(int(v)), dataclasses.replace(cfg, n_per_face=int(v))) for v in values]
    if vary == "optimizer-schedule":
        budget = cfg.adam.max_iters + cfg.lbfgs.max_iters
        values = values or ("adam", "lbfgs", "combined")
        variants = []
        for v in values:
            if v == "adam":
                variants.append((v, dataclasses.replace(
                    cfg, adam=dataclasses.replace(cfg.adam, max_iters=budget),
                    lbfgs=dataclasses.replace(cfg.lbfgs, max_iters=0))))
            elif v == "lbfgs":
                variants.append((v, dataclasses.replace(
                    cfg, adam=dataclasses.replace(cfg.adam, max_iters=0),
                    lbfgs=dataclasses.replace(cfg.lbfgs, max_iters=budget))))
            elif v == "combined":
                variants.append((v, cfg))
            else:
                raise ConfigError(f"unknown optimizer schedule {v!r}")
        return variants
    raise ConfigError(f"unknown comparison axis {vary!r}; expected one of {MATRIX_AXES}")


def run_matrix(cfg: RunConfig, vary: str, values: Optional[Sequence] = None,
               quiet: bool = False) -> list[dict]:
    """Train one variant per value of the chosen axis; write comparison.csv."""
    variants = _matrix_variants(cfg, vary, values)
    if not variants:
        raise ConfigError("comparison axis produced no variants")
    rows = []
    with _OutputDir(cfg.output_dir) as out:
        _write_config_echo(out, cfg)
        for label, vcfg in variants:
            _, history, metric, _, wall = _execute(vcfg, quiet=True)
            fr = history.final_report
            counts = history.phase_counts()
            rows.append({
                "variant": label, "total": fr.total, "mse_g": fr.mse_g,
                "mse_d": fr.mse_d, "mse_n": fr.mse_n,
                "relative_error": metric.relative_error,
                "adam_iters": counts["adam"], "lbfgs_iters": counts["lbfgs"],
                "wall_clock_s": wall,
            })
            if not quiet:
                print(f"[potcol] {vary}={label}: loss {fr.total:.3e}, "
                      f"e {metric.relative_error:.3e}, {wall:.1f}s")
        with open(out.file("comparison.csv"), "w", newline="\n") as f:
            f.write("variant,total,mse_g,mse_d,mse_n,relative_error,"
                    "adam_iters,lbfgs_iters,wall_clock_s\n")
            for r in rows:
                f.write(f"{r['variant']},{io.fmt(r['total'])},{io.fmt(r['mse_g'])},"
                        f"{io.fmt(r['mse_d'])},{io.fmt(r['mse_n'])},"
                        f"{io.fmt(r['relative_error'])},{r['adam_iters']},"
                        f"{r['lbfgs_iters']},{r['wall_clock_s']:.3f}\n")
    return rows


# ---------------------------------------------------------------------------
# command line front end
# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="potcol",
        description="Collocation solver for steady potential problems in graded media")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--output-dir", default=None, help="override the output directory")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    common(sub.add_parser("train", help="sample, train, evaluate and write artifacts"))
    common(sub.add_parser("sample", help="write the collocation point set as CSV"))
    p_eval = sub.add_parser("evaluate", help="evaluate a saved parameter snapshot")
    common(p_eval)
    p_eval.add_argument("snapshot", help="params.txt written by a train run")
    p_bench = sub.add_parser("bench", help="comparison sweep along one axis")
    common(p_bench)
    p_bench.add_argument("--vary", required=True, choices=MATRIX_AXES)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, output_dir=args.output_dir)
        if args.command == "train":
            run_train(cfg, quiet=args.quiet)
        elif args.command == "sample":
            run_sample(cfg, quiet=args.quiet)
        elif args.command == "evaluate":
            run_evaluate(cfg, args.snapshot, quiet=args.quiet)
        elif args.command == "bench":
            run_matrix(cfg, args.vary, quiet=args.quiet)
    except ConfigError as exc:
        print(f"potcol: config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"potcol: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"potcol: i/o error: {exc}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
