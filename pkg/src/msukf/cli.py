"""Command-line front end: compare, sweep, simulate.

Experiments are described by a JSON config (schema documented in the
README). Validation is strict: unknown keys anywhere in the document
are errors, so typos fail loudly instead of silently running defaults.

Exit codes: 0 success, 2 unusable configuration or arguments, 3 the
configuration was valid but estimation failed at runtime.
"""

import argparse
import csv
import inspect
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional

import numpy as np

from . import harness, models, ukf
from .errors import EstimationError
from .scaling import ScalingSet

_FMT = "{:.17g}".format


class ConfigError(Exception):
    """The config document or command line cannot be used."""


# ---------------------------------------------------------------- schema

_MODEL_FACTORIES = {
    "sigmoid2d": models.sigmoid2d_model,
    "servo2d": models.servo2d_model,
    "linear": models.linear_model,
}

# Params that must be JSON integers (bool is an int subclass; reject it).
_INT_PARAMS = {"duration"}
_BOOL_PARAMS = {"x2_couples_to_x1"}


def _reject_unknown(doc, allowed, path):
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected an object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise ConfigError(f"{path}: unknown key(s) {', '.join(unknown)}")


def _get_int(doc, key, path, default=None, minimum=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{path}.{key} is required")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}.{key}: expected an integer")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{path}.{key}: must be >= {minimum}")
    return value


def _get_number(doc, key, path, default=None):
    if key not in doc:
        if default is None:
            raise ConfigError(f"{path}.{key} is required")
        return default
    value = doc[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number")
    return float(value)


def _as_alpha(value, path):
    """A candidate alpha: positive number or non-empty list of them."""
    def one(v, where):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"{where}: alpha values must be positive numbers")
        return float(v)

    if isinstance(value, list):
        if not value:
            raise ConfigError(f"{path}: alpha list must not be empty")
        return tuple(one(v, path) for v in value)
    return one(value, path)


def _as_kappa(value, path):
    if isinstance(value, list):
        out = []
        for v in value:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}: kappa values must be numbers")
            out.append(float(v))
        return tuple(out)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: kappa must be a number or list of numbers")
    return float(value)


@dataclass(frozen=True)
class CandidateSpec:
    """One scaling candidate as written in the config."""

    alpha: object  # float for a shared value, tuple for per-state
    kappa: object = 0.0
    beta: float = 2.0
    label: Optional[str] = None

    @classmethod
    def from_dict(cls, doc, path):
        _reject_unknown(doc, ("alpha", "kappa", "beta", "label"), path)
        if "alpha" not in doc:
            raise ConfigError(f"{path}.alpha is required")
        label = doc.get("label")
        if label is not None and not isinstance(label, str):
            raise ConfigError(f"{path}.label: expected a string")
        return cls(
            alpha=_as_alpha(doc["alpha"], path),
            kappa=_as_kappa(doc.get("kappa", 0.0), path),
            beta=_get_number(doc, "beta", path, default=2.0),
            label=label,
        )

    def to_dict(self):
        doc = {"alpha": list(self.alpha) if isinstance(self.alpha, tuple) else self.alpha}
        doc["kappa"] = list(self.kappa) if isinstance(self.kappa, tuple) else self.kappa
        doc["beta"] = self.beta
        if self.label is not None:
            doc["label"] = self.label
        return doc

    def build(self, n):
        alpha = np.full(n, self.alpha) if isinstance(self.alpha, float) else np.asarray(self.alpha)
        kappa = np.full(n, self.kappa) if isinstance(self.kappa, float) else np.asarray(self.kappa)
        if alpha.shape != (n,):
            raise ConfigError(f"candidate alpha has {alpha.size} entries for an n={n} model")
        if kappa.shape != (n,):
            raise ConfigError(f"candidate kappa has {kappa.size} entries for an n={n} model")
        return ScalingSet(alpha, kappa, self.beta)

    def resolved_label(self, index):
        if self.label is not None:
            return self.label
        alpha = self.alpha if isinstance(self.alpha, tuple) else (self.alpha,)
        return f"candidate{index}_alpha_" + "_".join(f"{a:g}" for a in alpha)


@dataclass(frozen=True)
class GridSpec:
    """One sweep axis: either start/stop/step or an explicit value list."""

    start: Optional[float] = None
    stop: Optional[float] = None
    step: Optional[float] = None
    values: Optional[tuple] = None

    @classmethod
    def from_dict(cls, doc, path):
        _reject_unknown(doc, ("start", "stop", "step", "values"), path)
        if "values" in doc:
            if set(doc) != {"values"}:
                raise ConfigError(f"{path}: give either values or start/stop/step, not both")
            raw = doc["values"]
            if not isinstance(raw, list) or not raw:
                raise ConfigError(f"{path}.values: expected a non-empty list")
            return cls(values=tuple(_as_alpha(v, f"{path}.values") for v in raw))
        start = _get_number(doc, "start", path)
        stop = _get_number(doc, "stop", path)
        step = _get_number(doc, "step", path)
        if step <= 0:
            raise ConfigError(f"{path}.step: must be positive")
        if stop < start:
            raise ConfigError(f"{path}: stop must be >= start")
        if start <= 0:
            raise ConfigError(f"{path}.start: alpha grids must be positive")
        return cls(start=start, stop=stop, step=step)

    def to_dict(self):
        if self.values is not None:
            return {"values": list(self.values)}
        return {"start": self.start, "stop": self.stop, "step": self.step}

    def expand(self):
        if self.values is not None:
            return list(self.values)
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [self.start + i * self.step for i in range(count)]


@dataclass(frozen=True)
class SweepSpec:
    alpha1: GridSpec
    alpha2: Optional[GridSpec] = None
    kappa: float = 0.0
    beta: float = 2.0

    @classmethod
    def from_dict(cls, doc, path):
        _reject_unknown(doc, ("alpha1", "alpha2", "kappa", "beta"), path)
        if "alpha1" not in doc:
            raise ConfigError(f"{path}.alpha1 is required")
        alpha2 = doc.get("alpha2")
        return cls(
            alpha1=GridSpec.from_dict(doc["alpha1"], f"{path}.alpha1"),
            alpha2=None if alpha2 is None else GridSpec.from_dict(alpha2, f"{path}.alpha2"),
            kappa=_get_number(doc, "kappa", path, default=0.0),
            beta=_get_number(doc, "beta", path, default=2.0),
        )

    def to_dict(self):
        doc = {"alpha1": self.alpha1.to_dict()}
        if self.alpha2 is not None:
            doc["alpha2"] = self.alpha2.to_dict()
        doc["kappa"] = self.kappa
        doc["beta"] = self.beta
        return doc


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; plain data, no numpy."""

    model_name: str
    model_params: dict = field(default_factory=dict)
    runs: int = 100
    base_seed: int = 0
    transient_discard: int = 0
    jitter_relative: float = 1e-9
    candidates: tuple = ()
    sweep: Optional[SweepSpec] = None
    criterion: str = "tstd_mean"
    output_dir: str = "."
    export_errors: bool = False

    @classmethod
    def from_dict(cls, doc):
        _reject_unknown(
            doc,
            ("model", "mc", "scaling", "sweep", "criterion", "output_dir",
             "export_errors"),
            "config",
        )
        if "model" not in doc:
            raise ConfigError("config.model is required")
        model_doc = doc["model"]
        _reject_unknown(model_doc, ("name", "params"), "config.model")
        name = model_doc.get("name")
        if name not in _MODEL_FACTORIES:
            raise ConfigError(
                f"config.model.name: expected one of {sorted(_MODEL_FACTORIES)}, got {name!r}"
            )
        params = model_doc.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("config.model.params: expected an object")
        cls._check_model_params(name, params)

        mc_doc = doc.get("mc", {})
        _reject_unknown(mc_doc, ("runs", "base_seed", "transient_discard",
                                 "jitter_relative"), "config.mc")
        runs = _get_int(mc_doc, "runs", "config.mc", default=100, minimum=1)
        base_seed = _get_int(mc_doc, "base_seed", "config.mc", default=0, minimum=0)
        discard = _get_int(mc_doc, "transient_discard", "config.mc", default=0, minimum=0)
        jitter = _get_number(mc_doc, "jitter_relative", "config.mc", default=1e-9)

        scaling_doc = doc.get("scaling")
        candidates = ()
        if scaling_doc is not None:
            _reject_unknown(scaling_doc, ("candidates",), "config.scaling")
            raw = scaling_doc.get("candidates")
            if not isinstance(raw, list) or not raw:
                raise ConfigError("config.scaling.candidates: expected a non-empty list")
            candidates = tuple(
                CandidateSpec.from_dict(c, f"config.scaling.candidates[{i}]")
                for i, c in enumerate(raw)
            )

        sweep = None
        if doc.get("sweep") is not None:
            sweep = SweepSpec.from_dict(doc["sweep"], "config.sweep")

        criterion = doc.get("criterion", "tstd_mean")
        if criterion not in harness.CRITERIA:
            raise ConfigError(
                f"config.criterion: expected one of {list(harness.CRITERIA)}, got {criterion!r}"
            )
        output_dir = doc.get("output_dir", ".")
        if not isinstance(output_dir, str):
            raise ConfigError("config.output_dir: expected a string")
        export_errors = doc.get("export_errors", False)
        if not isinstance(export_errors, bool):
            raise ConfigError("config.export_errors: expected a boolean")

        return cls(
            model_name=name,
            model_params=dict(params),
            runs=runs,
            base_seed=base_seed,
            transient_discard=discard,
            jitter_relative=jitter,
            candidates=candidates,
            sweep=sweep,
            criterion=criterion,
            output_dir=output_dir,
            export_errors=export_errors,
        )

    @staticmethod
    def _check_model_params(name, params):
        allowed = set(inspect.signature(_MODEL_FACTORIES[name]).parameters)
        unknown = sorted(set(params) - allowed)
        if unknown:
            raise ConfigError(
                f"config.model.params: unknown key(s) {', '.join(unknown)} for model {name!r}"
            )
        for key in _INT_PARAMS & set(params):
            if isinstance(params[key], bool) or not isinstance(params[key], int):
                raise ConfigError(f"config.model.params.{key}: expected an integer")
        for key in _BOOL_PARAMS & set(params):
            if not isinstance(params[key], bool):
                raise ConfigError(f"config.model.params.{key}: expected a boolean")

    def to_dict(self):
        doc = {
            "model": {"name": self.model_name, "params": dict(self.model_params)},
            "mc": {
                "runs": self.runs,
                "base_seed": self.base_seed,
                "transient_discard": self.transient_discard,
                "jitter_relative": self.jitter_relative,
            },
            "criterion": self.criterion,
            "output_dir": self.output_dir,
            "export_errors": self.export_errors,
        }
        if self.candidates:
            doc["scaling"] = {"candidates": [c.to_dict() for c in self.candidates]}
        if self.sweep is not None:
            doc["sweep"] = self.sweep.to_dict()
        return doc

    def build_model(self):
        try:
            return _MODEL_FACTORIES[self.model_name](**self.model_params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config.model.params: {exc}") from exc


def load_config(path_or_name):
    """Load a config file from disk, falling back to the bundled set."""
    candidates = [path_or_name]
    if not str(path_or_name).endswith(".json"):
        candidates.append(str(path_or_name) + ".json")
    text = None
    for cand in candidates:
        if os.path.exists(cand):
            try:
                with open(cand, "r", encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config {cand}: {exc}") from exc
            break
    if text is None:
        for cand in candidates:
            resource = resources.files("msukf").joinpath("configs", os.path.basename(cand))
            if resource.is_file():
                text = resource.read_text(encoding="utf-8")
                break
    if text is None:
        raise ConfigError(
            f"config {path_or_name!r} not found on disk or among bundled configs"
        )
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path_or_name!r} is not valid JSON: {exc}") from exc
    return ExperimentConfig.from_dict(doc)


def _apply_seed_override(config):
    raw = os.environ.get("MSUKF_SEED")
    if raw is None:
        return config
    try:
        seed = int(raw)
    except ValueError as exc:
        raise ConfigError(f"MSUKF_SEED must be an integer, got {raw!r}") from exc
    if seed < 0:
        raise ConfigError("MSUKF_SEED must be non-negative")
    return replace(config, base_seed=seed)


# ---------------------------------------------------------------- commands

def _safe_slug(label):
    slug = re.sub(r"[^A-Za-z0-9._-]+", "-", label).strip("-")
    return slug or "candidate"


def _print_summary(labels, candidates, reports, improvements):
    print(f"{'label':<28} {'alpha':<18} {'tstd_mean':>10} {'tstd_final':>10} "
          f"{'trmse':>10} {'improve%':>9} {'failed':>6}")
    for label, cand, report, imp in zip(labels, candidates, reports, improvements):
        alpha = ",".join(f"{a:g}" for a in cand.alpha)
        imp_txt = "-" if imp is None else f"{imp:.1f}"
        print(f"{label:<28} {alpha:<18} {report.tstd_mean:>10.4f} "
              f"{report.tstd_final:>10.4f} {report.trmse:>10.4f} {imp_txt:>9} "
              f"{report.failed_runs:>6}")


def cmd_compare(config, out_dir=None, workers=1):
    """Benchmark the configured candidates on common trajectories."""
    config = _apply_seed_override(config)
    if not config.candidates:
        raise ConfigError("compare needs config.scaling.candidates")
    model = config.build_model()
    try:
        scalings = [c.build(model.n) for c in config.candidates]
    except EstimationError as exc:
        raise ConfigError(f"config.scaling: {exc}") from exc
    labels = [c.resolved_label(i) for i, c in enumerate(config.candidates)]
    result = harness.compare(
        model,
        scalings,
        runs=config.runs,
        base_seed=config.base_seed,
        transient_discard=config.transient_discard,
        criterion=config.criterion,
        jitter_relative=config.jitter_relative,
        workers=workers,
    )
    target = out_dir or config.output_dir
    os.makedirs(target, exist_ok=True)
    harness.write_summary_csv(
        os.path.join(target, "summary.csv"),
        result.candidates,
        result.reports,
        result.improvements,
        labels,
    )
    harness.write_tstd_csv(os.path.join(target, "tstd_per_step.csv"),
                           result.reports, labels)
    if config.export_errors:
        for label, scaling in zip(labels, scalings):
            errors, ok = harness.per_run_errors(
                harness.MCConfig(
                    model=model,
                    scaling=scaling,
                    runs=config.runs,
                    base_seed=config.base_seed,
                    transient_discard=config.transient_discard,
                    jitter_relative=config.jitter_relative,
                )
            )
            harness.write_errors_csv(
                os.path.join(target, f"errors_{_safe_slug(label)}.csv"), errors, ok
            )
    _print_summary(labels, result.candidates, result.reports, result.improvements)
    return 0


def cmd_sweep(config, out_dir=None, workers=1):
    """Grid-search alpha for the configured model."""
    config = _apply_seed_override(config)
    if config.sweep is None:
        raise ConfigError("sweep needs a config.sweep section")
    model = config.build_model()
    spec = config.sweep
    common = dict(
        runs=config.runs,
        base_seed=config.base_seed,
        kappa=spec.kappa,
        beta=spec.beta,
        transient_discard=config.transient_discard,
        criterion=config.criterion,
        jitter_relative=config.jitter_relative,
        workers=workers,
    )
    if spec.alpha2 is None:
        result = harness.sweep_1d(model, spec.alpha1.expand(), **common)
    else:
        result = harness.sweep_2d(model, spec.alpha1.expand(), spec.alpha2.expand(),
                                  **common)
    target = out_dir or config.output_dir
    os.makedirs(target, exist_ok=True)
    harness.write_surface_csv(os.path.join(target, "sweep_surface.csv"), result)
    best = result.best
    best_doc = {
        "alpha": [float(a) for a in best.alpha],
        "kappa": [float(k) for k in best.kappa],
        "beta": float(best.beta),
        "criterion": result.criterion,
        "value": float(result.best_value),
    }
    with open(os.path.join(target, "best.json"), "w", encoding="utf-8") as fh:
        json.dump(best_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    alphas = ",".join(f"{a:g}" for a in best.alpha)
    print(f"best alpha: {alphas} ({result.criterion}={result.best_value:.6g} "
          f"over {len(result.candidates)} candidates)")
    return 0


def cmd_simulate(config, out_dir=None, workers=1):
    """Simulate one run and filter it with the first candidate."""
    del workers  # single trajectory; accepted for interface symmetry
    config = _apply_seed_override(config)
    if not config.candidates:
        raise ConfigError("simulate needs config.scaling.candidates (the first is filtered)")
    model = config.build_model()
    try:
        scaling = config.candidates[0].build(model.n)
    except EstimationError as exc:
        raise ConfigError(f"config.scaling: {exc}") from exc
    trajectory = models.simulate(model, config.base_seed)
    records = ukf.run_filter(
        ukf.FilterConfig(model=model, scaling=scaling,
                         jitter_relative=config.jitter_relative),
        trajectory.measurements,
    )
    target = out_dir or config.output_dir
    os.makedirs(target, exist_ok=True)
    models.write_trajectory_csv(os.path.join(target, "trajectory.csv"), model, trajectory)
    _write_estimates_csv(os.path.join(target, "estimates.csv"), model, trajectory, records)
    print(f"simulated {model.duration} steps with seed {config.base_seed}")
    return 0


def _write_estimates_csv(path, model, trajectory, records):
    """Rows (step, truth, measurement, posterior mean, posterior std)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["step"]
        header += [f"true_x{i + 1}" for i in range(model.n)]
        header += [f"z{j + 1}" for j in range(model.m)]
        header += [f"est_x{i + 1}" for i in range(model.n)]
        header += [f"std_x{i + 1}" for i in range(model.n)]
        writer.writerow(header)
        for k, record in enumerate(records):
            post = record.posterior
            std = np.sqrt(np.clip(np.diag(post.cov), 0.0, None))
            row = [k + 1]
            row += [_FMT(v) for v in trajectory.true_states[k + 1]]
            row += [_FMT(v) for v in trajectory.measurements[k]]
            row += [_FMT(v) for v in post.mean]
            row += [_FMT(v) for v in std]
            writer.writerow(row)


# ---------------------------------------------------------------- entry

_COMMANDS = {"compare": cmd_compare, "sweep": cmd_sweep, "simulate": cmd_simulate}


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="msukf",
        description="Sigma-point filtering benchmarks with per-state scaling",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, func in _COMMANDS.items():
        p = sub.add_parser(name, help=func.__doc__)
        p.add_argument("--config", required=True,
                       help="path to a JSON config, or the name of a bundled one")
        p.add_argument("--out", default=None,
                       help="output directory (overrides the config's output_dir)")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker process count (default: available processors)")
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        config = load_config(args.config)
        return _COMMANDS[args.command](config, out_dir=args.out, workers=args.workers)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EstimationError as exc:
        print(f"estimation failed: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
