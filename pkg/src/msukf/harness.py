"""Monte-Carlo benchmark harness: repeated runs, metrics, sweeps.

Runs are independent, so the engine advances all of them at once with
stacked arrays (one leading run axis); every operation is rowwise, so
each run's numbers are bit-identical whether it executes alone or in a
batch, and adding runs never perturbs earlier ones. A test pins this
engine against the reference single-run filter in `ukf`.

Candidate comparisons use common random numbers: one trajectory set is
simulated per (model, base_seed, runs) and every candidate is scored
against it.
"""

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import AllRunsFailed
from .models import ModelSpec, simulate
from .scaling import ScalingSet, scale_factors, weights

# More than this fraction of failed runs marks a candidate unstable;
# unstable candidates are reported but never ranked best.
UNSTABLE_FAILURE_FRACTION = 0.05

CRITERIA = ("tstd_mean", "tstd_final", "trmse")


@dataclass(frozen=True)
class MCConfig:
    """One candidate's Monte-Carlo evaluation setup.

    Run j simulates with seed base_seed + j. transient_discard drops
    that many leading steps from all metrics (never from the filter).
    """

    model: ModelSpec
    scaling: ScalingSet
    runs: int
    base_seed: int
    transient_discard: int = 0
    jitter_relative: float = 1e-9

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if not 0 <= self.transient_discard < self.model.duration:
            raise ValueError("transient_discard must lie in [0, duration)")


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate error metrics over the successful runs of a candidate.

    rmse_per_state[l] is the root mean square of state l's error over
    all runs and retained steps; trmse is the Euclidean norm of that
    vector. tstd_per_step[k] is the total standard deviation across
    runs at retained step k (errors centered per state and step, summed
    over states before the root); tstd_mean and tstd_final condense it.
    """

    rmse_per_state: np.ndarray
    trmse: float
    tstd_per_step: np.ndarray
    tstd_mean: float
    tstd_final: float
    failed_runs: int
    runs_used: int
    transient_discard: int
    unstable: bool


def metrics_from_errors(errors, transient_discard=0, failed_runs=0):
    """Reduce per-run posterior-mean errors to a MetricsReport.

    errors has shape (runs, steps, n) and holds only successful runs.
    """
    errors = np.asarray(errors, dtype=float)
    runs, steps, _ = errors.shape
    if runs < 1:
        raise AllRunsFailed("no successful runs to reduce")
    if not 0 <= transient_discard < steps:
        raise ValueError("transient_discard must lie in [0, steps)")
    kept = errors[:, transient_discard:, :]
    rmse = np.sqrt(np.mean(kept**2, axis=(0, 1)))
    centered = kept - kept.mean(axis=0, keepdims=True)
    tstd = np.sqrt(np.mean(np.sum(centered**2, axis=2), axis=0))
    total = runs + failed_runs
    return MetricsReport(
        rmse_per_state=rmse,
        trmse=float(np.sqrt(np.sum(rmse**2))),
        tstd_per_step=tstd,
        tstd_mean=float(tstd.mean()),
        tstd_final=float(tstd[-1]),
        failed_runs=failed_runs,
        runs_used=runs,
        transient_discard=transient_discard,
        unstable=failed_runs > UNSTABLE_FAILURE_FRACTION * total,
    )


def _batch_cholesky(mats):
    """Rowwise lower Cholesky of a (runs, n, n) stack.

    Returns (L, ok); rows that hit a non-positive pivot (or contain
    NaN) get ok=False and NaN entries instead of raising, so one bad
    run cannot abort its batch.
    """
    runs, n, _ = mats.shape
    factor = np.zeros_like(mats)
    ok = np.ones(runs, dtype=bool)
    for j in range(n):
        d = mats[:, j, j].copy()
        for k in range(j):
            d -= factor[:, j, k] ** 2
        ok &= d > 0.0
        dj = np.sqrt(np.where(d > 0.0, d, np.nan))
        factor[:, j, j] = dj
        for i in range(j + 1, n):
            s = mats[:, i, j].copy()
            for k in range(j):
                s -= factor[:, i, k] * factor[:, j, k]
            factor[:, i, j] = s / dj
    return factor, ok


def _batch_cho_solve(factor, rhs):
    """Rowwise solve of (L L^T) X = rhs with L lower; rhs (runs, z, c)."""
    _, z, _ = factor.shape
    y = np.empty_like(rhs)
    for i in range(z):
        acc = rhs[:, i, :].copy()
        for k in range(i):
            acc -= factor[:, i, k, np.newaxis] * y[:, k, :]
        y[:, i, :] = acc / factor[:, i, i, np.newaxis]
    x = np.empty_like(rhs)
    for i in range(z - 1, -1, -1):
        acc = y[:, i, :].copy()
        for k in range(i + 1, z):
            acc -= factor[:, k, i, np.newaxis] * x[:, k, :]
        x[:, i, :] = acc / factor[:, i, i, np.newaxis]
    return x


def _sym(mats):
    return 0.5 * (mats + np.swapaxes(mats, 1, 2))


def batch_filter_errors(model, scaling, trajectories, jitter_relative=1e-9):
    """Posterior-mean errors for many runs of one candidate.

    Mirrors the ukf module cycle step for step: one sigma-point set
    per cycle, the same propagated points feed the measurement update,
    additive Q and R, one trace-scaled jitter retry when a state
    covariance fails to factor. A run whose retry also fails, whose
    innovation covariance cannot be factored, or whose state leaves
    the finite range is marked failed and its later values are junk.

    Returns (errors, ok): errors has shape (runs, duration, n) with
    errors[j, k] = posterior_mean - truth at step k+1 of run j, and
    ok marks runs that completed. Rows are computed independently, so
    results per run do not depend on the batch composition.
    """
    runs = len(trajectories)
    n, steps = model.n, model.duration
    for t in trajectories:
        if t.measurements.shape[0] != steps:
            raise ValueError("trajectory length does not match model duration")
    truths = np.stack([t.true_states for t in trajectories])
    zs = np.stack([t.measurements for t in trajectories])
    wset = weights(scaling)
    w_mean, w_cov = wset.mean, wset.cov
    spread = np.sqrt(scale_factors(scaling))
    x = np.broadcast_to(np.asarray(model.x0_true, dtype=float), (runs, n)).copy()
    cov = np.broadcast_to(np.asarray(model.P0, dtype=float), (runs, n, n)).copy()
    alive = np.ones(runs, dtype=bool)
    errors = np.full((runs, steps, n), np.nan)
    eye = np.eye(n)
    with np.errstate(invalid="ignore", divide="ignore", over="ignore", under="ignore"):
        for k in range(steps):
            factor, ok = _batch_cholesky(cov)
            bad = alive & ~ok
            if bad.any():
                bump = jitter_relative * np.einsum("rii->r", cov[bad]) / n
                cov[bad] += bump[:, np.newaxis, np.newaxis] * eye
                factor_retry, ok_retry = _batch_cholesky(cov[bad])
                factor[bad] = factor_retry
                ok[bad] = ok_retry
            alive &= ok
            deltas = np.swapaxes(factor * spread[np.newaxis, np.newaxis, :], 1, 2)
            pts = np.empty((runs, 2 * n + 1, n))
            pts[:, 0] = x
            pts[:, 1 : n + 1] = x[:, np.newaxis, :] + deltas
            pts[:, n + 1 :] = x[:, np.newaxis, :] - deltas
            fx = np.asarray(model.f(pts, k), dtype=float)
            xp = w_mean @ fx
            dx = fx - xp[:, np.newaxis, :]
            pred_cov = _sym(np.swapaxes(w_cov[np.newaxis, :, np.newaxis] * dx, 1, 2) @ dx + model.Q)
            hz = np.asarray(model.h(fx), dtype=float)
            zhat = w_mean @ hz
            dz = hz - zhat[:, np.newaxis, :]
            wdz = w_cov[np.newaxis, :, np.newaxis] * dz
            s_cov = _sym(np.swapaxes(wdz, 1, 2) @ dz + model.R)
            cross = np.swapaxes(w_cov[np.newaxis, :, np.newaxis] * dx, 1, 2) @ dz
            s_factor, s_ok = _batch_cholesky(s_cov)
            alive &= s_ok
            gain = np.swapaxes(_batch_cho_solve(s_factor, np.swapaxes(cross, 1, 2)), 1, 2)
            innovation = zs[:, k, :] - zhat
            x = xp + (gain @ innovation[:, :, np.newaxis])[:, :, 0]
            cov = _sym(pred_cov - gain @ s_cov @ np.swapaxes(gain, 1, 2))
            alive &= np.all(np.isfinite(x), axis=1)
            errors[:, k, :] = x - truths[:, k + 1, :]
    return errors, alive


def simulate_runs(model, base_seed, runs):
    """Trajectories for seeds base_seed .. base_seed + runs - 1."""
    return [simulate(model, base_seed + j) for j in range(runs)]


def per_run_errors(config):
    """Errors and completion mask for every run of an MCConfig."""
    trajectories = simulate_runs(config.model, config.base_seed, config.runs)
    return batch_filter_errors(
        config.model, config.scaling, trajectories, config.jitter_relative
    )


def _evaluate(model, scaling, trajectories, transient_discard, jitter_relative):
    errors, ok = batch_filter_errors(model, scaling, trajectories, jitter_relative)
    if not ok.any():
        raise AllRunsFailed("every Monte-Carlo run failed for this candidate")
    return metrics_from_errors(
        errors[ok], transient_discard, failed_runs=int(np.count_nonzero(~ok))
    )


def _empty_report(total_runs, steps, transient_discard):
    kept = steps - transient_discard
    return MetricsReport(
        rmse_per_state=np.full(0, np.nan),
        trmse=math.nan,
        tstd_per_step=np.full(kept, np.nan),
        tstd_mean=math.nan,
        tstd_final=math.nan,
        failed_runs=total_runs,
        runs_used=0,
        transient_discard=transient_discard,
        unstable=True,
    )


def run_mc(config):
    """Evaluate one candidate: simulate, filter all runs, reduce.

    Raises AllRunsFailed when no run completes.
    """
    trajectories = simulate_runs(config.model, config.base_seed, config.runs)
    return _evaluate(
        config.model,
        config.scaling,
        trajectories,
        config.transient_discard,
        config.jitter_relative,
    )


# Worker-process plumbing: trajectories are shipped once per worker via
# the initializer, so a task is just one ScalingSet.
_WORKER_STATE = {}


def _init_worker(model, trajectories, transient_discard, jitter_relative):
    _WORKER_STATE["shared"] = (model, trajectories, transient_discard, jitter_relative)


def _worker_evaluate(scaling):
    model, trajectories, transient_discard, jitter_relative = _WORKER_STATE["shared"]
    try:
        return _evaluate(model, scaling, trajectories, transient_discard, jitter_relative)
    except AllRunsFailed:
        return _empty_report(len(trajectories), model.duration, transient_discard)


def _evaluate_candidates(model, candidates, trajectories, transient_discard,
                         jitter_relative, workers):
    """Score every candidate against one shared trajectory set.

    Candidates run on worker processes when workers > 1; results are
    collected in candidate order either way, so the output does not
    depend on scheduling. Candidates whose runs all fail come back as
    all-NaN unstable reports instead of raising.
    """
    if workers > 1 and len(candidates) > 1:
        with ProcessPoolExecutor(
            max_workers=workers,
            initializer=_init_worker,
            initargs=(model, trajectories, transient_discard, jitter_relative),
        ) as pool:
            chunk = max(1, len(candidates) // (4 * workers))
            return list(pool.map(_worker_evaluate, candidates, chunksize=chunk))
    _init_worker(model, trajectories, transient_discard, jitter_relative)
    return [_worker_evaluate(c) for c in candidates]


@dataclass(frozen=True)
class SweepResult:
    """Grid-search outcome: all candidates, their reports, the winner."""

    candidates: list
    reports: list
    best_index: int
    criterion: str

    @property
    def best(self):
        return self.candidates[self.best_index]

    @property
    def best_value(self):
        return getattr(self.reports[self.best_index], self.criterion)


@dataclass(frozen=True)
class ComparisonResult:
    """Fixed-candidate benchmark table.

    improvements[i] states how much of candidate i's criterion value
    candidate 0 removes, as a percentage: (v_i - v_0) / v_i * 100.
    Entry 0 is None.
    """

    candidates: list
    reports: list
    improvements: list
    criterion: str


def _check_criterion(criterion):
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}, got {criterion!r}")


def _select_best(candidates, reports, criterion):
    """Rank by criterion; ties go to the lexicographically smallest
    (alpha, kappa); unstable candidates only win if every candidate is
    unstable (in which case there is nothing to select)."""
    usable = [i for i, r in enumerate(reports) if not r.unstable]
    if not usable:
        raise AllRunsFailed("every sweep candidate was unstable")
    return min(
        usable,
        key=lambda i: (
            getattr(reports[i], criterion),
            tuple(candidates[i].alpha),
            tuple(candidates[i].kappa),
        ),
    )


def sweep_1d(model, alpha_grid, *, runs, base_seed, kappa=0.0, beta=2.0,
             transient_discard=0, criterion="tstd_mean", jitter_relative=1e-9,
             workers=1):
    """Grid search over one shared alpha applied to every state."""
    _check_criterion(criterion)
    alpha_grid = list(alpha_grid)
    if not alpha_grid:
        raise ValueError("alpha_grid must not be empty")
    candidates = [ScalingSet.uniform(a, kappa, beta, model.n) for a in alpha_grid]
    trajectories = simulate_runs(model, base_seed, runs)
    reports = _evaluate_candidates(
        model, candidates, trajectories, transient_discard, jitter_relative, workers
    )
    best = _select_best(candidates, reports, criterion)
    return SweepResult(candidates=candidates, reports=reports,
                       best_index=best, criterion=criterion)


def sweep_2d(model, alpha1_grid, alpha2_grid, *, runs, base_seed, kappa=0.0,
             beta=2.0, transient_discard=0, criterion="tstd_mean",
             jitter_relative=1e-9, workers=1):
    """Grid search over (alpha_1, alpha_2) for two-state models.

    The grid is the Cartesian product, enumerated with alpha2 fastest.
    """
    _check_criterion(criterion)
    if model.n != 2:
        raise ValueError("a 2-D alpha sweep needs a two-state model")
    alpha1_grid, alpha2_grid = list(alpha1_grid), list(alpha2_grid)
    if not alpha1_grid or not alpha2_grid:
        raise ValueError("alpha grids must not be empty")
    candidates = [
        ScalingSet(np.array([a1, a2]), np.full(2, float(kappa)), beta)
        for a1 in alpha1_grid
        for a2 in alpha2_grid
    ]
    trajectories = simulate_runs(model, base_seed, runs)
    reports = _evaluate_candidates(
        model, candidates, trajectories, transient_discard, jitter_relative, workers
    )
    best = _select_best(candidates, reports, criterion)
    return SweepResult(candidates=candidates, reports=reports,
                       best_index=best, criterion=criterion)


def compare(model, candidates, *, runs, base_seed, transient_discard=0,
            criterion="tstd_mean", jitter_relative=1e-9, workers=1):
    """Score fixed candidates on common trajectories.

    The improvement column reports, for each candidate after the first,
    the share of its criterion value that candidate 0 removes. Raises
    AllRunsFailed if any candidate loses every run, since that column
    would be meaningless.
    """
    _check_criterion(criterion)
    candidates = list(candidates)
    if not candidates:
        raise ValueError("candidates must not be empty")
    trajectories = simulate_runs(model, base_seed, runs)
    reports = _evaluate_candidates(
        model, candidates, trajectories, transient_discard, jitter_relative, workers
    )
    for report in reports:
        if report.runs_used == 0:
            raise AllRunsFailed("a compared candidate lost every run")
    base = getattr(reports[0], criterion)
    improvements = [None]
    for report in reports[1:]:
        value = getattr(report, criterion)
        improvements.append((value - base) / value * 100.0)
    return ComparisonResult(candidates=candidates, reports=reports,
                            improvements=improvements, criterion=criterion)


_FMT = "{:.17g}".format


def _fmt_or_empty(value):
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return ""
    return _FMT(value)


def default_label(scaling):
    """Human-readable candidate tag used when a config names none."""
    alphas = ",".join(f"{a:g}" for a in scaling.alpha)
    return f"alpha={alphas}"


def write_summary_csv(path, candidates, reports, improvements=None, labels=None):
    """One row per candidate: scaling, headline metrics, improvement."""
    n = candidates[0].n
    if labels is None:
        labels = [default_label(c) for c in candidates]
    if improvements is None:
        improvements = [None] * len(candidates)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["label"]
        header += [f"alpha{i + 1}" for i in range(n)]
        header += [f"kappa{i + 1}" for i in range(n)]
        header += ["beta", "tstd_mean", "tstd_final"]
        header += [f"rmse{i + 1}" for i in range(n)]
        header += ["trmse", "runs_used", "failed_runs", "unstable", "improvement_pct"]
        writer.writerow(header)
        for label, cand, report, imp in zip(labels, candidates, reports, improvements):
            row = [label]
            row += [_FMT(a) for a in cand.alpha]
            row += [_FMT(k) for k in cand.kappa]
            row += [_FMT(cand.beta), _fmt_or_empty(report.tstd_mean),
                    _fmt_or_empty(report.tstd_final)]
            if report.runs_used:
                row += [_FMT(v) for v in report.rmse_per_state]
            else:
                row += [""] * n
            row += [_fmt_or_empty(report.trmse), report.runs_used,
                    report.failed_runs, int(report.unstable), _fmt_or_empty(imp)]
            writer.writerow(row)


def write_tstd_csv(path, reports, labels):
    """Long-format per-step TSTD: (label, step, tstd)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "step", "tstd"])
        for label, report in zip(labels, reports):
            first = report.transient_discard + 1
            for i, value in enumerate(report.tstd_per_step):
                writer.writerow([label, first + i, _fmt_or_empty(value)])


def write_surface_csv(path, sweep):
    """One row per grid point: alphas, tstd_mean, per-state RMSE, TRMSE."""
    n = sweep.candidates[0].n
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = [f"alpha{i + 1}" for i in range(n)]
        header += ["tstd_mean"]
        header += [f"rmse{i + 1}" for i in range(n)]
        header += ["trmse"]
        writer.writerow(header)
        for cand, report in zip(sweep.candidates, sweep.reports):
            row = [_FMT(a) for a in cand.alpha]
            row += [_fmt_or_empty(report.tstd_mean)]
            if report.runs_used:
                row += [_FMT(v) for v in report.rmse_per_state]
            else:
                row += [""] * n
            row += [_fmt_or_empty(report.trmse)]
            writer.writerow(row)


def write_errors_csv(path, errors, ok=None):
    """Per-run per-step errors: (run, step, e1..en); failed runs omitted."""
    errors = np.asarray(errors, dtype=float)
    runs, steps, n = errors.shape
    if ok is None:
        ok = np.ones(runs, dtype=bool)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "step"] + [f"e{i + 1}" for i in range(n)])
        for j in range(runs):
            if not ok[j]:
                continue
            for k in range(steps):
                writer.writerow([j, k + 1] + [_FMT(v) for v in errors[j, k]])
