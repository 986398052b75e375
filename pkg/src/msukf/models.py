"""Benchmark state-space models and the ground-truth simulator.

A model bundles a process map f(x, k), a measurement map h(x), the two
noise covariances, and the initial condition. Both maps must accept a
trailing state axis of size n with arbitrary leading axes, so a whole
block of sigma points (or of Monte-Carlo runs) goes through one call.

All map kernels live at module level and models bind their parameters
with functools.partial, which keeps ModelSpec picklable for worker
processes.
"""

import csv
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.special import expit

from . import linalg


def _frozen_array(value, shape, name):
    out = np.asarray(value, dtype=float).reshape(shape).copy()
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{name} must be finite")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ModelSpec:
    """A simulation-ready state-space model.

    n, m are the state and measurement dimensions; f maps (..., n)
    states at step k to (..., n) states at k+1, h maps (..., n) to
    (..., m). Q and R are the additive process and measurement noise
    covariances; x0_true is the initial state, P0 the covariance the
    filter is initialized with; dt and duration describe the time grid.
    """

    n: int
    m: int
    f: object
    h: object
    Q: np.ndarray
    R: np.ndarray
    x0_true: np.ndarray
    P0: np.ndarray
    dt: float
    duration: int

    def __post_init__(self):
        n, m = int(self.n), int(self.m)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "Q", _frozen_array(self.Q, (n, n), "Q"))
        object.__setattr__(self, "R", _frozen_array(self.R, (m, m), "R"))
        object.__setattr__(self, "x0_true", _frozen_array(self.x0_true, (n,), "x0_true"))
        object.__setattr__(self, "P0", _frozen_array(self.P0, (n, n), "P0"))
        object.__setattr__(self, "dt", float(self.dt))
        object.__setattr__(self, "duration", int(self.duration))
        if self.duration < 1:
            raise ValueError("duration must be at least 1 step")


@dataclass(frozen=True)
class Trajectory:
    """One simulated run: true states for steps 0..duration and the
    measurements for steps 1..duration, plus the seed that made it."""

    true_states: np.ndarray
    measurements: np.ndarray
    seed: int


def _as_cov(value, n):
    """Accept a full matrix or a diagonal given as a length-n vector."""
    arr = np.asarray(value, dtype=float)
    if arr.ndim <= 1:
        return np.diag(np.broadcast_to(arr, (n,)).astype(float))
    return arr


def _sigmoid_map(x, k, gain, slope, offset):
    """f_i(x) = gain_i * sigmoid(slope * x_i) + offset_i, elementwise."""
    del k
    return gain * expit(slope * np.asarray(x, dtype=float)) + offset


def _servo_map(x, k, dt, a, b, cogging_amp, cogging_freq, couple_to_x1):
    """Servo shaft model: sinusoidal torque plus a cogging ripple on x1."""
    del k
    x = np.asarray(x, dtype=float)
    x1 = x[..., 0]
    x2 = x[..., 1]
    new1 = x1 + dt * (a[0] * np.sin(b[0] * x1) + cogging_amp * np.sin(cogging_freq * x1))
    drive = x1 if couple_to_x1 else x2
    new2 = x2 + dt * a[1] * np.cos(b[1] * drive)
    return np.stack([new1, new2], axis=-1)


def _linear_map(x, k, a_matrix):
    del k
    return np.asarray(x, dtype=float) @ a_matrix.T


def _matrix_measurement(x, h_matrix):
    return np.asarray(x, dtype=float) @ h_matrix.T


def sigmoid2d_model(
    dt=0.05,
    duration=600,
    x0=(1.5, 1.5),
    a=(120.0, 120.0),
    b=(-3.0, -3.0),
    g=3.0,
    q=(0.5, 0.05),
    r=(0.5625, 0.0225),
    p0=(2.5, 0.1),
    h_matrix=((1.0, 0.1), (0.1, 1.0)),
):
    """Two saturating states with very different noise scales.

    Each state follows f_i(x) = a_i * dt * sigmoid(g * x_i) + b_i, a
    pure map (no additive x term) whose stable points sit near +-3 with
    an unstable crossing at 0, so trajectories hop between two basins
    under process noise. The measurement mixes the states through
    h_matrix. q, r, p0 are diagonal covariances given as variances.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return ModelSpec(
        n=2,
        m=2,
        f=partial(_sigmoid_map, gain=a * float(dt), slope=float(g), offset=b),
        h=partial(_matrix_measurement, h_matrix=np.asarray(h_matrix, dtype=float)),
        Q=_as_cov(q, 2),
        R=_as_cov(r, 2),
        x0_true=x0,
        P0=_as_cov(p0, 2),
        dt=dt,
        duration=duration,
    )


def servo2d_model(
    dt=0.01,
    duration=600,
    x0=(0.0, 0.0),
    a=(3.0, 5.0),
    b=(2.3, 3.0),
    q=(0.001, 0.01),
    r=(2.25, 2.25),
    p0=(0.7, 1.0),
    x2_couples_to_x1=True,
):
    """Servo shaft angle/velocity pair observed directly (h = identity).

        x1' = x1 + dt * (a1 sin(b1 x1) + 0.3 sin(2 x1))
        x2' = x2 + dt * a2 cos(b2 x1)

    x2_couples_to_x1 keeps the cosine driven by x1 as above; set it to
    False to drive it by x2 instead (the self-coupled variant). q, r,
    p0 are diagonal covariances given as variances.
    """
    return ModelSpec(
        n=2,
        m=2,
        f=partial(
            _servo_map,
            dt=float(dt),
            a=np.asarray(a, dtype=float),
            b=np.asarray(b, dtype=float),
            cogging_amp=0.3,
            cogging_freq=2.0,
            couple_to_x1=bool(x2_couples_to_x1),
        ),
        h=partial(_matrix_measurement, h_matrix=np.eye(2)),
        Q=_as_cov(q, 2),
        R=_as_cov(r, 2),
        x0_true=x0,
        P0=_as_cov(p0, 2),
        dt=dt,
        duration=duration,
    )


def linear_model(a_matrix, h_matrix, q, r, x0, p0, dt=1.0, duration=100):
    """Linear-Gaussian model x' = A x + w, z = H x + v.

    Exact closed-form filtering exists for these, which makes them the
    reference case for verifying the sigma-point pipeline end to end.
    """
    a_matrix = np.asarray(a_matrix, dtype=float)
    h_matrix = np.asarray(h_matrix, dtype=float)
    n = a_matrix.shape[0]
    m = h_matrix.shape[0]
    return ModelSpec(
        n=n,
        m=m,
        f=partial(_linear_map, a_matrix=a_matrix),
        h=partial(_matrix_measurement, h_matrix=h_matrix),
        Q=_as_cov(q, n),
        R=_as_cov(r, m),
        x0_true=x0,
        P0=_as_cov(p0, n),
        dt=dt,
        duration=duration,
    )


def noise_draws(rng, cov_factor, count):
    """count standard-normal vectors colored by cov_factor (B with B B^T = cov)."""
    return rng.standard_normal((count, cov_factor.shape[0])) @ cov_factor.T


def simulate(model, seed):
    """Simulate one ground-truth run and its measurement sequence.

    The generator is numpy's default_rng(seed). All process-noise
    vectors are drawn first as one block, then all measurement-noise
    vectors, so the trajectory is a pure function of (model, seed).
    Noise is added after the maps: x_{k+1} = f(x_k, k) + w_k and
    z_{k+1} = h(x_{k+1}) + v_k.
    """
    rng = np.random.default_rng(seed)
    steps = model.duration
    w = noise_draws(rng, linalg.psd_sqrt(model.Q), steps)
    v = noise_draws(rng, linalg.psd_sqrt(model.R), steps)
    true_states = np.empty((steps + 1, model.n))
    measurements = np.empty((steps, model.m))
    x = np.asarray(model.x0_true, dtype=float)
    true_states[0] = x
    for k in range(steps):
        x = np.asarray(model.f(x, k), dtype=float) + w[k]
        true_states[k + 1] = x
        measurements[k] = np.asarray(model.h(x), dtype=float) + v[k]
    if not np.all(np.isfinite(true_states)):
        raise ValueError("simulated trajectory left the finite range")
    return Trajectory(true_states=true_states, measurements=measurements, seed=seed)


def write_trajectory_csv(path, model, trajectory):
    """Write rows (step, true_x1..true_xn, z1..zm) for steps 1..duration."""
    fmt = "{:.17g}".format
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["step"]
        header += [f"true_x{i + 1}" for i in range(model.n)]
        header += [f"z{j + 1}" for j in range(model.m)]
        writer.writerow(header)
        for k in range(model.duration):
            row = [k + 1]
            row += [fmt(value) for value in trajectory.true_states[k + 1]]
            row += [fmt(value) for value in trajectory.measurements[k]]
            writer.writerow(row)
