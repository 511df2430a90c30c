"""Time integration of the shell-particle characteristic system.

Each shell obeys

    r' = w,    w' = ell^2 / r^3 - M(<r) / (4 pi r^2),    ell' = 0,

with M(<r) the mass strictly inside r (a shell feels no self-force).
The integrator is kick-drift-kick leapfrog with one force evaluation
per step; forces come from a single stable sort of the radii, so a step
costs O(N log N).  Shell crossings inside a step are not sub-resolved;
their effect vanishes with the step size and is covered by the energy
drift gate in the tests.

Purely radial shells (ell = 0) that drift through the centre are
reflected: r -> |r|, w -> -w.  A centre crossing with ell > 0 means the
step was too large; the step is rejected and retried with half the
step until it succeeds or the step underflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .diagnostics import diagnostics_record
from .ensemble import Ensemble
from .errors import DomainError, StiffnessError

__all__ = [
    "IntegratorConfig",
    "TrajectorySink",
    "acceleration",
    "step",
    "adaptive_dt",
    "run",
]

FOUR_PI = 4.0 * math.pi

_TINY = np.finfo(np.float64).tiny


@dataclass(frozen=True)
class IntegratorConfig:
    """Step-size and output control for a run.

    `dt_initial` caps the very first step and sets the underflow
    threshold dt_min = 1e-12 * dt_initial.  `dt_safety` scales the
    adaptive step estimate.  Records are emitted every
    `output_cadence`; the step is truncated to land on record and
    snapshot times exactly.
    """

    t_end: float
    output_cadence: float
    dt_initial: float = 0.1
    dt_safety: float = 0.1
    reflection_enabled: bool = True

    def __post_init__(self):
        if self.dt_initial <= 0.0:
            raise DomainError("dt_initial must be positive")
        if not 0.0 < self.dt_safety <= 1.0:
            raise DomainError("dt_safety must be in (0, 1]")
        if self.output_cadence <= 0.0:
            raise DomainError("output_cadence must be positive")
        if self.t_end < 0.0:
            raise DomainError("t_end must be >= 0")

    @property
    def dt_min(self):
        return 1.0e-12 * self.dt_initial


@dataclass
class TrajectorySink:
    """Run output: diagnostics records plus optional snapshots.

    `group_stats` holds, per record, per-group scalars that do not fit
    the record schema (minimum radius and radial momentum, kinetic
    energy, variance).  `events` counts reflections and step
    rejections between consecutive records, for smoothness masking.
    """

    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    group_stats: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def times(self):
        return np.array([rec.time for rec in self.records])

    def series(self, attr):
        return np.array([getattr(rec, attr) for rec in self.records])


def _raw_acceleration(r, ell, mass):
    order = np.argsort(r, kind="stable")
    prefix = np.concatenate(([0.0], np.cumsum(mass[order])))
    enclosed = prefix[np.searchsorted(r[order], r, side="left")]
    return (ell * ell) / (r * r * r) - enclosed / (FOUR_PI * r * r)


def acceleration(ensemble: Ensemble):
    """Per-particle radial acceleration ell^2/r^3 - M(<r)/(4 pi r^2)."""
    return _raw_acceleration(ensemble.r, ensemble.ell, ensemble.mass)


def _raw_adaptive_dt(r, w, accel, config):
    eps = 1.0e-30
    dt_kin = r / (np.abs(w) + eps)
    dt_dyn = np.sqrt(r / (np.abs(accel) + eps))
    dt = config.dt_safety * float(np.min(np.minimum(dt_kin, dt_dyn)))
    return min(max(dt, config.dt_min), config.output_cadence)


def adaptive_dt(ensemble: Ensemble, config: IntegratorConfig, accel=None):
    """Deterministic step suggestion from the current state.

    dt = safety * min over particles of min(r/|w|, sqrt(r/|a|)),
    clamped to [dt_min, output_cadence].
    """
    if accel is None:
        accel = acceleration(ensemble)
    return _raw_adaptive_dt(ensemble.r, ensemble.w, accel, config)


def _attempt_step(r, w, ell, mass, accel, dt, reflection_enabled):
    """One kick-drift-kick attempt.  Returns None if the step must be
    rejected (centre crossing of a particle that cannot be reflected),
    else (r, w, accel, n_reflections)."""
    w_half = w + (0.5 * dt) * accel
    r_new = r + dt * w_half
    crossed = r_new <= 0.0
    n_reflect = 0
    if np.any(crossed):
        radial = ell == 0.0
        if not reflection_enabled or np.any(crossed & ~radial):
            return None
        w_half = np.where(crossed, -w_half, w_half)
        r_new = np.where(crossed, np.maximum(np.abs(r_new), _TINY), r_new)
        n_reflect = int(np.count_nonzero(crossed))
    accel_new = _raw_acceleration(r_new, ell, mass)
    w_new = w_half + (0.5 * dt) * accel_new
    return r_new, w_new, accel_new, n_reflect


def step(ensemble: Ensemble, dt, reflection_enabled=True, dt_min=None):
    """Advance the ensemble by exactly dt, subdividing on rejection.

    A rejected sub-step is retried at half the size; halves below
    `dt_min` (default 1e-12 * dt) raise StiffnessError.
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    if dt_min is None:
        dt_min = 1.0e-12 * dt
    r = ensemble.r.copy()
    w = ensemble.w.copy()
    ell = ensemble.ell
    mass = ensemble.mass
    accel = _raw_acceleration(r, ell, mass)
    t = ensemble.time
    remaining = dt
    h = dt
    while remaining > 0.0:
        h = min(h, remaining)
        result = _attempt_step(r, w, ell, mass, accel, h, reflection_enabled)
        if result is None:
            h *= 0.5
            if h < dt_min:
                raise StiffnessError(
                    "step size underflow while resolving a centre crossing",
                    time=t,
                )
            continue
        r, w, accel, _ = result
        t += h
        remaining -= h
    return Ensemble(ensemble.time + dt, r, w, ell, mass, ensemble.group)


def _group_stats(r, w, ell, mass, group_masks):
    stats = {}
    for name, mask in group_masks.items():
        gm = float(np.sum(mass[mask]))
        tang = ell[mask] / r[mask]
        stats[name] = {
            "min_r": float(r[mask].min()),
            "min_w": float(w[mask].min()),
            "mass": gm,
            "variance": float(np.sum(mass[mask] * r[mask] ** 2) / gm),
            "kinetic": float(0.5 * np.sum(mass[mask] * (w[mask] ** 2 + tang**2))),
        }
    return stats


def run(
    ensemble: Ensemble,
    config: IntegratorConfig,
    r_grid=(),
    q_list=(),
    n_bins=None,
    snapshot_times=(),
) -> TrajectorySink:
    """Integrate to t_end, emitting diagnostics every output_cadence.

    Deterministic given (ensemble, config): the step sequence depends
    only on the state, and every reduction uses a fixed association
    order.  Record times are exact multiples of the cadence (plus
    t_end when it is not a multiple).  Snapshots are stored at the
    requested times, which the stepper lands on exactly.
    """
    t0 = ensemble.time
    t_end = config.t_end
    if t_end < t0:
        raise DomainError("t_end precedes the ensemble time")

    r = ensemble.r.copy()
    w = ensemble.w.copy()
    ell = ensemble.ell
    mass = ensemble.mass
    group = ensemble.group

    sink = TrajectorySink()
    snap_times = sorted(float(s) for s in snapshot_times)
    for s in snap_times:
        if s < t0 or s > t_end:
            raise DomainError("snapshot times must lie within [t0, t_end]")

    group_masks = {
        str(name): group == name for name in np.unique(group) if name != ""
    }

    def emit_record(t_now):
        snap = Ensemble(t_now, r, w, ell, mass, group)
        sink.records.append(
            diagnostics_record(snap, r_grid=r_grid, q_list=q_list, n_bins=n_bins)
        )
        sink.group_stats.append(_group_stats(r, w, ell, mass, group_masks))
        sink.events.append({"reflections": reflections, "rejections": rejections})

    def emit_snapshot(t_now):
        sink.snapshots.append(Ensemble(t_now, r, w, ell, mass, group))

    reflections = 0
    rejections = 0
    accel = _raw_acceleration(r, ell, mass)
    emit_record(t0)
    if snap_times and abs(snap_times[0] - t0) <= 1.0e-12 * max(1.0, abs(t0)):
        emit_snapshot(t0)
        snap_times.pop(0)

    out_index = 1
    t = t0
    first = True
    time_tol = 1.0e-9 * config.output_cadence
    while t < t_end - time_tol:
        next_record = t0 + out_index * config.output_cadence
        boundary = min(next_record, t_end)
        if snap_times:
            boundary = min(boundary, snap_times[0])
        dt = _raw_adaptive_dt(r, w, accel, config)
        if first:
            dt = min(dt, config.dt_initial)
            first = False
        dt = min(dt, boundary - t)
        while True:
            result = _attempt_step(r, w, ell, mass, accel, dt, config.reflection_enabled)
            if result is not None:
                break
            rejections += 1
            dt *= 0.5
            if dt < config.dt_min:
                raise StiffnessError(
                    "step size underflow while resolving a centre crossing",
                    time=t,
                )
        r, w, accel, n_reflect = result
        reflections += n_reflect
        t += dt
        if snap_times and t >= snap_times[0] - time_tol:
            t = snap_times[0]
            emit_snapshot(t)
            snap_times.pop(0)
        if t >= min(next_record, t_end) - time_tol:
            t = next_record if next_record <= t_end else t_end
            emit_record(min(t, t_end))
            reflections = 0
            rejections = 0
            out_index += 1
            if t >= t_end - time_tol:
                break
    return sink


def energy_drift(sink: TrajectorySink):
    """Max relative deviation of E over the records (0 for one record)."""
    energies = sink.series("energy_total")
    scale = max(abs(energies[0]), 1.0e-300)
    return float(np.max(np.abs(energies - energies[0])) / scale)
