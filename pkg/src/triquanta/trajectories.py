"""Monte Carlo wavefunction unraveling of the master equation.

Between jumps the (unnormalized) state evolves under the non-Hermitian
generator H_nh = H - (i/2) sum_k rate_k O_k+ O_k. Because H_nh is constant it
is diagonalized once and segments are propagated exactly through its
eigenbasis, which makes the long counting windows (omega_b T up to 1e5-1e6)
affordable; the squared norm is then monotonically nonincreasing in time and
a jump fires when it crosses a pre-drawn uniform threshold, located by
bracketed root finding to ~1e-10 in time. The jump channel is drawn with
probability proportional to rate_k |O_k psi|^2 and the state renormalized.

Trajectory j uses the deterministic stream numpy.random.default_rng(
base_seed + j) (PCG64), so ensembles are reproducible bit-for-bit and
trajectories may run concurrently without shared state.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg as sla
from scipy.optimize import brentq

from .dynamics import CollapseChannel, ObservableRecorder
from .hilbert import Operator, StateVector, label_key, parse_label


@dataclass(frozen=True)
class JumpEvent:
    """One emission event: when, through which channel, carrying how much."""

    time: float
    channel: str
    quanta_removed: int


@dataclass
class TrajectoryRecord:
    """Events and sampled observables of one stochastic realization."""

    seed: int
    events: list
    times: np.ndarray
    observables: dict


@dataclass(frozen=True)
class EmissionStats:
    """Correlated-emission count statistics over an ensemble."""

    window_T: float
    n_trajectories: int
    mean_events: float
    stderr: float


class _EigenPropagator:
    """Exact segment propagator psi(dt) = S exp(-i w dt) S^-1 psi."""

    def __init__(self, h: Operator, channels: Sequence[CollapseChannel]):
        h_nh = h.dense().astype(complex)
        for ch in channels:
            h_nh -= 0.5j * ch.rate * (ch.operator.dag() @ ch.operator).dense()
        w, s = sla.eig(h_nh)
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(s))):
            raise RuntimeError("eigendecomposition of the effective generator failed")
        cond = np.linalg.cond(s)
        if cond > 1e10:
            warnings.warn(
                f"ill-conditioned non-Hermitian eigenbasis (cond {cond:.1e}); "
                "jump times may lose accuracy",
                RuntimeWarning,
            )
        self.w = w
        self.s = s
        self.s_inv = np.linalg.inv(s)

    def coefficients(self, psi: np.ndarray) -> np.ndarray:
        return self.s_inv @ psi

    def states(self, coeff: np.ndarray, dts) -> np.ndarray:
        """Unnormalized states at offsets dts, columns of the returned matrix."""
        phases = np.exp(np.outer(-1j * self.w, np.atleast_1d(dts)))
        return self.s @ (coeff[:, None] * phases)

    def norm2(self, coeff: np.ndarray, dt: float) -> float:
        psi = self.s @ (coeff * np.exp(-1j * self.w * dt))
        return float(np.real(np.vdot(psi, psi)))


def run_trajectories(
    h: Operator,
    channels: Sequence[CollapseChannel],
    psi0: StateVector,
    t_max: float,
    n_traj: int,
    base_seed: int,
    sample_times=None,
    populations=None,
) -> list:
    """Simulate `n_traj` quantum trajectories up to `t_max`.

    Observables (occupation numbers, boson parity, norm and any requested
    dressed populations) are sampled on `sample_times` (default: 201 uniform
    points); jump events are logged with their channel tag.
    """
    if t_max <= 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    if n_traj < 1:
        raise ValueError(f"n_traj must be >= 1, got {n_traj}")
    if h.space != psi0.space:
        raise ValueError("Hamiltonian and state live on different spaces")
    if sample_times is None:
        sample_times = np.linspace(0.0, t_max, 201)
    t_samples = np.asarray(sample_times, dtype=float)
    if t_samples.ndim != 1 or len(t_samples) == 0 or np.any(np.diff(t_samples) <= 0):
        raise ValueError("sample_times must be non-empty and strictly increasing")
    if t_samples[0] < 0 or t_samples[-1] > t_max:
        raise ValueError("sample_times must lie within [0, t_max]")

    active = [ch for ch in channels if ch.rate > 0]
    engine = _EigenPropagator(h, active)
    recorder = ObservableRecorder(h.space, populations)
    jump_ops = [ch.operator.matrix for ch in active]

    records = []
    for j in range(n_traj):
        seed = base_seed + j
        rng = np.random.default_rng(seed)
        events, samples = _single_trajectory(
            engine, active, jump_ops, psi0.amplitudes, t_max, t_samples, recorder, rng
        )
        observables = dict(zip(recorder.keys(closed=True), samples.T))
        records.append(TrajectoryRecord(seed, events, t_samples.copy(), observables))
    return records


def _single_trajectory(engine, channels, jump_ops, psi0, t_max, t_samples, recorder, rng):
    psi = psi0.copy()
    t = 0.0
    events = []
    samples = np.empty((len(t_samples), len(recorder.keys(closed=True))))
    next_sample = 0
    threshold = rng.random()

    while True:
        coeff = engine.coefficients(psi)
        t_rem = t_max - t
        end_norm2 = engine.norm2(coeff, t_rem)
        jumped = end_norm2 < threshold
        if jumped:
            dt_jump = brentq(
                lambda dt: engine.norm2(coeff, dt) - threshold,
                0.0,
                t_rem,
                xtol=1e-12,
                maxiter=200,
            )
        else:
            dt_jump = t_rem

        # Fill samples inside (t, t + dt_jump]; the state at the jump instant
        # itself is the pre-jump state.
        hi = next_sample
        while hi < len(t_samples) and t_samples[hi] <= t + dt_jump:
            hi += 1
        if hi > next_sample:
            dts = t_samples[next_sample:hi] - t
            block = engine.states(coeff, dts)
            norms = np.linalg.norm(block, axis=0)
            if np.any(norms == 0):
                raise RuntimeError("trajectory state collapsed to zero norm")
            block = block / norms
            for k in range(block.shape[1]):
                samples[next_sample + k] = recorder.sample_pure(block[:, k])
            next_sample = hi

        if not jumped:
            break

        psi_pre = engine.states(coeff, dt_jump)[:, 0]
        weights = np.array(
            [ch.rate * np.linalg.norm(op @ psi_pre) ** 2
             for ch, op in zip(channels, jump_ops)]
        )
        total = weights.sum()
        if total <= 0:
            raise RuntimeError("norm threshold crossed with no available jump channel")
        k = rng.choice(len(channels), p=weights / total)
        psi = jump_ops[k] @ psi_pre
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise RuntimeError("jump produced a zero-norm state")
        psi = psi / norm
        t = t + dt_jump
        events.append(JumpEvent(float(t), channels[k].kind, channels[k].quanta_removed))
        threshold = rng.random()

    return events, samples


def ensemble_average(records: Sequence[TrajectoryRecord], observable: str):
    """Pointwise mean and standard error of one sampled observable.

    Returns (times, mean, stderr); stderr is NaN for a single trajectory
    (undefined, rather than a misleading zero).
    """
    if not records:
        raise ValueError("empty ensemble")
    times = records[0].times
    for rec in records[1:]:
        if len(rec.times) != len(times) or not np.allclose(rec.times, times):
            raise ValueError("records do not share a sample grid")
    try:
        values = np.array([rec.observables[observable] for rec in records])
    except KeyError:
        raise ValueError(f"observable {observable!r} was not sampled") from None
    mean = values.mean(axis=0)
    if len(records) == 1:
        stderr = np.full_like(mean, np.nan)
    else:
        stderr = values.std(axis=0, ddof=1) / np.sqrt(len(records))
    return times, mean, stderr


_PHOTON_KINDS = ("photon", "photon_pair")


def count_correlated_emissions(
    records: Sequence[TrajectoryRecord],
    window_T: float,
    coincidence: float,
) -> EmissionStats:
    """Count photon-phonon coincidence clusters per trajectory.

    Events inside [0, window_T] are chained into clusters wherever
    consecutive spacings stay within `coincidence`; a cluster counts as one
    correlated emission event when it contains at least one photon-type and
    at least one phonon jump.
    """
    if coincidence <= 0:
        raise ValueError(f"coincidence window must be positive, got {coincidence}")
    if not records:
        raise ValueError("empty ensemble")
    counts = np.empty(len(records))
    for i, rec in enumerate(records):
        times = [ev.time for ev in rec.events if ev.time <= window_T]
        kinds = [ev.channel for ev in rec.events if ev.time <= window_T]
        n = 0
        start = 0
        for k in range(len(times) + 1):
            boundary = k == len(times) or (k > 0 and times[k] - times[k - 1] > coincidence)
            if boundary and k > start:
                cluster = kinds[start:k]
                if any(c in _PHOTON_KINDS for c in cluster) and "phonon" in cluster:
                    n += 1
                start = k
        counts[i] = n
    mean = float(counts.mean())
    stderr = float(counts.std(ddof=1) / np.sqrt(len(counts))) if len(counts) > 1 else 0.0
    return EmissionStats(window_T, len(records), mean, stderr)


def trajectory_populations(record: TrajectoryRecord, states) -> dict:
    """Sampled populations of the requested dressed labels, keyed for CSV.

    Raises for labels that were not sampled in the record.
    """
    out = {"time": record.times}
    for label in states:
        key = label_key(parse_label(label))
        if key not in record.observables:
            raise ValueError(f"unknown label {label!r}: not sampled in this record")
        out[key] = record.observables[key]
    return out
