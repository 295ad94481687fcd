"""Closed Schrödinger evolution, Lindblad master equation and steady states.

The master equation is

    d rho / dt = i [rho, H] + sum_k rate_k (2 O_k rho O_k+ - rho O_k+ O_k
                                            - O_k+ O_k rho) / 2,

vectorized row-major: vec(A X B) = (A kron B^T) vec(X). Both an explicit
sparse superoperator matrix and a matrix-free action are provided; evolution
uses an embedded adaptive Runge-Kutta pair (RK45), the steady state a sparse
direct factorization of the trace-constrained linear system.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .hilbert import (
    DensityMatrix,
    HilbertSpace,
    Operator,
    StateVector,
    dressed_state,
    label_key,
    ladder_operator,
    atom_operator,
    parse_label,
)
from .model import ModelParams, boson_parity_operator


@dataclass(frozen=True)
class CollapseChannel:
    """One Lindblad channel: jump operator, rate and a semantic tag.

    kind is one of "photon", "photon_pair", "phonon", "atom" for the standard
    channels; quanta_removed tells event bookkeeping how many excitations one
    jump carries away (2 for the two-photon channel).
    """

    operator: Operator
    rate: float
    kind: str
    quanta_removed: int = 1

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"rate must be >= 0, got {self.rate}")


def standard_channels(params: ModelParams, space: HilbertSpace) -> list:
    """Channels of the model with nonzero rate: a, a^2, b and sigma."""
    a = ladder_operator(space, "photon")
    b = ladder_operator(space, "phonon")
    sm = atom_operator(space, "lowering")
    channels = []
    if params.kappa_a > 0:
        channels.append(CollapseChannel(a, params.kappa_a, "photon"))
    if params.kappa_a2 > 0:
        channels.append(CollapseChannel(a @ a, params.kappa_a2, "photon_pair", 2))
    if params.kappa_b > 0:
        channels.append(CollapseChannel(b, params.kappa_b, "phonon"))
    if params.gamma > 0:
        channels.append(CollapseChannel(sm, params.gamma, "atom"))
    return channels


@dataclass
class EvolutionResult:
    """Sampled time series of one evolution run."""

    times: np.ndarray
    observables: dict
    final_state: Union[StateVector, DensityMatrix]


class ObservableRecorder:
    """Precomputed operators for the standard observable set.

    Records photon/phonon occupation, boson parity, norm or trace, and the
    dressed populations P_{n_a n_b +-} requested via `populations`.
    """

    def __init__(self, space: HilbertSpace, populations=None):
        self.space = space
        self.n_a = (ladder_operator(space, "photon").dag()
                    @ ladder_operator(space, "photon")).matrix
        self.n_b = (ladder_operator(space, "phonon").dag()
                    @ ladder_operator(space, "phonon")).matrix
        self.parity = boson_parity_operator(space).matrix.diagonal().real
        self.labels = [parse_label(p) for p in (populations or [])]
        self.proj_vectors = np.column_stack(
            [dressed_state(space, *lbl).amplitudes for lbl in self.labels]
        ) if self.labels else None

    def keys(self, closed: bool) -> list:
        base = ["norm" if closed else "trace", "photon_number", "phonon_number",
                "boson_parity"]
        if not closed:
            base.append("herm_dev")
        return base + [label_key(lbl) for lbl in self.labels]

    def sample_pure(self, psi: np.ndarray) -> list:
        norm2 = float(np.real(np.vdot(psi, psi)))
        row = [
            np.sqrt(norm2),
            float(np.real(np.vdot(psi, self.n_a @ psi))),
            float(np.real(np.vdot(psi, self.n_b @ psi))),
            float(np.real(np.sum(self.parity * np.abs(psi) ** 2))),
        ]
        if self.proj_vectors is not None:
            row.extend(np.abs(self.proj_vectors.conj().T @ psi) ** 2)
        return row

    def sample_density(self, rho: np.ndarray) -> list:
        row = [
            float(np.real(np.trace(rho))),
            float(np.real((self.n_a @ rho).diagonal().sum())),
            float(np.real((self.n_b @ rho).diagonal().sum())),
            float(np.real(np.sum(self.parity * rho.diagonal().real))),
            float(np.abs(rho - rho.conj().T).max()),
        ]
        if self.proj_vectors is not None:
            v = self.proj_vectors
            row.extend(np.real(np.einsum("ij,jk,ki->i", v.conj().T, rho, v)))
        return row


def _check_times(times) -> np.ndarray:
    t = np.asarray(times, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValueError("times must contain at least two points")
    if np.any(np.diff(t) <= 0):
        raise ValueError("times must be strictly increasing")
    return t


def evolve_closed(
    h: Operator,
    psi0: StateVector,
    times,
    populations=None,
    rtol: float = 1e-9,
    atol: float = 1e-11,
) -> EvolutionResult:
    """Integrate i d|psi>/dt = H |psi| and sample observables at `times`."""
    if not h.is_hermitian(1e-9):
        raise ValueError("closed evolution requires a Hermitian Hamiltonian")
    if h.space != psi0.space:
        raise ValueError("Hamiltonian and state live on different spaces")
    if abs(psi0.norm() - 1.0) > 1e-8:
        raise ValueError(f"psi0 must be normalized, norm = {psi0.norm()}")
    t = _check_times(times)
    gen = (-1j) * h.matrix
    sol = solve_ivp(
        lambda _, y: gen @ y,
        (t[0], t[-1]),
        psi0.amplitudes,
        t_eval=t,
        method="RK45",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"closed evolution failed: {sol.message}")
    recorder = ObservableRecorder(h.space, populations)
    rows = np.array([recorder.sample_pure(sol.y[:, i]) for i in range(sol.y.shape[1])])
    observables = dict(zip(recorder.keys(closed=True), rows.T))
    return EvolutionResult(t, observables, StateVector(h.space, sol.y[:, -1]))


class Liouvillian:
    """Lindblad superoperator with matrix-free action and sparse matrix form."""

    def __init__(self, h: Operator, channels: Sequence[CollapseChannel]):
        if not h.is_hermitian(1e-9):
            raise ValueError("Liouvillian requires a Hermitian Hamiltonian")
        for ch in channels:
            if ch.operator.space != h.space:
                raise ValueError("collapse operator space mismatch")
        self.h = h
        self.channels = list(channels)
        self.space = h.space
        self.dim = h.space.total_dim
        self._h_dense = h.dense()
        self._ops = []
        for ch in channels:
            o = ch.operator.matrix
            odo = (ch.operator.dag() @ ch.operator).matrix
            self._ops.append((ch.rate, o, odo, o.toarray(), odo.toarray()))
        self._matrix = None

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """Action on a (possibly non-Hermitian) matrix."""
        h = self._h_dense
        out = 1j * (rho @ h - h @ rho)
        for rate, _, _, o_d, odo_d in self._ops:
            out += rate * (o_d @ rho @ o_d.conj().T - 0.5 * (rho @ odo_d + odo_d @ rho))
        return out

    @property
    def matrix(self) -> sp.csr_matrix:
        """Sparse matrix on row-major vectorized density matrices."""
        if self._matrix is None:
            n = self.dim
            eye = sp.identity(n, format="csr", dtype=complex)
            h = self.h.matrix
            mat = 1j * (sp.kron(eye, h.T) - sp.kron(h, eye))
            for rate, o, odo, _, _ in self._ops:
                mat = mat + rate * (
                    sp.kron(o, o.conj())
                    - 0.5 * sp.kron(eye, odo.T)
                    - 0.5 * sp.kron(odo, eye)
                )
            self._matrix = mat.tocsr()
        return self._matrix

    def residual(self, rho: DensityMatrix) -> float:
        """Entrywise L1 norm of L(rho), a stationarity diagnostic."""
        return float(np.abs(self.apply(rho.matrix)).sum())


def liouvillian(h: Operator, channels: Sequence[CollapseChannel]) -> Liouvillian:
    """Assemble the Lindblad generator for H and a list of collapse channels."""
    return Liouvillian(h, channels)


def evolve_open(
    l: Liouvillian,
    rho0: DensityMatrix,
    times,
    populations=None,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> EvolutionResult:
    """Integrate d rho/dt = L(rho); the trace is left to drift as a diagnostic."""
    if l.space != rho0.space:
        raise ValueError("Liouvillian and state live on different spaces")
    t = _check_times(times)
    n = l.dim
    gen = l.matrix
    sol = solve_ivp(
        lambda _, y: gen @ y,
        (t[0], t[-1]),
        rho0.matrix.reshape(-1),
        t_eval=t,
        method="RK45",
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise RuntimeError(f"open evolution failed: {sol.message}")
    recorder = ObservableRecorder(l.space, populations)
    rows = np.array(
        [recorder.sample_density(sol.y[:, i].reshape(n, n)) for i in range(sol.y.shape[1])]
    )
    observables = dict(zip(recorder.keys(closed=False), rows.T))
    final = DensityMatrix(l.space, sol.y[:, -1].reshape(n, n))
    return EvolutionResult(t, observables, final)


class SteadyStateError(RuntimeError):
    """The stationary solve failed its residual or positivity self-check."""


def steady_state(
    l: Liouvillian,
    method: str = "auto",
    residual_tol: float = 1e-8,
    eig_floor: float = -1e-9,
) -> DensityMatrix:
    """Solve L(rho) = 0 with Tr rho = 1.

    The vectorized Liouvillian with one row replaced by the trace constraint
    is factorized directly (sparse LU); `method="evolve"` instead relaxes an
    initial state for 60 / (slowest rate) time units. Both paths verify the
    residual against the unmodified generator and the spectrum floor, and
    raise SteadyStateError for degenerate or non-stationary outcomes.
    """
    if method not in ("auto", "direct", "evolve"):
        raise ValueError(f"unknown steady-state method {method!r}")
    if method in ("auto", "direct"):
        rho = _steady_direct(l)
    else:
        rho = _steady_evolve(l)

    if not np.all(np.isfinite(rho)):
        raise SteadyStateError(
            "stationary solve returned non-finite entries; "
            "the stationary space is singular or degenerate"
        )
    rho = 0.5 * (rho + rho.conj().T)
    tr = np.trace(rho).real
    if abs(tr) < 1e-12:
        raise SteadyStateError("stationary solve returned a traceless matrix")
    rho = rho / tr
    result = DensityMatrix(l.space, rho)
    res = l.residual(result)
    if not res <= residual_tol:
        raise SteadyStateError(
            f"stationary residual {res:.2e} exceeds {residual_tol:.1e}; "
            "the stationary space may be degenerate"
        )
    min_eig = float(np.linalg.eigvalsh(rho).min())
    if min_eig < eig_floor:
        raise SteadyStateError(f"stationary state not positive: min eig {min_eig:.2e}")
    return result


def _steady_direct(l: Liouvillian) -> np.ndarray:
    n = l.dim
    mat = l.matrix.tolil(copy=True)
    weight = np.mean(np.abs(l.matrix.diagonal()))
    if weight == 0.0:
        weight = 1.0
    trace_row = np.zeros(n * n, dtype=complex)
    trace_row[np.arange(n) * (n + 1)] = weight
    mat[0, :] = trace_row
    rhs = np.zeros(n * n, dtype=complex)
    rhs[0] = weight
    try:
        x = spla.spsolve(mat.tocsc(), rhs)
    except RuntimeError as err:
        raise SteadyStateError(f"sparse factorization failed: {err}") from err
    return x.reshape(n, n)


def _steady_evolve(l: Liouvillian) -> np.ndarray:
    rates = [ch.rate for ch in l.channels if ch.rate > 0]
    if not rates:
        raise SteadyStateError("cannot relax to a steady state without dissipation")
    horizon = 60.0 / min(rates)
    rho0 = dressed_state(l.space, 0, 0, "-").to_density()
    result = evolve_open(l, rho0, np.linspace(0.0, horizon, 61), rtol=1e-9, atol=1e-12)
    return result.final_state.matrix
