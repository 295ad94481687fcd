"""Two-time correlations, emission spectra and the photon-phonon cross-g2.

Stationary correlations <A+(t) A(t+tau)> are evaluated by the quantum
regression theorem: propagate X(tau) = exp(L tau)[rho_ss A+] under the same
Liouvillian and read off Tr[A X(tau)]. Spectra are the one-sided transform

    S(omega) = 2 Re int_0^tau_max dtau e^{i omega tau} <A+(0) A(tau)>_ss

by trapezoidal quadrature; the overall scale is conventional, peak positions
and relative heights are the physical content.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .hilbert import DensityMatrix, Operator, expectation, ladder_operator
from .dynamics import Liouvillian

DECAY_FRACTION = 1e-4


@dataclass(frozen=True)
class CorrelationSeries:
    """<A+(t) A(t+tau)> on a nonnegative tau grid, at stationarity."""

    tau_grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class SpectrumSeries:
    omega_grid: np.ndarray
    values: np.ndarray

    def peak_frequency(self) -> float:
        return float(self.omega_grid[int(np.argmax(self.values))])


def two_time_correlation(
    l: Liouvillian,
    rho_ss: DensityMatrix,
    op: Operator,
    tau_grid,
    check_stationary: bool = True,
    stationarity_tol: float = 1e-8,
    rtol: float = 1e-8,
    atol: float = 1e-12,
) -> CorrelationSeries:
    """Stationary correlation <A+(0) A(tau)> = Tr[A exp(L tau)(rho A+)].

    `check_stationary=False` skips the L(rho) residual gate, which permits
    regression-style propagation from a deliberately non-stationary test
    state.
    """
    if l.space != rho_ss.space or l.space != op.space:
        raise ValueError("Liouvillian, state and operator must share one space")
    tau = np.asarray(tau_grid, dtype=float)
    if tau.ndim != 1 or len(tau) < 2 or tau[0] < 0 or np.any(np.diff(tau) <= 0):
        raise ValueError("tau_grid must be increasing and nonnegative")
    if check_stationary:
        res = l.residual(rho_ss)
        if res > stationarity_tol:
            raise ValueError(
                f"input state is not stationary: |L(rho)|_1 = {res:.2e}"
            )

    n = l.dim
    x0 = (rho_ss.matrix @ op.dag().matrix.toarray()).reshape(-1)
    gen = l.matrix
    a_mat = op.matrix
    values = np.empty(len(tau), dtype=complex)

    if tau[0] == 0.0:
        values[0] = (a_mat @ x0.reshape(n, n)).diagonal().sum()
        remaining = tau[1:]
        offset = 1
    else:
        remaining = tau
        offset = 0
    if len(remaining):
        sol = solve_ivp(
            lambda _, y: gen @ y,
            (0.0, remaining[-1]),
            x0,
            t_eval=remaining,
            method="RK45",
            rtol=rtol,
            atol=atol,
        )
        if not sol.success:
            raise RuntimeError(f"regression propagation failed: {sol.message}")
        for i in range(sol.y.shape[1]):
            values[offset + i] = (a_mat @ sol.y[:, i].reshape(n, n)).diagonal().sum()
    return CorrelationSeries(tau, values)


def emission_spectrum(corr: CorrelationSeries, omega_grid) -> SpectrumSeries:
    """One-sided transform of a decayed correlation series.

    Requires |C(tau_max)| < 1e-4 |C(0)|; otherwise the window truncates the
    line shape and the caller must extend the tau grid.
    """
    omega = np.asarray(omega_grid, dtype=float)
    c0 = abs(corr.values[0])
    tail = abs(corr.values[-1])
    if c0 > 0 and tail > DECAY_FRACTION * c0:
        raise ValueError(
            f"correlation not decayed: |C(tau_max)| / |C(0)| = {tail / c0:.2e} "
            f"(needs < {DECAY_FRACTION:.0e}); extend tau_max"
        )
    phases = np.exp(1j * np.outer(omega, corr.tau_grid))
    integral = np.trapezoid(phases * corr.values[None, :], corr.tau_grid, axis=1)
    return SpectrumSeries(omega, 2.0 * np.real(integral))


def cross_g2(rho: DensityMatrix) -> float:
    """Equal-time normalized cross-correlation <a+ b+ b a>/(<a+a><b+b>).

    Values above 1 indicate bunched joint photon-phonon emission. Undefined
    (raises) when either mode has vanishing occupation.
    """
    space = rho.space
    a = ladder_operator(space, "photon")
    b = ladder_operator(space, "phonon")
    n_a = float(expectation(a.dag() @ a, rho).real)
    n_b = float(expectation(b.dag() @ b, rho).real)
    if n_a <= 1e-12 or n_b <= 1e-12:
        raise ValueError(
            f"cross_g2 undefined at vanishing occupation (<n_a>={n_a:.2e}, "
            f"<n_b>={n_b:.2e})"
        )
    joint = expectation(a.dag() @ b.dag() @ b @ a, rho).real
    return float(joint / (n_a * n_b))
