"""Model parameters, Hamiltonian builders and multiquanta resonance conditions.

All rotating-frame quantities are expressed in units of the mechanical
frequency omega_b. Two Hamiltonian forms are provided: the bare-atom form

    H = Delta_a a+a + Delta_sigma sigma_z/2 + omega_b b+b
        + lam (a+ sigma + a sigma+)(b+ + b) + Omega (sigma + sigma+)

and its dressed-basis rewrite at resonant atomic driving (Delta_sigma = 0),

    H' = Delta_a a+a + omega_b b+b + Omega sz~
         + (lam/2) [(a+b+ + a+b + ab+ + ab) sz~
                    + (a+b+ + a+b - ab+ - ab)(s~+ - s~)],

with sz~ = |+><+| - |-><-| and s~ = |-><+|. Both conserve the boson parity
(-1)^(n_a + n_b), which splits the two-boson subsystem into even and odd
sectors; the drive can therefore only connect |00+> to |n_a n_b -> with
n_a + n_b even.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from .hilbert import HilbertSpace, Operator, atom_operator, ladder_operator


@dataclass(frozen=True)
class ModelParams:
    """Rotating-frame constants, all in units of omega_b.

    `lam` is the tripartite coupling strength (lambda); `omega_drive` the
    atomic drive amplitude (Omega). kappa_a, kappa_a2, kappa_b and gamma are
    the single-photon, two-photon, phonon and atomic decay rates.
    """

    delta_a: float
    omega_drive: float
    lam: float
    delta_sigma: float = 0.0
    omega_b: float = 1.0
    kappa_a: float = 0.0
    kappa_a2: float = 0.0
    kappa_b: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.omega_b <= 0:
            raise ValueError(f"omega_b must be positive, got {self.omega_b}")
        if self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        for name in ("kappa_a", "kappa_a2", "kappa_b", "gamma"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")

    def replace(self, **changes) -> "ModelParams":
        from dataclasses import replace as _replace

        return _replace(self, **changes)


@dataclass(frozen=True)
class PhysicalParams:
    """Lab-frame quantities feeding the squeezing-enhancement derivation.

    The atom sits at a node of the cavity field (k * x0 = n*pi), so the
    position-modulated coupling lambda_a_sigma * sin(kx) linearizes to the
    tripartite strength lambda_a_sigma * k * zpm with zpm the zero-point
    motion. The cavity parametric drive has amplitude omega_p_drive at twice
    the atomic drive frequency omega_L.
    """

    lambda_a_sigma: float
    wavenumber_k: float
    zpm: float
    mass: float
    omega_p_drive: float
    delta_aL: float
    delta_sigmaL: float
    omega_L: float
    omega_a: float
    omega_sigma: float
    atom_position_x0: float

    def __post_init__(self):
        if self.zpm <= 0:
            raise ValueError(f"zpm must be positive, got {self.zpm}")
        phase = self.wavenumber_k * self.atom_position_x0
        if abs(phase - math.pi * round(phase / math.pi)) > 1e-9 * max(1.0, abs(phase)):
            raise ValueError(
                f"atom must sit at a field node: k*x0 = {phase} is not a multiple of pi"
            )

    @property
    def lambda_tripartite(self) -> float:
        """Bare tripartite strength lambda_a_sigma * k * zpm."""
        return self.lambda_a_sigma * self.wavenumber_k * self.zpm


@dataclass(frozen=True)
class EffectiveDerivation:
    """Outcome of the squeezing transformation of the parametric drive.

    lambda_enhanced = lambda_abc * cosh(2r) is the coupling entering the
    rotating-frame model; lambda_prime is the counter-rotating coefficient
    dropped under the rotating-wave approximation, with rwa_ratio
    |lambda_prime| / (delta_a_eff + delta_sigma) reported so callers can
    judge the approximation instead of it being silently discarded.
    """

    r: float
    lambda_abc: float
    lambda_enhanced: float
    lambda_prime: float
    delta_a_eff: float
    rwa_ratio: float


def derive_effective_params(phys: PhysicalParams) -> EffectiveDerivation:
    """Squeezing parameter and enhanced coupling from the parametric drive.

    Solves tanh(4r) = 2*omega_p_drive/delta_aL, yielding the squeezed-frame
    detuning sqrt(delta_aL^2 - 4*omega_p_drive^2) and the coupling pair
    (lambda_abc*cosh 2r, -lambda_abc*sinh 2r). Raises when |2*omega_p_drive|
    reaches |delta_aL| (singular squeezing).
    """
    arg = 2.0 * phys.omega_p_drive / phys.delta_aL
    if abs(arg) >= 1.0:
        raise ValueError(
            f"singular squeezing: |2*omega_p/delta_aL| = {abs(arg)} >= 1"
        )
    r = 0.25 * math.atanh(arg)
    lam_abc = phys.lambda_tripartite
    lam = lam_abc * math.cosh(2.0 * r)
    lam_prime = -lam_abc * math.sinh(2.0 * r)
    delta_a = math.sqrt(phys.delta_aL**2 - 4.0 * phys.omega_p_drive**2)
    denom = delta_a + phys.delta_sigmaL
    ratio = abs(lam_prime) / denom if denom != 0 else math.inf
    return EffectiveDerivation(
        r=r,
        lambda_abc=lam_abc,
        lambda_enhanced=lam,
        lambda_prime=lam_prime,
        delta_a_eff=delta_a,
        rwa_ratio=ratio,
    )


def build_h_eff(params: ModelParams, space: HilbertSpace) -> Operator:
    """Rotating-frame Hamiltonian in the bare atomic basis (Hermitian)."""
    a = ladder_operator(space, "photon")
    b = ladder_operator(space, "phonon")
    sm = atom_operator(space, "lowering")
    sz = atom_operator(space, "sigma_z")
    n_a = a.dag() @ a
    n_b = b.dag() @ b
    coupling = (a.dag() @ sm + a @ sm.dag()) @ (b.dag() + b)
    h = (
        params.delta_a * n_a
        + 0.5 * params.delta_sigma * sz
        + params.omega_b * n_b
        + params.lam * coupling
        + params.omega_drive * (sm + sm.dag())
    )
    return h


def build_h_dressed(params: ModelParams, space: HilbertSpace) -> Operator:
    """Dressed-basis Hamiltonian; only valid at resonant driving.

    The numerical matrix lives in the same bare-basis encoding as
    :func:`build_h_eff` (the dressed operators are expanded in |g>, |e>) and
    coincides with it at delta_sigma = 0. The global dressed-state phase is
    fixed by that equality: the odd boson combination couples through
    (s~ - s~+), so the one Hamiltonian matrix can be mixed freely with the
    bare collapse operators a, b, sigma and with dressed-label projectors.
    Only the magnitude lam/2 of the coupling elements is physical.
    """
    if params.delta_sigma != 0.0:
        raise ValueError(
            f"dressed form requires delta_sigma = 0, got {params.delta_sigma}"
        )
    a = ladder_operator(space, "photon")
    b = ladder_operator(space, "phonon")
    sz_d = atom_operator(space, "dressed_sigma_z")
    sm_d = atom_operator(space, "dressed_lowering")
    n_a = a.dag() @ a
    n_b = b.dag() @ b
    even = a.dag() @ b.dag() + a.dag() @ b + a @ b.dag() + a @ b
    odd = a.dag() @ b.dag() + a.dag() @ b - a @ b.dag() - a @ b
    h = (
        params.delta_a * n_a
        + params.omega_b * n_b
        + params.omega_drive * sz_d
        + 0.5 * params.lam * (even @ sz_d + odd @ (sm_d - sm_d.dag()))
    )
    return h


class ResonanceCondition(NamedTuple):
    """Drive amplitude matching a multiquanta transition, with parity check."""

    omega_drive: float
    parity_allowed: bool


def resonance_drive(n_a: int, n_b: int, params: ModelParams) -> ResonanceCondition:
    """Drive amplitude (n_a*delta_a + n_b*omega_b)/2 for |00+> <-> |n_a n_b ->.

    The condition only corresponds to an allowed transition when
    n_a + n_b is even and >= 2; odd or trivial totals are returned with
    parity_allowed = False.
    """
    if n_a < 0 or n_b < 0:
        raise ValueError(f"quanta must be >= 0, got ({n_a}, {n_b})")
    value = 0.5 * (n_a * params.delta_a + n_b * params.omega_b)
    total = n_a + n_b
    return ResonanceCondition(value, total % 2 == 0 and total >= 2)


class DressedBasis(NamedTuple):
    c_plus: float
    c_minus: float
    e_plus: float
    e_minus: float


def dressed_basis(delta_sigma: float, omega_drive: float) -> DressedBasis:
    """Dressed-state coefficients and energies of the driven two-level atom.

    |+> = c_plus|g> + c_minus|e>, |-> = c_minus|g> - c_plus|e>, with energies
    +-sqrt(delta_sigma^2 + 4 Omega^2)/2. At delta_sigma = 0 both coefficients
    reduce to 1/sqrt(2); for delta_sigma -> +inf, c_plus -> 0.
    """
    if omega_drive <= 0:
        raise ValueError(f"omega_drive must be positive, got {omega_drive}")
    rabi2 = delta_sigma**2 + 4.0 * omega_drive**2
    root = math.sqrt(rabi2)
    c_plus = math.sqrt(2.0 * omega_drive**2 / (rabi2 + delta_sigma * root))
    c_minus = math.sqrt(2.0 * omega_drive**2 / (rabi2 - delta_sigma * root))
    return DressedBasis(c_plus, c_minus, 0.5 * root, -0.5 * root)


def boson_parity_operator(space: HilbertSpace) -> Operator:
    """Diagonal operator with eigenvalue (-1)^(n_a + n_b)."""
    n_a, n_b = space.boson_numbers()
    diag = np.where((n_a + n_b) % 2 == 0, 1.0, -1.0).astype(complex)
    return Operator(space, sp.diags(diag, format="csr"))


def free_energy(label, params: ModelParams) -> float:
    """Unperturbed dressed-state energy n_a*delta_a + n_b*omega_b +- Omega."""
    n_a, n_b, sign = label
    s = 1.0 if sign == "+" else -1.0
    return n_a * params.delta_a + n_b * params.omega_b + s * params.omega_drive
