"""Truncated Fock-space operator algebra for the atom ⊗ photon ⊗ phonon system.

Basis convention (fixed, relied on by file formats and fixtures): the composite
index runs atom-slowest / phonon-fastest,

    index = n_atom * (N_a+1)*(N_b+1) + n_a * (N_b+1) + n_b,

with atom level 0 = |g>, 1 = |e>, photon Fock levels 0..N_a and phonon Fock
levels 0..N_b. Operators are stored as sparse CSR matrices on the full
composite space; all values are immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
import scipy.sparse as sp

# Dressed atomic label: (n_a, n_b, "+") or (n_a, n_b, "-").
DressedLabel = tuple  # (int, int, str)

_ATOM_DIM = 2


class SpaceMismatchError(ValueError):
    """Operands defined on different Hilbert spaces."""


@dataclass(frozen=True)
class HilbertSpace:
    """Truncation bookkeeping for atom ⊗ photon ⊗ phonon.

    Parameters
    ----------
    photon_trunc : int
        Highest retained photon Fock level N_a (levels 0..N_a).
    phonon_trunc : int
        Highest retained phonon Fock level N_b.
    """

    photon_trunc: int
    phonon_trunc: int

    def __post_init__(self):
        if self.photon_trunc < 1 or self.phonon_trunc < 1:
            raise ValueError(
                "truncations must be >= 1, got "
                f"({self.photon_trunc}, {self.phonon_trunc})"
            )

    @property
    def atom_dim(self) -> int:
        return _ATOM_DIM

    @property
    def photon_dim(self) -> int:
        return self.photon_trunc + 1

    @property
    def phonon_dim(self) -> int:
        return self.phonon_trunc + 1

    @property
    def total_dim(self) -> int:
        return _ATOM_DIM * self.photon_dim * self.phonon_dim

    def index_of(self, n_atom: int, n_a: int, n_b: int) -> int:
        """Composite basis index of |n_atom, n_a, n_b> (atom slowest)."""
        if not (0 <= n_atom < _ATOM_DIM):
            raise ValueError(f"atom level {n_atom} out of range")
        if not (0 <= n_a <= self.photon_trunc):
            raise ValueError(f"photon level {n_a} exceeds truncation {self.photon_trunc}")
        if not (0 <= n_b <= self.phonon_trunc):
            raise ValueError(f"phonon level {n_b} exceeds truncation {self.phonon_trunc}")
        return (n_atom * self.photon_dim + n_a) * self.phonon_dim + n_b

    def levels_of(self, index: int) -> tuple:
        """Inverse of :meth:`index_of`; returns (n_atom, n_a, n_b)."""
        if not (0 <= index < self.total_dim):
            raise ValueError(f"index {index} out of range")
        n_b = index % self.phonon_dim
        rest = index // self.phonon_dim
        n_a = rest % self.photon_dim
        n_atom = rest // self.photon_dim
        return n_atom, n_a, n_b

    def boson_numbers(self) -> tuple:
        """Per-basis-state photon and phonon occupation arrays."""
        idx = np.arange(self.total_dim)
        n_b = idx % self.phonon_dim
        n_a = (idx // self.phonon_dim) % self.photon_dim
        return n_a, n_b


def build_space(photon_trunc: int, phonon_trunc: int) -> HilbertSpace:
    """Construct a truncated composite space; rejects truncations < 1."""
    return HilbertSpace(int(photon_trunc), int(phonon_trunc))


@dataclass(frozen=True)
class Operator:
    """Linear operator on a :class:`HilbertSpace`, stored sparse CSR."""

    space: HilbertSpace
    matrix: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = self.matrix
        if m.shape != (self.space.total_dim, self.space.total_dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match space dim {self.space.total_dim}"
            )

    def dag(self) -> "Operator":
        return Operator(self.space, self.matrix.conj().T.tocsr())

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def is_hermitian(self, atol: float = 1e-12) -> bool:
        d = self.matrix - self.matrix.conj().T
        return abs(d).max() <= atol if d.nnz else True

    def __add__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.space, (self.matrix + other.matrix).tocsr())

    def __sub__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.space, (self.matrix - other.matrix).tocsr())

    def __matmul__(self, other: "Operator") -> "Operator":
        _require_same_space(self, other)
        return Operator(self.space, (self.matrix @ other.matrix).tocsr())

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.space, (self.matrix * scalar).tocsr())

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * (-1.0)


@dataclass(frozen=True)
class StateVector:
    """Pure state on a :class:`HilbertSpace`."""

    space: HilbertSpace
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (self.space.total_dim,):
            raise ValueError(
                f"amplitude length {amps.shape} does not match dim {self.space.total_dim}"
            )
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "StateVector":
        n = self.norm()
        if n == 0.0:
            raise ValueError("cannot normalize a zero state")
        return StateVector(self.space, self.amplitudes / n)

    def to_density(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass(frozen=True)
class DensityMatrix:
    """Mixed state on a :class:`HilbertSpace` (dense storage)."""

    space: HilbertSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.space.total_dim, self.space.total_dim):
            raise ValueError(
                f"matrix shape {m.shape} does not match dim {self.space.total_dim}"
            )
        object.__setattr__(self, "matrix", m)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def assert_physical(self, herm_tol=1e-10, trace_tol=1e-8, eig_floor=-1e-8):
        """Raise unless Hermitian, unit-trace and positive within tolerances."""
        herm = np.abs(self.matrix - self.matrix.conj().T).max()
        if herm > herm_tol:
            raise ValueError(f"density matrix not Hermitian: deviation {herm:.2e}")
        tr = abs(self.trace() - 1.0)
        if tr > trace_tol:
            raise ValueError(f"density matrix trace off by {tr:.2e}")
        evals = np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.conj().T))
        if evals.min() < eig_floor:
            raise ValueError(f"density matrix has eigenvalue {evals.min():.2e}")


State = Union[StateVector, DensityMatrix]


def _require_same_space(a, b):
    if a.space != b.space:
        raise SpaceMismatchError(f"space mismatch: {a.space} vs {b.space}")


def _embed(space: HilbertSpace, atom=None, photon=None, phonon=None) -> Operator:
    """Kronecker-embed single-factor operators (identity where omitted)."""
    fa = sp.identity(_ATOM_DIM, format="csr") if atom is None else sp.csr_matrix(atom)
    fp = sp.identity(space.photon_dim, format="csr") if photon is None else sp.csr_matrix(photon)
    fb = sp.identity(space.phonon_dim, format="csr") if phonon is None else sp.csr_matrix(phonon)
    return Operator(space, sp.kron(sp.kron(fa, fp), fb, format="csr"))


def _destroy(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1, format="csr").astype(complex)


def ladder_operator(space: HilbertSpace, mode: str) -> Operator:
    """Annihilation operator of one boson mode, embedded in the full space.

    `mode` is "photon" or "phonon"; matrix elements <n-1|a|n> = sqrt(n).
    """
    if mode == "photon":
        return _embed(space, photon=_destroy(space.photon_dim))
    if mode == "phonon":
        return _embed(space, phonon=_destroy(space.phonon_dim))
    raise ValueError(f"unknown mode {mode!r}; expected 'photon' or 'phonon'")


def number_operator(space: HilbertSpace, mode: str) -> Operator:
    a = ladder_operator(space, mode)
    return a.dag() @ a


_SIGMA = np.array([[0, 1], [0, 0]], dtype=complex)        # |g><e| with g=0, e=1
_SIGMA_Z = np.diag([-1.0, 1.0]).astype(complex)           # |e><e| - |g><g|
# Dressed basis at resonant drive: |+-> = (|g> +- |e>)/sqrt(2).
_PLUS = np.array([1.0, 1.0]) / np.sqrt(2.0)
_MINUS = np.array([1.0, -1.0]) / np.sqrt(2.0)
_SIGMA_DRESSED = np.outer(_MINUS, _PLUS).astype(complex)  # |-><+|
_SIGMA_Z_DRESSED = (np.outer(_PLUS, _PLUS) - np.outer(_MINUS, _MINUS)).astype(complex)

_ATOM_KINDS = {
    "lowering": _SIGMA,
    "sigma_z": _SIGMA_Z,
    "dressed_lowering": _SIGMA_DRESSED,
    "dressed_sigma_z": _SIGMA_Z_DRESSED,
}


def atom_operator(space: HilbertSpace, kind: str) -> Operator:
    """Two-level operator embedded in the full space.

    Kinds: "lowering" (|g><e|), "sigma_z", "dressed_lowering" (|-><+|) and
    "dressed_sigma_z" in the resonant-drive dressed basis |+-> = (|g>+-|e>)/sqrt(2).
    """
    try:
        mat = _ATOM_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown atom operator kind {kind!r}") from None
    return _embed(space, atom=mat)


def identity_operator(space: HilbertSpace) -> Operator:
    return _embed(space)


def basis_state(space: HilbertSpace, n_atom: int, n_a: int, n_b: int) -> StateVector:
    """Bare product state |n_atom, n_a, n_b> (atom level 0=g, 1=e)."""
    amps = np.zeros(space.total_dim, dtype=complex)
    amps[space.index_of(n_atom, n_a, n_b)] = 1.0
    return StateVector(space, amps)


def dressed_state(space: HilbertSpace, n_a: int, n_b: int, sign: str) -> StateVector:
    """Dressed product state |n_a, n_b, +-> with atom part (|g> +- |e>)/sqrt(2)."""
    if sign not in ("+", "-"):
        raise ValueError(f"dressed sign must be '+' or '-', got {sign!r}")
    amps = np.zeros(space.total_dim, dtype=complex)
    s = 1.0 if sign == "+" else -1.0
    amps[space.index_of(0, n_a, n_b)] = 1.0 / np.sqrt(2.0)
    amps[space.index_of(1, n_a, n_b)] = s / np.sqrt(2.0)
    return StateVector(space, amps)


def all_dressed_labels(space: HilbertSpace) -> list:
    """Every (n_a, n_b, sign) label within the truncation, index-ordered."""
    labels = []
    for n_a in range(space.photon_dim):
        for n_b in range(space.phonon_dim):
            for sign in ("+", "-"):
                labels.append((n_a, n_b, sign))
    return labels


def label_key(label: DressedLabel) -> str:
    """Canonical observable name for a dressed population, e.g. 'P_11-'."""
    n_a, n_b, sign = label
    return f"P_{n_a}{n_b}{sign}"


def parse_label(text) -> DressedLabel:
    """Accept (n_a, n_b, sign) sequences or strings like '11-' / 'P_11-'."""
    if isinstance(text, str):
        body = text[2:] if text.startswith("P_") else text
        if len(body) < 3 or body[-1] not in "+-":
            raise ValueError(f"cannot parse dressed label {text!r}")
        digits = body[:-1]
        if len(digits) != 2 or not digits.isdigit():
            raise ValueError(f"cannot parse dressed label {text!r}")
        return int(digits[0]), int(digits[1]), body[-1]
    n_a, n_b, sign = text
    if sign not in ("+", "-"):
        raise ValueError(f"dressed sign must be '+' or '-', got {sign!r}")
    return int(n_a), int(n_b), sign


def expectation(op: Operator, state: State) -> complex:
    """<psi|O|psi> for a state vector, Tr[O rho] for a density matrix."""
    if op.space != state.space:
        raise SpaceMismatchError("operator and state live on different spaces")
    if isinstance(state, StateVector):
        return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes))
    return complex((op.matrix @ state.matrix).diagonal().sum())
