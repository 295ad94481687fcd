import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triquanta import (
    atom_operator,
    basis_state,
    build_space,
    dressed_state,
    expectation,
    ladder_operator,
    number_operator,
)
from triquanta.hilbert import SpaceMismatchError, all_dressed_labels, label_key, parse_label


def test_build_space_dimensions():
    assert build_space(6, 6).total_dim == 98
    assert build_space(1, 1).total_dim == 8


@pytest.mark.parametrize("photon,phonon", [(0, 3), (3, 0), (-1, 2)])
def test_build_space_rejects_bad_truncation(photon, phonon):
    with pytest.raises(ValueError):
        build_space(photon, phonon)


@given(
    n_atom=st.integers(0, 1),
    n_a=st.integers(0, 5),
    n_b=st.integers(0, 4),
)
def test_index_round_trip(n_atom, n_a, n_b):
    space = build_space(5, 4)
    idx = space.index_of(n_atom, n_a, n_b)
    assert space.levels_of(idx) == (n_atom, n_a, n_b)


def test_index_covers_space_bijectively():
    space = build_space(3, 2)
    seen = {
        space.index_of(at, na, nb)
        for at in range(2)
        for na in range(4)
        for nb in range(3)
    }
    assert seen == set(range(space.total_dim))


def test_photon_ladder_action():
    space = build_space(3, 2)
    a = ladder_operator(space, "photon")
    psi = basis_state(space, 0, 2, 0)
    out = a.matrix @ psi.amplitudes
    expected = np.sqrt(2) * basis_state(space, 0, 1, 0).amplitudes
    np.testing.assert_allclose(out, expected, atol=1e-15)


def test_phonon_annihilates_vacuum():
    space = build_space(2, 2)
    b = ladder_operator(space, "phonon")
    psi = basis_state(space, 0, 0, 0)
    assert np.linalg.norm(b.matrix @ psi.amplitudes) == 0.0


@pytest.mark.parametrize("mode", ["photon", "phonon"])
def test_commutator_is_identity_below_truncation(mode):
    space = build_space(4, 4)
    a = ladder_operator(space, mode)
    comm = (a @ a.dag() - a.dag() @ a).dense()
    trunc = space.photon_trunc if mode == "photon" else space.phonon_trunc
    n_a, n_b = space.boson_numbers()
    level = n_a if mode == "photon" else n_b
    inside = level < trunc
    np.testing.assert_allclose(np.diag(comm)[inside], 1.0, atol=1e-14)
    # truncation artifact is confined to the top level
    assert np.allclose(comm - np.diag(np.diag(comm)), 0.0, atol=1e-14)


def test_operators_on_different_factors_commute():
    space = build_space(3, 3)
    a = ladder_operator(space, "photon")
    b = ladder_operator(space, "phonon")
    s = atom_operator(space, "lowering")
    for left, right in [(a, b), (a, s), (b, s)]:
        d = (left @ right - right @ left).matrix
        assert abs(d).max() == 0.0 if d.nnz else True


def test_atom_lowering():
    space = build_space(1, 1)
    s = atom_operator(space, "lowering")
    out = s.matrix @ basis_state(space, 1, 0, 0).amplitudes
    np.testing.assert_allclose(out, basis_state(space, 0, 0, 0).amplitudes, atol=1e-15)


def test_dressed_sigma_z_eigenstate():
    space = build_space(1, 1)
    sz = atom_operator(space, "dressed_sigma_z")
    plus = dressed_state(space, 0, 0, "+")
    np.testing.assert_allclose(sz.matrix @ plus.amplitudes, plus.amplitudes, atol=1e-15)


def test_dressed_lowering_matches_bare_expansion():
    # |-><+| expanded in the bare atomic basis: (|g>-|e>)(<g|+<e|)/2
    space = build_space(2, 2)
    sm = atom_operator(space, "dressed_lowering").dense()
    g = basis_state(space, 0, 0, 0).amplitudes
    e = basis_state(space, 1, 0, 0).amplitudes
    block = np.outer(g - e, (g + e).conj()) / 2.0
    # same matrix elements on the zero-boson block
    idx = [space.index_of(at, 0, 0) for at in (0, 1)]
    np.testing.assert_allclose(sm[np.ix_(idx, idx)], block[np.ix_(idx, idx)], atol=1e-15)
    # and identity on the boson factors: <g,1,1|sm|e,1,1> = +1/2
    val = basis_state(space, 0, 1, 1).amplitudes.conj() @ sm @ basis_state(space, 1, 1, 1).amplitudes
    assert val == pytest.approx(0.5, abs=1e-15)


def test_dagger_is_involution():
    space = build_space(2, 2)
    a = ladder_operator(space, "photon")
    d = (a.dag().dag() - a).matrix
    assert d.nnz == 0 or abs(d).max() == 0.0


def test_expectation_number_on_fock_state():
    space = build_space(4, 2)
    n = number_operator(space, "photon")
    psi = basis_state(space, 0, 3, 0)
    assert expectation(n, psi) == pytest.approx(3.0, abs=1e-14)


def test_expectation_identity_is_one(random_state):
    from triquanta.hilbert import identity_operator

    space = build_space(3, 3)
    psi = random_state(space)
    assert expectation(identity_operator(space), psi) == pytest.approx(1.0, abs=1e-12)


def test_expectation_superposition():
    # a+a on (|g,0,0> + |g,2,0>)/sqrt(2) -> 1
    space = build_space(3, 1)
    n = number_operator(space, "photon")
    amps = (basis_state(space, 0, 0, 0).amplitudes + basis_state(space, 0, 2, 0).amplitudes)
    from triquanta import StateVector

    psi = StateVector(space, amps / np.sqrt(2))
    assert expectation(n, psi) == pytest.approx(1.0, abs=1e-14)


def test_expectation_density_matrix():
    space = build_space(2, 2)
    rho = basis_state(space, 0, 1, 1).to_density()
    n = number_operator(space, "phonon")
    assert expectation(n, rho) == pytest.approx(1.0, abs=1e-14)


def test_expectation_space_mismatch():
    n = number_operator(build_space(2, 2), "photon")
    psi = basis_state(build_space(3, 2), 0, 0, 0)
    with pytest.raises(SpaceMismatchError):
        expectation(n, psi)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000))
def test_hermitian_expectation_is_real(seed):
    space = build_space(3, 2)
    g = np.random.default_rng(seed)
    amps = g.normal(size=space.total_dim) + 1j * g.normal(size=space.total_dim)
    from triquanta import StateVector

    psi = StateVector(space, amps / np.linalg.norm(amps))
    a = ladder_operator(space, "photon")
    herm = a + a.dag()
    value = expectation(herm, psi)
    assert abs(value.imag) < 1e-12


def test_state_normalization_invariant(random_state):
    space = build_space(3, 3)
    psi = random_state(space, seed=7)
    scaled = psi.amplitudes * 3.7
    from triquanta import StateVector

    renorm = StateVector(space, scaled).normalized()
    assert abs(renorm.norm() - 1.0) < 1e-10


def test_label_helpers():
    assert parse_label("11-") == (1, 1, "-")
    assert parse_label("P_20+") == (2, 0, "+")
    assert parse_label((0, 1, "+")) == (0, 1, "+")
    assert label_key((1, 1, "-")) == "P_11-"
    with pytest.raises(ValueError):
        parse_label("1x-")
    space = build_space(2, 1)
    assert len(all_dressed_labels(space)) == space.total_dim
