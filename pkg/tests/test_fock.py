import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liebcavity import fock
from liebcavity.model import SITE_INDEX, ModelParams, resolve
from liebcavity.singleparticle import diagonalize


@pytest.mark.parametrize("n_max", [0, 1, 2])
def test_basis_size_and_round_trip(n_max):
    b = fock.FockBasis(n_max)
    assert b.dim == (n_max + 1) ** 6
    for i, s in enumerate(b.states):
        assert b.index[tuple(s)] == i
    assert np.array_equal(b.lookup(b.states), np.arange(b.dim))


def test_basis_is_lexicographic():
    b = fock.FockBasis(2)
    assert [tuple(s) for s in b.states] == sorted(tuple(s) for s in b.states)


def test_lookup_outside_basis():
    b = fock.FockBasis(2, max_total=3)
    assert b.lookup(np.array([[3, 0, 0, 0, 0, 0], [1, 1, 1, 1, 0, 0], [-1, 0, 0, 0, 0, 0]])).tolist() \
        == [-1, -1, -1]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_sector_size(n):
    assert fock.SectorBasis(n).dim == comb(n + 5, 5)


def test_two_photon_sector_has_21_states():
    assert fock.SectorBasis(2).dim == 21


def test_total_cap():
    b = fock.FockBasis(3, max_total=3)
    assert b.dim == comb(9, 6)
    assert b.states.sum(axis=1).max() == 3


def test_single_site_ladder():
    b = fock.FockBasis(1)
    a = fock.annihilation("a1", b)
    one = b.ket((1, 0, 0, 0, 0, 0))
    vac = b.ket((0,) * 6)
    assert np.allclose(a @ one, vac)
    assert np.allclose(a @ vac, 0)


def test_number_operator_is_diagonal():
    b = fock.FockBasis(2)
    for s in SITE_INDEX:
        a = fock.annihilation(s, b)
        n = (a.T.conj() @ a).toarray()
        assert np.allclose(n, np.diag(b.states[:, SITE_INDEX[s]]))
        assert np.allclose(fock.number(s, b).toarray(), n)


def test_commutator_deviates_only_on_cutoff():
    b = fock.FockBasis(2)
    a = fock.annihilation("b2", b)
    comm = (a @ a.T.conj() - a.T.conj() @ a).toarray()
    top = b.states[:, SITE_INDEX["b2"]] == 2
    assert np.allclose(comm[~top][:, ~top], np.eye((~top).sum()))
    assert np.allclose(np.diag(comm)[top], -2.0)


def test_hamiltonian_hermitian(default_lattice):
    h = fock.hamiltonian(default_lattice, fock.FockBasis(2))
    assert fock.hermiticity_error(h) < 1e-12


def test_hamiltonian_hermitian_displaced(default_lattice):
    h = fock.hamiltonian(default_lattice, fock.FockBasis(2, max_total=3),
                         displacement=np.linspace(0.1, 0.6, 6) * (1 + 0.5j))
    assert fock.hermiticity_error(h) < 1e-12


def test_one_photon_sector_matches_single_particle():
    lat = resolve(ModelParams(delta=0.6, u=0.0, f=0.0))
    b = fock.SectorBasis(1)
    ev = np.linalg.eigvalsh(fock.hamiltonian(lat, b, include_drive=False).toarray())
    sp = diagonalize(lat).energies
    assert np.allclose(ev, sp - 0.6, atol=1e-12)


def test_decoupled_kerr_cavities():
    lat = resolve(ModelParams(delta=0.4, u=0.3, j=0.0, f=0.0))
    b = fock.FockBasis(2)
    h = fock.hamiltonian(lat, b, include_drive=False)
    n = b.states
    expected = (-0.4 * n + 0.15 * n * (n - 1)).sum(axis=1)
    assert fock.sector_blocks_offdiag(h, b) == 0.0
    assert np.allclose(h.diagonal(), expected)
    assert abs(h - np.diag(expected)).max() < 1e-14


def test_number_conservation_without_drive(default_params):
    lat = resolve(default_params.replace(f=0.0))
    b = fock.FockBasis(2)
    assert fock.sector_blocks_offdiag(fock.hamiltonian(lat, b), b) == 0.0
    assert fock.sector_blocks_offdiag(fock.hamiltonian(resolve(default_params), b), b) > 0


def test_two_photon_spectrum_basics(default_params):
    spec = fock.two_photon_spectrum(default_params)
    assert len(spec.energies) == 21
    assert np.all(np.diff(spec.energies) >= 0)
    v = spec.eigenvectors
    assert np.max(np.abs(v.conj().T @ v - np.eye(21))) < 1e-12


def test_two_photon_noninteracting_pair_sums():
    p = ModelParams(u=0.0, j=3.0)
    e1 = diagonalize(resolve(p)).energies
    sums = np.sort([e1[i] + e1[j] for i, j in itertools.combinations_with_replacement(range(6), 2)])
    assert np.allclose(fock.two_photon_spectrum(p).energies, sums, atol=1e-10)


def test_resonant_cluster_collapses():
    u_grid = [0.2, 0.1, 0.05, 0.02, 1e-4]
    cluster = fock.resonant_cluster(u_grid)
    assert cluster.shape == (5, 5)
    spread = np.max(np.abs(cluster), axis=1)
    assert np.all(np.diff(spread) < 0)
    assert spread[-1] < 1e-3
    # the sixth closest level stays far away
    spec = fock.two_photon_spectrum(ModelParams(u=1e-4))
    sixth = np.sort(np.abs(spec.energies))[5]
    assert sixth > 1.0


def test_reference_state_weights():
    b = fock.SectorBasis(2)
    p1, p2 = fock.psi_double_occupancy(), fock.psi_cell_pairs()
    assert fock._dark_double_weight(p1, b) == pytest.approx(1 / 3, abs=1e-15)
    assert fock._dark_pair_weight(p2, b) == pytest.approx(1 / 3, abs=1e-15)
    assert abs(p1.conj() @ p2) < 1e-15


def test_reference_states_are_near_eigenstates(default_params):
    rows = fock.two_photon_rows(fock.two_photon_spectrum(default_params))
    best1 = max(rows, key=lambda r: r["overlap_psi1"])
    best2 = max(rows, key=lambda r: r["overlap_psi2"])
    assert best1["overlap_psi1"] > 0.999
    assert best2["overlap_psi2"] > 0.999
    # measured energies: the double-occupancy state carries the interaction shift
    assert best1["energy_minus_2wc"] == pytest.approx(default_params.u, abs=1e-8)
    assert best2["energy_minus_2wc"] == pytest.approx(0.0, abs=1e-8)


def test_resonant_state_overlaps_table(default_params):
    rows = fock.resonant_state_overlaps(default_params)
    assert len(rows) == 5
    assert all(abs(r["energy_minus_2wc"]) < 0.2 for r in rows)
    assert {"darksite_weight", "darksite_pair_weight", "overlap_psi1"} <= set(rows[0])


@given(u=st.floats(0, 1), j=st.floats(0.1, 5))
@settings(max_examples=25, deadline=None)
def test_two_photon_trace_identity(u, j):
    # trace of the N=2 block: sum over diagonal elements
    spec = fock.two_photon_spectrum(ModelParams(u=u, j=j))
    # only doubly occupied states carry U, six of them
    assert np.sum(spec.energies) == pytest.approx(6 * u, abs=1e-9)
