import numpy as np
import pytest
import scipy.sparse as sp

from liebcavity import hierarchy as hy
from liebcavity.meanfield import linear_amplitudes, linear_matrix
from liebcavity.model import SITE_INDEX, SITES, DisorderRealization, ModelParams, resolve

E = np.eye(6, dtype=int)
ZERO = np.zeros(6, dtype=int)


@pytest.mark.parametrize("n_c, t", [(1, 7), (2, 28), (3, 84)])
def test_basis_counts(n_c, t):
    b = hy.enumerate_basis(n_c)
    assert b.t == t
    assert len(b) == t * t


def test_basis_round_trip_and_order():
    b = hy.enumerate_basis(2)
    assert tuple(b.vectors[0]) == (0,) * 6
    assert np.all(np.diff(b.totals) >= 0)
    for pos in range(0, len(b), 37):
        idx = b.multi_index(pos)
        assert b.index(idx) == pos
        assert idx.order == b.order()[pos]
    assert hy.MultiIndex((0,) * 6, (0,) * 6).order == 0


def test_basis_budget():
    with pytest.raises(MemoryError):
        hy.HierarchyBasis(5, max_unknowns=1000)
    with pytest.raises(ValueError):
        hy.HierarchyBasis(0)


def test_up_down_tables():
    b = hy.enumerate_basis(3)
    for s in range(6):
        ok = b.up[s] >= 0
        assert np.array_equal(b.vectors[b.up[s][ok]] - b.vectors[ok], np.tile(E[s], (ok.sum(), 1)))
        assert np.all(b.totals[~ok] == 3)


def _random_hermitian_c(rng, t):
    x = rng.normal(size=(t, t)) + 1j * rng.normal(size=(t, t))
    c = x + x.conj().T
    c[0, 0] = 1.0
    return c


def test_first_moment_equation_sign(rng):
    # d<b1>/dt = (i delta - gamma/2) <b1> + i J (<a1> + <c1> + <a2>), no drive
    lat = resolve(ModelParams(delta=0.7, u=0.0, j=2.0, f=0.3))
    eom = hy.assemble_eom(lat, hy.enumerate_basis(2))
    b = eom.basis
    first = rng.normal(size=6) + 1j * rng.normal(size=6)
    c = np.zeros((b.t, b.t), dtype=complex)
    c[0, 0] = 1.0
    for s in range(6):
        c[0, b.vector_index(E[s])] = first[s]
        c[b.vector_index(E[s]), 0] = np.conj(first[s])
    dc = eom.apply(c)
    ib1 = b.vector_index(E[SITE_INDEX["b1"]])
    a1, b1, c1, a2 = (first[SITE_INDEX[s]] for s in ("a1", "b1", "c1", "a2"))
    expected = (0.7j - 0.5) * b1 + 2.0j * (a1 + c1 + a2)
    assert dc[0, ib1] == pytest.approx(expected, abs=1e-14)
    # and all first moments together reproduce the mean-field linear matrix
    moments = np.array([dc[0, b.vector_index(E[s])] for s in range(6)])
    assert np.allclose(moments, -1j * (linear_matrix(lat) @ first + lat.drive), atol=1e-14)


def test_vacuum_is_stationary_without_drive(default_params):
    eom = hy.assemble_eom(resolve(default_params.replace(f=0.0)), hy.enumerate_basis(3))
    c = np.zeros((eom.basis.t, eom.basis.t), dtype=complex)
    c[0, 0] = 1.0
    assert np.max(np.abs(eom.apply(c))) == 0.0


def test_order_triangular_at_zero_interaction():
    eom = hy.assemble_eom(resolve(ModelParams(u=0.0)), hy.enumerate_basis(3))
    a = sp.coo_matrix(eom.matrix())
    order = eom.basis.order()
    assert np.all(order[a.col] <= order[a.row])


def test_interaction_raises_order(default_lattice):
    eom = hy.assemble_eom(default_lattice, hy.enumerate_basis(2))
    a = sp.coo_matrix(eom.matrix())
    order = eom.basis.order()
    assert np.any(order[a.col] > order[a.row])


def test_matrix_matches_apply(default_lattice, rng):
    eom = hy.assemble_eom(default_lattice, hy.enumerate_basis(2))
    t = eom.basis.t
    c = rng.normal(size=(t, t)) + 1j * rng.normal(size=(t, t))
    assert np.allclose(eom.matrix() @ c.ravel(), eom.apply(c).ravel(), atol=1e-12)


def test_hermitian_symmetry_closure(default_lattice, rng):
    eom = hy.assemble_eom(default_lattice, hy.enumerate_basis(3))
    for _ in range(5):
        c = _random_hermitian_c(rng, eom.basis.t)
        dc = eom.apply(c)
        assert np.max(np.abs(dc - dc.conj().T)) < 1e-12


def test_linear_model_is_coherent(linear_lattice):
    c = hy.solve(linear_lattice, 3)
    alpha = linear_amplitudes(linear_lattice)
    assert np.allclose(c.first_moments(), alpha, atol=1e-12)
    obs = hy.observables(c)
    assert obs["g2_11"] == pytest.approx(1.0, abs=1e-8)
    assert obs["g2_12"] == pytest.approx(1.0, abs=1e-8)
    # a third-order moment factorizes as well
    n = E[SITE_INDEX["c1"]] * 2
    m = E[SITE_INDEX["a1"]] + E[SITE_INDEX["b2"]]
    expected = np.conj(alpha[2]) ** 2 * alpha[0] * alpha[4]
    assert c.moment(n, m) == pytest.approx(expected, abs=1e-12)


def test_solution_container(hierarchy_default):
    c = hierarchy_default
    assert c.values[0, 0] == pytest.approx(1.0, abs=1e-15)
    assert c.hermitian_asymmetry() < 1e-9
    assert c.residual < 1e-9
    assert c.moment(ZERO, ZERO) == pytest.approx(1.0, abs=1e-15)


def test_clean_lattice_symmetry(hierarchy_default):
    obs = hy.observables(hierarchy_default)
    assert obs["n_b1"] == pytest.approx(obs["n_b2"], rel=1e-9)
    assert obs["g2_11"] == pytest.approx(obs["g2_22"], rel=1e-9)
    assert obs["g2_11"] > 1 and obs["g2_12"] > 1
    assert not obs["g2_flag"]


def test_cutoff_convergence(default_lattice, hierarchy_default):
    lo = hy.observables(hierarchy_default)
    hi = hy.observables(hy.solve(default_lattice, 5))
    assert abs(hi["g2_11"] - lo["g2_11"]) / hi["g2_11"] < 0.01


def test_solve_with_convergence(default_lattice):
    out = hy.solve_with_convergence(default_lattice, 3)
    assert out["nc"] == 3 and out["next"]["nc"] == 4
    assert out["convergence_delta"] == pytest.approx(
        abs(out["next"]["g2_11"] - out["g2_11"]) / out["next"]["g2_11"])


def test_direct_matches_iterative(default_lattice):
    eom = hy.assemble_eom(default_lattice, hy.enumerate_basis(2))
    a = hy.steady_state_solve(eom, method="direct")
    b = hy.steady_state_solve(eom, method="iterative")
    assert np.max(np.abs(a.values - b.values)) < 1e-10


def test_g2_needs_second_order(default_lattice):
    with pytest.raises(hy.HierarchyError):
        hy.observables(hy.solve(default_lattice, 1))


def test_g2_flag_without_drive(default_params):
    obs = hy.observables(hy.solve(resolve(default_params.replace(f=0.0)), 2))
    assert obs["g2_flag"] and np.isnan(obs["g2_11"])
    assert obs["n_tot"] == 0.0


def test_disorder_breaks_symmetry(default_params):
    d = DisorderRealization(site_shifts=dict(zip(SITES, [0.1, 0.4, -0.2, 0.0, -0.3, 0.2])),
                            w_freq=0.5)
    obs = hy.observables(hy.solve(resolve(default_params, d), 3))
    assert abs(obs["n_b1"] - obs["n_b2"]) > 1e-6
    assert obs["g2_11"] != pytest.approx(obs["g2_22"], rel=1e-6)


def test_convergence_increments_shrink(default_lattice):
    g = [hy.observables(hy.solve(default_lattice, n))["g2_11"] for n in (3, 4, 5)]
    assert abs(g[2] - g[1]) < abs(g[1] - g[0])
