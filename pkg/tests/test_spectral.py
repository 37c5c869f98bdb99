import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from dampwave.spectral import (Domain, ModalField, NodalField, coeff_norm, direct_analysis,
                               direct_synthesis, eigenvalues, inner, lebesgue_norm,
                               modal_to_nodal, nodal_to_modal, norm)


def grid_points(domain):
    grids = np.meshgrid(*domain.axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def test_eigenvalues_closed_form_unit_interval():
    d = Domain(1, (np.pi,), 8)
    assert np.array_equal(eigenvalues(d), np.arange(1, 9) ** 2)


def test_eigenvalues_box_lexicographic():
    d = Domain(2, (1.0, 2.0), 3)
    expected = [np.pi**2 * (i**2 + (j / 2.0) ** 2) for i in range(1, 4) for j in range(1, 4)]
    np.testing.assert_allclose(eigenvalues(d), expected, rtol=1e-15)
    assert d.lambda1 == pytest.approx(expected[0], rel=1e-15)


def test_eigenvalues_are_read_only():
    d = Domain(1, (np.pi,), 4)
    with pytest.raises(ValueError):
        d.eigenvalues[0] = 0.0


def test_domain_rejects_bad_input():
    with pytest.raises(ValueError):
        Domain(4, (1.0,) * 4, 4)
    with pytest.raises(ValueError):
        Domain(2, (1.0,), 4)
    with pytest.raises(ValueError):
        Domain(1, (-1.0,), 4)
    with pytest.raises(ValueError):
        Domain(1, (1.0,), 0)


def test_synthesis_matches_direct_reference(domain, rng):
    c = rng.standard_normal(domain.shape)
    fast = modal_to_nodal(ModalField(domain, c)).values.ravel()
    ref = direct_synthesis(domain, c, grid_points(domain))
    np.testing.assert_allclose(fast, ref, atol=1e-12)


def test_analysis_matches_direct_reference(domain, rng):
    vals = rng.standard_normal(domain.grid_shape)
    fast = nodal_to_modal(NodalField(domain, vals)).coeffs
    np.testing.assert_allclose(fast, direct_analysis(domain, vals), atol=1e-12)


@pytest.mark.parametrize("method", ["matrix", "dst"])
def test_round_trip(domain, rng, method):
    c = rng.standard_normal(domain.shape)
    back = nodal_to_modal(modal_to_nodal(ModalField(domain, c), method), method=method)
    assert np.max(np.abs(back.coeffs - c)) < 1e-12


def test_dst_path_agrees_with_matrix_path(domain, rng):
    c = rng.standard_normal(domain.shape)
    a = modal_to_nodal(ModalField(domain, c), "matrix").values
    b = modal_to_nodal(ModalField(domain, c), "dst").values
    np.testing.assert_allclose(a, b, atol=1e-12)
    vals = rng.standard_normal(domain.grid_shape)
    np.testing.assert_allclose(nodal_to_modal(NodalField(domain, vals), method="dst").coeffs,
                               nodal_to_modal(NodalField(domain, vals)).coeffs, atol=1e-12)


def test_truncation_zeroes_high_modes():
    d = Domain(2, (1.0, 1.0), 6)
    c = np.ones(d.shape)
    out = nodal_to_modal(modal_to_nodal(ModalField(d, c)), n_keep=3).coeffs
    assert np.all(out[:3, :3] == pytest.approx(1.0, abs=1e-12))
    assert np.all(out[3:, :] == 0.0) and np.all(out[:, 3:] == 0.0)
    with pytest.raises(ValueError):
        nodal_to_modal(modal_to_nodal(ModalField(d, c)), n_keep=7)


def test_parseval(domain, rng):
    c = rng.standard_normal(domain.shape)
    vals = domain.to_nodal(c)
    assert domain.integrate(vals**2) == pytest.approx(np.sum(c**2), rel=1e-10)
    assert lebesgue_norm(ModalField(domain, c), 2) == pytest.approx(norm(ModalField(domain, c)),
                                                                     rel=1e-10)


def test_sin_cubed_projection():
    # u = a e_1 on (0, pi): u^3 = a^3 (2/pi)^(3/2) (3 sin x - sin 3x) / 4
    d = Domain(1, (np.pi,), 8)
    a = 0.7
    u = ModalField.mode(d, 1, a)
    cube = NodalField(d, modal_to_nodal(u).values ** 3)
    c = nodal_to_modal(cube).coeffs
    expected = np.zeros(8)
    expected[0] = 3 * a**3 / (2 * np.pi)
    expected[2] = -(a**3) / (2 * np.pi)
    np.testing.assert_allclose(c, expected, atol=1e-10)


def test_norms_against_quadrature():
    d = Domain(1, (np.pi,), 5)
    c = np.array([1.0, -0.5, 0.25, 0.0, 0.1])
    f = ModalField(d, c)

    def u(x):
        return direct_synthesis(d, c, [[x]])[0]

    def ux(x, h=1e-5):
        return (u(x + h) - u(x - h)) / (2 * h)

    l2 = np.sqrt(quad(lambda x: u(x) ** 2, 0, np.pi, limit=200)[0])
    h1 = np.sqrt(quad(lambda x: ux(x) ** 2, 0, np.pi, limit=200)[0])
    assert norm(f, "L2") == pytest.approx(l2, rel=1e-10)
    assert norm(f, "H1") == pytest.approx(h1, rel=1e-7)
    assert norm(f, "H2") == pytest.approx(np.sqrt(np.sum((np.arange(1, 6) ** 2 * c) ** 2)))
    assert norm(f, "Hminus1") == pytest.approx(np.sqrt(np.sum(c**2 / np.arange(1, 6) ** 2)))
    l6 = quad(lambda x: u(x) ** 6, 0, np.pi, limit=200)[0] ** (1 / 6)
    assert lebesgue_norm(f, 6) == pytest.approx(l6, rel=1e-10)
    with pytest.raises(ValueError):
        norm(f, "H3")


def test_modal_field_validation_and_arithmetic():
    d = Domain(1, (1.0,), 3)
    with pytest.raises(ValueError):
        ModalField(d, np.zeros(4))
    with pytest.raises(ValueError):
        ModalField(d, [np.nan, 0, 0])
    a = ModalField(d, [1.0, 2.0, 3.0])
    b = ModalField.mode(d, 2, 5.0)
    np.testing.assert_array_equal((a + b).coeffs, [1, 7, 3])
    np.testing.assert_array_equal((2 * a - b).coeffs, [2, -1, 6])
    assert inner(a, b) == 10.0
    assert coeff_norm(d, a.coeffs, "L2") == pytest.approx(np.sqrt(14))


@settings(max_examples=30, deadline=None)
@given(dim=st.integers(1, 3), modes=st.integers(1, 6),
       seed=st.integers(0, 2**32 - 1), length=st.floats(0.1, 10.0))
def test_round_trip_and_parseval_property(dim, modes, seed, length):
    d = Domain(dim, (length,) * dim, modes)
    c = np.random.default_rng(seed).standard_normal(d.shape)
    vals = d.to_nodal(c)
    np.testing.assert_allclose(d.to_modal(vals), c, atol=1e-12 * (1 + np.abs(c).max()))
    assert d.integrate(vals**2) == pytest.approx(np.sum(c**2), rel=1e-10)
