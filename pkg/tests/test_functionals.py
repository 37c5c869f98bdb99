import numpy as np
import pytest
from scipy.integrate import quad

from dampwave import functionals as fn
from dampwave import presets
from dampwave.galerkin import PhaseState, Trajectory, simulate
from dampwave.spectral import direct_synthesis


def test_energy_matches_quadrature(default_model):
    d = default_model.domain
    u = np.zeros(32)
    u[:3] = [0.9, -0.3, 0.2]
    v = np.zeros(32)
    v[1] = 0.5
    state = PhaseState.from_arrays(d, u, v)

    def uf(x):
        return direct_synthesis(d, u, [[x]])[0]

    potential = quad(lambda x: uf(x) ** 4 / 4, 0, np.pi, limit=200)[0]
    work = quad(lambda x: 0.5 * np.sqrt(2 / np.pi) * np.sin(x) * uf(x), 0, np.pi)[0]
    kinetic = 0.5 * 0.25
    elastic = 0.5 * (0.81 + 4 * 0.09 + 9 * 0.04)
    assert fn.energy_E(default_model, state) == pytest.approx(
        kinetic + elastic + potential - work, rel=1e-12)
    assert fn.lyapunov(default_model, state) == fn.energy_E(default_model, state)


def test_energy_equality_fourth_order(default_model, default_initial):
    res = [fn.energy_equality_audit(simulate(default_model, default_initial, dt, 2.0, stride=5))
           .max_residual for dt in (4e-3, 2e-3)]
    assert res[0] / res[1] >= 2**3.5


def test_lyapunov_nonincreasing(default_model, default_initial):
    traj = simulate(default_model, default_initial, 1e-3, 3.0, stride=10)
    rep = fn.lyapunov_audit(traj)
    assert rep.passed
    assert rep.tolerance == pytest.approx(1e-8 * (1 + abs(fn.energy_series(traj)[0])))


def test_perturbed_identity_pointwise(default_model, default_initial):
    # central difference of E_alpha against minus the remaining terms
    alpha, h = 0.1, 1e-4
    start = simulate(default_model, default_initial, h, 0.5).final
    seg = simulate(default_model, start, h, 2 * h)
    Ea = fn.perturbed_series(seg, alpha)[0]
    dE = (Ea[2] - Ea[0]) / (2 * h)
    E_a, G_a, N_a, Phi_a = fn.perturbed_functionals(default_model, seg.state(1), alpha)
    assert dE == pytest.approx(-(alpha * E_a + G_a + N_a + Phi_a), abs=1e-6)


def test_perturbed_identity_audit_rejects_alpha(default_model, default_initial):
    traj = simulate(default_model, default_initial, 1e-2, 0.1)
    with pytest.raises(ValueError):
        fn.perturbed_identity_audit(traj, 1.5)


def test_spacetime_norm_of_frozen_state(default_model):
    d = default_model.domain
    u = np.zeros(32)
    u[0], u[1] = 0.6, 0.2
    times = np.linspace(0, 2.0, 5)
    traj = Trajectory(default_model, times, np.tile(u, (5, 1)), np.zeros((5, 32)),
                      np.zeros(5), 0.5)
    k = 1.0

    def uf(x):
        return direct_synthesis(d, u, [[x]])[0]

    lq = quad(lambda x: abs(uf(x)) ** 9, 0, np.pi, limit=200)[0] ** (1 / 9)
    assert fn.spacetime_norm(traj, k) == pytest.approx((2.0 * lq**3) ** (1 / 3), rel=1e-10)
    with pytest.raises(ValueError):
        fn.spacetime_norm(traj, 3)


def test_spacetime_audit_uses_first_horizon(default_model, default_initial):
    rep = fn.spacetime_bound_audit(default_model, default_initial, 2, [1.0, 2.0], dt=2e-3)
    ratios = rep.metadata["ratios"]
    assert rep.max_residual == pytest.approx(max(ratios) / ratios[0])
    assert rep.samples[0][2] == pytest.approx(10 * ratios[0])
    with pytest.raises(ValueError):
        fn.spacetime_bound_audit(default_model, default_initial, 2, [2.0, 1.0])


@pytest.mark.parametrize("eps, k", [(0.0, 1.0), (0.5, 2.0), (2.0, 0.5)])
def test_test_functions(eps, k):
    s = np.array([-1.7, -0.2, 0.3, 2.5])
    h = 1e-6
    fd = (fn.test_function_M(eps, k, s + h) - fn.test_function_M(eps, k, s - h)) / (2 * h)
    np.testing.assert_allclose(fn.test_function_M_prime(eps, k, s), fd, rtol=1e-6)
    for x in (0.0, 0.7, -2.5):
        ref = quad(lambda t: t ** (k / 2) / np.sqrt(1 + eps * t**k), 0, abs(x))[0]
        assert fn.test_function_m(eps, k, x) == pytest.approx(ref, abs=1e-10)


def test_holder_audit_on_smooth_run():
    m = presets.linear_model()
    traj = simulate(m, PhaseState.from_arrays(m.domain, [1.0], [0.0]), 1e-3, 2.0, stride=10)
    rep = fn.holder_modulus_audit(traj, [0.01, 0.02, 0.04])
    assert rep.passed
    with pytest.raises(ValueError):
        fn.holder_modulus_audit(traj, [0.015])
    with pytest.raises(ValueError):
        fn.holder_modulus_audit(traj, [5.0])


def test_audit_report_rows():
    rep = fn.AuditReport("x", [(0.0, 1.0, 2.0)], 1.0, 2.0)
    assert rep.summary_row() == ("x", 1.0, 2.0, "pass")
    assert "pass" in str(rep)
    assert not fn.AuditReport("y", [(0.0, 3.0, 2.0)], 3.0, 2.0).passed
    with pytest.raises(ValueError):
        fn.AuditReport("z", [], 0.0, 1.0)
