"""Energy-type functionals and the audits built on them.

Every "<= C(...)" estimate with an unknown constant is audited as a
boundedness-of-ratio sweep: the ratio must stay within ``factor`` times its
value at the smallest scale.  Identity audits integrate both sides between
snapshots (exact difference of the functional, trapezoid on the rest).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import model as mdl
from .spectral import nodal_lebesgue_norm

__all__ = [
    "AuditReport",
    "energy_E",
    "energy_series",
    "energy_equality_audit",
    "perturbed_functionals",
    "perturbed_series",
    "perturbed_identity_audit",
    "spacetime_norm",
    "spacetime_bound_audit",
    "test_function_M",
    "test_function_M_prime",
    "test_function_m",
    "holder_modulus_audit",
    "lyapunov",
    "lyapunov_audit",
]


@dataclass
class AuditReport:
    """Outcome of one diagnostic.

    ``samples`` holds ``(t, measured, bound)`` rows; ``t`` is whatever the
    audit sweeps over (time, horizon, lag, perturbation size, ...).
    """

    name: str
    samples: list
    max_residual: float
    tolerance: float
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.samples:
            raise ValueError("an audit needs at least one sample")
        self.max_residual = float(self.max_residual)
        self.tolerance = float(self.tolerance)

    @property
    def verdict(self):
        return bool(self.max_residual <= self.tolerance)

    @property
    def passed(self):
        return self.verdict

    def summary_row(self):
        return (self.name, self.max_residual, self.tolerance,
                "pass" if self.verdict else "fail")

    def __str__(self):
        return (f"{self.name}: max_residual={self.max_residual:.3e} "
                f"tolerance={self.tolerance:.3e} -> {'pass' if self.verdict else 'fail'}")


def _ratio_report(name, params, ratios, factor, **meta):
    """Boundedness sweep: every ratio within ``factor`` of the first one."""
    ratios = np.asarray(ratios, dtype=float)
    ref = ratios[0]
    if ref > 0:
        worst = float(np.max(ratios) / ref)
    else:
        worst = 0.0 if np.all(ratios == 0) else math.inf
    samples = [(float(p), float(r), float(factor * ref)) for p, r in zip(params, ratios)]
    return AuditReport(name, samples, worst, factor, dict(meta, ratios=ratios.tolist()))


# -- energy ------------------------------------------------------------------

def _axes(domain):
    return tuple(range(1, domain.dim + 1))


def _energy_arrays(model, u, v, un=None):
    """E for stacks of coefficients (leading axis = snapshot)."""
    d = model.domain
    ax = _axes(d)
    un = d.to_nodal_batch(u) if un is None else un
    kinetic = 0.5 * np.sum(v * v, axis=ax)
    elastic = 0.5 * np.sum(d.eigenvalues * u * u, axis=ax)
    potential = d.cell_volume * np.sum(mdl.F_primitive(model.nonlinearity, un), axis=ax)
    work = np.sum(model.forcing * u, axis=ax)
    return kinetic + elastic + potential - work


def energy_E(model, state):
    """E = 1/2||u_t||^2 + 1/2||grad u||^2 + int F(u) - int phi u."""
    u = state.u.coeffs[None]
    v = state.v.coeffs[None]
    return float(_energy_arrays(model, u, v)[0])


def lyapunov(model, state):
    """The Lyapunov functional; it is the energy."""
    return energy_E(model, state)


def energy_series(traj):
    return _energy_arrays(traj.model, traj.u, traj.v)


def energy_equality_audit(traj, tolerance=1e-6):
    """Residual |E(t) - E(0) + D(t)| along a trajectory."""
    E = energy_series(traj)
    res = np.abs(E - E[0] + traj.dissipation_cum)
    samples = [(float(t), float(r), tolerance) for t, r in zip(traj.times, res)]
    return AuditReport("energy_equality", samples, float(np.max(res)), tolerance,
                       {"dt": traj.dt, "N": traj.model.domain.modes,
                        "energy": E, "residual": res})


def lyapunov_audit(traj, rel_tol=1e-8):
    """Largest one-snapshot increase of E; tolerance rel_tol * (1 + |E(0)|)."""
    E = energy_series(traj)
    inc = np.diff(E) if len(E) > 1 else np.zeros(1)
    tol = rel_tol * (1.0 + abs(E[0]))
    samples = [(float(t), float(x), tol) for t, x in zip(traj.times[1:], inc)] or [(0.0, 0.0, tol)]
    return AuditReport("lyapunov_monotone", samples, max(0.0, float(np.max(inc))), tol,
                       {"dt": traj.dt})


# -- perturbed functionals ---------------------------------------------------

def _perturbed_arrays(model, u, v, alpha):
    d = model.domain
    ax = _axes(d)
    un = d.to_nodal_batch(u)
    vn = d.to_nodal_batch(v)
    nl = model.nonlinearity
    E = _energy_arrays(model, u, v, un)
    uv = np.sum(u * v, axis=ax)
    sig = mdl.sigma_eval(model.damping, un)
    vol = d.cell_volume
    E_a = E + alpha * uv
    G_a = vol * np.sum(sig * vn * vn + alpha * sig * vn * un, axis=ax) \
        - 1.5 * alpha * np.sum(v * v, axis=ax)
    N_a = 0.5 * alpha * np.sum(d.eigenvalues * u * u, axis=ax) - alpha**2 * uv
    Phi_a = alpha * vol * np.sum(mdl.f_eval(nl, un) * un - mdl.F_primitive(nl, un), axis=ax)
    return E_a, G_a, N_a, Phi_a


def perturbed_functionals(model, state, alpha):
    """(E_alpha, G_alpha, N_alpha, Phi_alpha) at one state."""
    out = _perturbed_arrays(model, state.u.coeffs[None], state.v.coeffs[None], alpha)
    return tuple(float(x[0]) for x in out)


def perturbed_series(traj, alpha):
    return _perturbed_arrays(traj.model, traj.u, traj.v, alpha)


def _cumtrapz(t, y):
    out = np.zeros_like(y)
    if len(y) > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def perturbed_identity_audit(traj, alpha, tolerance=1e-5):
    """Integrated form of d/dt E_a + a E_a + G_a + N_a + Phi_a = 0."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    E_a, G_a, N_a, Phi_a = perturbed_series(traj, alpha)
    rest = alpha * E_a + G_a + N_a + Phi_a
    res = np.abs(E_a - E_a[0] + _cumtrapz(traj.times, rest))
    samples = [(float(t), float(r), tolerance) for t, r in zip(traj.times, res)]
    return AuditReport("perturbed_identity", samples, float(np.max(res)), tolerance,
                       {"alpha": alpha, "dt": traj.dt, "N": traj.model.domain.modes})


# -- space-time estimate -----------------------------------------------------

def _lebesgue_series(traj, q):
    d = traj.model.domain
    un = d.to_nodal_batch(traj.u)
    return np.array([nodal_lebesgue_norm(d, x, q) for x in un])


def spacetime_norm(traj, k):
    """||u||_{L^{k+2}(0,T; L^{3k+6})} by trapezoid in time."""
    if not 0 <= k <= 2:
        raise ValueError("k must lie in [0, 2]")
    q_time, q_space = k + 2.0, 3.0 * k + 6.0
    vals = _lebesgue_series(traj, q_space) ** q_time
    integral = _cumtrapz(traj.times, vals)[-1]
    return float(integral ** (1.0 / q_time))


def spacetime_bound_audit(model, initial, k, horizons, dt=1e-3, factor=10.0, traj=None):
    """Ratio (int_0^T ||u||_{3k+6}^{k+2}) / (R^4 T + R^5) over nested horizons.

    R = sup_t (||u||_6 + ||u_t||) + int_0^T int sigma(u) u_t^2 + 1, measured on
    the run itself.  One run to the largest horizon serves every horizon.
    """
    from .galerkin import simulate

    horizons = [float(T) for T in horizons]
    if any(b <= a for a, b in zip(horizons, horizons[1:])):
        raise ValueError("horizons must be increasing")
    if traj is None:
        traj = simulate(model, initial, dt, horizons[-1])
    t = traj.times - traj.times[0]
    q_time, q_space = k + 2.0, 3.0 * k + 6.0
    integrand = _lebesgue_series(traj, q_space) ** q_time
    cum = _cumtrapz(t, integrand)
    sup_part = np.maximum.accumulate(
        _lebesgue_series(traj, 6.0)
        + np.sqrt(np.sum(traj.v**2, axis=_axes(model.domain))))
    ratios, Rs = [], []
    for T in horizons:
        j = int(np.searchsorted(t, T - 1e-9 * max(1.0, T)))
        R = sup_part[j] + traj.dissipation_cum[j] + 1.0
        Rs.append(float(R))
        ratios.append(cum[j] / (R**4 * T + R**5))
    rep = _ratio_report("spacetime_bound", horizons, ratios, factor, k=k, R=Rs)
    return rep


# -- test functions ----------------------------------------------------------

def test_function_M(eps, k, s):
    """M_eps(s) = |s|^k s / (1 + eps |s|^k)."""
    s = np.asarray(s, dtype=float)
    a = np.abs(s) ** k
    return a * s / (1.0 + eps * a)


def test_function_M_prime(eps, k, s):
    s = np.asarray(s, dtype=float)
    a = np.abs(s) ** k
    return (k + 1.0 + eps * a) / (1.0 + eps * a) ** 2 * a


def _adaptive_simpson(fn, a, b, tol, max_depth=60):
    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(lo, hi, fa, fm, fb, whole, tol, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = fn(lm), fn(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * tol:
            return left + right + delta / 15.0
        return (recurse(lo, mid, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(mid, hi, fm, frm, fb, right, 0.5 * tol, depth - 1))

    fa, fb, fm = fn(a), fn(b), fn(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


def test_function_m(eps, k, s, tol=1e-12):
    """m_eps(s) = int_0^{|s|} t^{k/2} / sqrt(1 + eps t^k) dt.

    Adaptive Simpson to absolute tolerance ``tol``; closed form when eps = 0.
    """
    x = abs(float(s))
    if x == 0.0:
        return 0.0
    if eps == 0.0:
        return 2.0 / (k + 2.0) * x ** ((k + 2.0) / 2.0)
    return _adaptive_simpson(lambda t: t ** (0.5 * k) / math.sqrt(1.0 + eps * t**k),
                             0.0, x, tol)


# -- time-continuity moduli --------------------------------------------------

def holder_modulus_audit(traj, lags, factor=10.0):
    """Lipschitz modulus of u in L2 and Holder-1/2 modulus of u_t in H^-1.

    For each lag the measured quantities are
    sup_t ||u_t(t+lag) - u_t(t)||_{H^-1} / (lag + lag^1/2) and
    sup_t ||u(t+lag) - u(t)|| / lag; both must stay within ``factor`` of
    their value at the smallest lag.
    """
    lags = sorted(float(x) for x in lags)
    if not lags or lags[0] <= 0:
        raise ValueError("lags must be positive")
    d = traj.model.domain
    ax = _axes(d)
    spacing = float(np.median(np.diff(traj.times)))
    if lags[-1] > traj.times[-1] - traj.times[0] + 1e-12:
        raise ValueError("lags must lie within the trajectory span")
    holder, lip = [], []
    for lag in lags:
        j = int(round(lag / spacing))
        if j < 1 or abs(j * spacing - lag) > 1e-6 * max(lag, spacing):
            raise ValueError(f"lag {lag} is not a multiple of the snapshot spacing {spacing}")
        dv = traj.v[j:] - traj.v[:-j]
        du = traj.u[j:] - traj.u[:-j]
        h = np.sqrt(np.sum(dv**2 / d.eigenvalues, axis=ax)).max()
        l2 = np.sqrt(np.sum(du**2, axis=ax)).max()
        holder.append(h / (lag + math.sqrt(lag)))
        lip.append(l2 / lag)
    # order from smallest lag; normalize each series by its reference value
    rh = _ratio_report("holder", lags, holder, factor)
    rl = _ratio_report("lipschitz", lags, lip, factor)
    worst = max(rh.max_residual, rl.max_residual)
    samples = [(lag, max(a, b), factor) for (lag, a, _), (_, b, _) in
               zip(_normalized(rh), _normalized(rl))]
    return AuditReport("holder_modulus", samples, worst, factor,
                       {"holder": holder, "lipschitz": lip, "lags": lags})


def _normalized(rep):
    ref = rep.samples[0][1]
    return [(t, (m / ref) if ref > 0 else 0.0, b) for t, m, b in rep.samples]


# keep pytest from collecting these when imported into test modules
for _fn in (test_function_M, test_function_M_prime, test_function_m):
    _fn.__test__ = False
