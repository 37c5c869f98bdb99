"""Multi-run experiment drivers.

Equilibria by Newton-CG, continuous dependence on initial data, the
absorbing-set sweep, the cut-off decomposition u = w_n + v_n + ubar with its
two lemma audits, the H^2-level identity audit and Galerkin refinement.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import model as mdl
from .errors import IndefiniteJacobian, NoConvergence, PlateauTooNarrow
from .functionals import AuditReport, _cumtrapz, lyapunov_audit
from .galerkin import PhaseState, _rhs, resize_coeffs, simulate
from .spectral import ModalField, coeff_norm

__all__ = [
    "Equilibrium",
    "DecompositionRun",
    "solve_equilibrium",
    "random_direction",
    "random_initial",
    "continuous_dependence",
    "dissipative_sweep",
    "decompose",
    "lemma53_audit",
    "lemma54_runs",
    "lemma54_audit",
    "strong_audit",
    "galerkin_convergence",
]

log = logging.getLogger(__name__)


def _agreement_report(name, params, values, factor, floor=0.0, **meta):
    """Pass iff max(values) <= factor * max(min(values), floor)."""
    values = np.asarray(values, dtype=float)
    hi, lo = float(values.max()), max(float(values.min()), floor)
    if hi == 0.0:
        spread = 0.0
    elif lo == 0.0:
        spread = np.inf
    else:
        spread = hi / lo
    samples = [(float(p), float(x), float(factor * lo)) for p, x in zip(params, values)]
    return AuditReport(name, samples, spread, factor, dict(meta, values=values.tolist()))


# -- equilibria --------------------------------------------------------------

@dataclass
class Equilibrium:
    ubar: ModalField
    residual: float
    newton_iters: int
    v_norm: float
    history: list = field(default_factory=list)


def _residual(model, a):
    d = model.domain
    r = d.eigenvalues * a - model.forcing
    if not model.nonlinearity.is_zero:
        r = r + d.to_modal(mdl.f_eval(model.nonlinearity, d.to_nodal(a)))
    return r


def solve_equilibrium(model, guess=None, tol=1e-10, max_iters=20):
    """Newton iteration for lambda_i a_i + (P f(u))_i = phi_i.

    Each Newton system ``(Lambda + P f'(u) .) delta = -r`` is solved
    matrix-free by conjugate gradients; the operator is symmetric and is
    positive definite as long as ``f' > -lambda_1`` on the grid.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    d = model.domain
    nl = model.nonlinearity
    a = d.zeros() if guess is None else np.array(
        guess.coeffs if isinstance(guess, ModalField) else guess, dtype=float).reshape(d.shape)
    lam = d.eigenvalues
    n = d.size
    history = []
    for it in range(max_iters + 1):
        r = _residual(model, a)
        res = float(np.linalg.norm(r))
        history.append(res)
        if res <= tol:
            return Equilibrium(ModalField(d, a), res, it, coeff_norm(d, a, "H2"), history)
        if it == max_iters:
            break
        fp = mdl.f_prime(nl, d.to_nodal(a))
        if fp.min() <= -d.lambda1:
            raise IndefiniteJacobian(
                f"f'(u) = {fp.min():.4g} <= -lambda_1 = {-d.lambda1:.4g} on the grid")

        def matvec(x, fp=fp):
            x = x.reshape(d.shape)
            return (lam * x + d.to_modal(fp * d.to_nodal(x))).ravel()

        op = LinearOperator((n, n), matvec=matvec, dtype=float)
        delta, info = cg(op, -r.ravel(), rtol=1e-14, atol=0.0, maxiter=20 * n)
        if info < 0:
            raise NoConvergence("inner CG solve broke down")
        a = a + delta.reshape(d.shape)
    raise NoConvergence(f"Newton did not reach {tol:g} in {max_iters} iterations "
                        f"(residual {history[-1]:.3e})")


# -- random data -------------------------------------------------------------

def random_direction(domain, seed=0):
    """Unit phase-space direction with envelope a_i ~ N(0,1) / lambda_i."""
    rng = np.random.default_rng(seed)
    lam = domain.eigenvalues
    u = rng.standard_normal(domain.shape) / lam
    v = rng.standard_normal(domain.shape) / lam
    scale = np.hypot(coeff_norm(domain, u, "H1"), coeff_norm(domain, v, "L2"))
    return u / scale, v / scale


def random_initial(domain, radius, seed=0, center=None):
    """Random phase state at H1 x L2 distance ``radius`` from ``center``."""
    du, dv = random_direction(domain, seed)
    u = radius * du
    v = radius * dv
    if center is not None:
        u = u + center.u.coeffs
        v = v + center.v.coeffs
    return PhaseState.from_arrays(domain, u, v)


# -- continuous dependence ---------------------------------------------------

def _perturbed(initial, delta, seed):
    du, dv = random_direction(initial.domain, seed)
    return PhaseState.from_arrays(initial.domain, initial.u.coeffs + delta * du,
                                  initial.v.coeffs + delta * dv, initial.t)


def difference_sup(model, initial, delta, T, dt=1e-3, seed=0, base=None):
    """sup_{t <= T} ||u^1(t) - u^2(t)|| for data perturbed by ``delta``."""
    base = simulate(model, initial, dt, T) if base is None else base
    other = simulate(model, _perturbed(initial, delta, seed), dt, T)
    ax = tuple(range(1, model.domain.dim + 1))
    return float(np.sqrt(np.sum((base.u - other.u) ** 2, axis=ax)).max())


def continuous_dependence(model, initial, perturb_sizes, T, dt=1e-3, seed=0, factor=2.0):
    """sup_t ||u^1 - u^2|| / delta must agree across perturbation sizes."""
    sizes = [float(x) for x in perturb_sizes]
    if any(x <= 0 for x in sizes):
        raise ValueError("perturbation sizes must be positive")
    base = simulate(model, initial, dt, T)
    ratios = [difference_sup(model, initial, dlt, T, dt, seed, base) / dlt for dlt in sizes]
    return _agreement_report("continuous_dependence", sizes, ratios, factor, T=T, dt=dt)


# -- absorbing-set sweep -----------------------------------------------------

def dissipative_sweep(model, radii, T, samples_per_radius=1, dt=1e-3, seed=0,
                      factor=2.0, floor=1e-6, stride=10, workers=None, on_run=None):
    """Tail phase-space norm sup_{[T/2, T]} ||xi(t)|| for random data of each radius.

    The tails must agree within ``factor`` (tails below ``floor`` count as
    ``floor``).  Runs are independent and fan out over a thread pool;
    ``on_run(radius, seed, traj)`` is called inside the worker.
    """
    radii = [float(r) for r in radii]
    if any(r < 0 for r in radii):
        raise ValueError("radii must be non-negative")
    jobs = [(R, seed + 1000 * i + s) for i, R in enumerate(radii)
            for s in range(samples_per_radius)]

    def run(job):
        R, sd = job
        traj = simulate(model, random_initial(model.domain, R, sd), dt, T, stride=stride)
        if on_run is not None:
            on_run(R, sd, traj)
        norms = traj.energy_norms()
        tail = float(norms[traj.times >= traj.times[0] + 0.5 * T - 1e-12].max())
        return tail, traj.times, norms, lyapunov_audit(traj)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(run, jobs))
    tails = np.array([r[0] for r in results]).reshape(len(radii), samples_per_radius)
    per_radius = tails.max(axis=1)
    rep = _agreement_report("dissipative_sweep", radii, per_radius, factor, floor, T=T)
    rep.metadata["series"] = [(job[0], r[1], r[2]) for job, r in zip(jobs, results)]
    rep.metadata["lyapunov"] = [r[3] for r in results]
    return rep


# -- cut-off decomposition ---------------------------------------------------

@dataclass
class DecompositionRun:
    n: int
    gamma: float
    t_i: float
    times: np.ndarray
    u: np.ndarray
    ut: np.ndarray
    w: np.ndarray
    wt: np.ndarray
    v: np.ndarray
    vt: np.ndarray
    equilibrium: Equilibrium
    reconstruction_residual: np.ndarray
    lemma53_ratio: np.ndarray
    vn_energy: np.ndarray
    offset: float = float("nan")


class _Decomposition:
    """Right-hand sides of the w_n and v_n equations for a given driver u."""

    def __init__(self, model, n, gamma, ubar):
        self.model = model
        self.d = model.domain
        self.n = n
        self.gamma = gamma
        self.nl = model.nonlinearity
        self.K = self.nl.K
        self.f_ubar = self.d.to_modal(mdl.f_eval(self.nl, self.d.to_nodal(ubar)))

    def wv(self, u, ut, w, wt, v, vt):
        d, nl, n = self.d, self.nl, self.n
        lam = d.eigenvalues
        un = d.to_nodal(u)
        gn = d.to_modal(mdl.cutoff_g(n, nl, un))
        g = d.to_modal(mdl.g_eval(nl, un))
        damping = d.to_modal(mdl.sigma_eval(self.model.damping, un) * d.to_nodal(ut))
        wtt = -self.gamma * wt - lam * w - gn + self.f_ubar + self.K * u
        vtt = -damping + self.gamma * wt - lam * v - g + gn
        return wt, wtt, vt, vtt


def _rk4_tuple(f, y, dt):
    k1 = f(*y)
    k2 = f(*(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(*(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(*(a + dt * b for a, b in zip(y, k3)))
    return tuple(a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def decompose(model, initial, n, equilibrium=None, T=10.0, dt=1e-3, gamma=None,
              stride=1, mode="coupled", t_i=None):
    """Split u = w_n + v_n + ubar along a run started from ``initial``.

    When ``t_i`` is later than ``initial.t`` the full equation is first run
    up to ``t_i`` and the split starts there, over ``[t_i, t_i + T]``.

    ``mode="coupled"`` integrates u, w_n, v_n as one system (reference);
    ``mode="sequential"`` integrates u first and drives w_n, v_n with cubic
    Hermite interpolation of (u, u_t) between micro-steps.
    """
    damp = model.damping
    if damp.family != "plateau":
        raise ValueError("decomposition needs plateau damping")
    if damp.l < n:
        raise PlateauTooNarrow(f"plateau half-width l={damp.l} is below cut-off n={n}")
    gamma = damp.gamma if gamma is None else float(gamma)
    eq = solve_equilibrium(model) if equilibrium is None else equilibrium
    d = model.domain
    ubar = eq.ubar.coeffs
    sysw = _Decomposition(model, n, gamma, ubar)
    if t_i is not None and t_i > initial.t:
        initial = simulate(model, initial, dt, t_i - initial.t, stride=10**9).final
    steps = max(1, int(round(T / dt)))
    dt = T / steps
    u0, ut0 = initial.u.coeffs.copy(), initial.v.coeffs.copy()
    y = (u0, ut0, d.zeros(), d.zeros(), u0 - ubar, ut0.copy())

    def full(u, ut, w, wt, v, vt):
        du, dut, _ = _rhs(model, u, ut)
        return (du, dut) + sysw.wv(u, ut, w, wt, v, vt)

    keep = [0]
    states = [y]
    if mode == "coupled":
        for i in range(1, steps + 1):
            y = _rk4_tuple(full, y, dt)
            if i % stride == 0 or i == steps:
                keep.append(i)
                states.append(y)
    elif mode == "sequential":
        traj = simulate(model, initial, dt, T, stride=1)
        acc = np.array([_rhs(model, a, b)[1] for a, b in zip(traj.u, traj.v)])
        wv = y[2:]
        for i in range(1, steps + 1):
            a, b = traj.u[i - 1], traj.u[i]
            at, bt = traj.v[i - 1], traj.v[i]
            mid_u = 0.5 * (a + b) + dt / 8.0 * (at - bt)
            mid_ut = 0.5 * (at + bt) + dt / 8.0 * (acc[i - 1] - acc[i])
            drivers = [(a, at), (mid_u, mid_ut), (mid_u, mid_ut), (b, bt)]
            wv = _rk4_driven(sysw, drivers, wv, dt)
            if i % stride == 0 or i == steps:
                keep.append(i)
                states.append((b, bt) + wv)
    else:
        raise ValueError(f"mode must be 'coupled' or 'sequential', got {mode!r}")

    arr = [np.array([s[j] for s in states]) for j in range(6)]
    U, UT, W, WT, V, VT = arr
    ax = tuple(range(1, d.dim + 1))
    lam = d.eigenvalues
    recon = np.sqrt(np.sum(lam * (U - W - V - ubar) ** 2, axis=ax))
    num = np.sqrt(np.sum(lam * WT**2, axis=ax)) + np.sqrt(np.sum(lam**2 * W**2, axis=ax))
    den = n**2 * np.sqrt(np.sum(lam * V**2, axis=ax)) + 1.0
    energy_v = np.sum(VT**2, axis=ax) + np.sum(lam * V**2, axis=ax)
    times = initial.t + dt * np.array(keep, dtype=float)
    return DecompositionRun(n, gamma, float(initial.t), times, U, UT, W, WT, V, VT, eq,
                            recon, num / den, energy_v)


def _rk4_driven(sysw, drivers, y, dt):
    """RK4 for (w, wt, v, vt) with prescribed driver values at the four stages."""
    def f(k, y):
        return sysw.wv(*drivers[k], *y)

    k1 = f(0, y)
    k2 = f(1, tuple(a + 0.5 * dt * b for a, b in zip(y, k1)))
    k3 = f(2, tuple(a + 0.5 * dt * b for a, b in zip(y, k2)))
    k4 = f(3, tuple(a + dt * b for a, b in zip(y, k3)))
    return tuple(a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                 for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))


def reconstruction_audit(run, tolerance=1e-6):
    res = run.reconstruction_residual
    samples = [(float(t), float(r), tolerance) for t, r in zip(run.times, res)]
    return AuditReport("reconstruction", samples, float(res.max()), tolerance, {"n": run.n})


def lemma53_audit(runs, bound=10.0):
    """H^2 bound on w_n relative to n^2 ||grad v_n||.

    A single run passes iff sup_t ratio <= ``bound``.  A sequence of runs
    (different n) passes iff the sup ratios agree within a factor ``bound``.
    """
    if isinstance(runs, DecompositionRun):
        sup = float(runs.lemma53_ratio.max())
        samples = [(float(t), float(r), bound) for t, r in zip(runs.times, runs.lemma53_ratio)]
        return AuditReport("lemma53", samples, sup, bound, {"n": runs.n})
    sups = [float(r.lemma53_ratio.max()) for r in runs]
    return _agreement_report("lemma53", [r.n for r in runs], sups, bound)


def lemma54_runs(model, equilibrium, offsets, n, T=10.0, dt=1e-3, seed=0, stride=10):
    """Decomposition runs started at ``ubar + offset * direction``."""
    center = PhaseState.from_arrays(model.domain, equilibrium.ubar.coeffs)
    out = []
    for off in offsets:
        run = decompose(model, random_initial(model.domain, off, seed, center), n,
                        equilibrium, T, dt, stride=stride)
        run.offset = float(off)
        out.append(run)
    return out


def lemma54_audit(runs, factor=3.0):
    """sup_t ||v_n||_H^2 must shrink with the offset and scale like offset^2.

    Passes iff the sups decrease strictly with the offset and the ratios
    sup / offset^2 agree within ``factor`` (quadratic extrapolation to 0).
    """
    runs = sorted(runs, key=lambda r: -r.offset)
    offsets = [r.offset for r in runs]
    sups = np.array([float(r.vn_energy.max()) for r in runs])
    scaled = sups / np.square(offsets)
    rep = _agreement_report("lemma54", offsets, scaled, factor, sups=sups.tolist())
    if len(sups) > 1 and not np.all(np.diff(sups) < 0):
        rep.max_residual = np.inf
    return rep


# -- strong-solution identity ------------------------------------------------

def strong_audit(traj, tolerance=1e-5):
    """Integrated residual of the identity obtained by testing with -Lap u_t.

    d/dt (1/2||grad u_t||^2 + 1/2||Lap u||^2) + <sigma(u) u_t, -Lap u_t>
        + <f(u), -Lap u_t> - <phi, -Lap u_t> = 0
    """
    model = traj.model
    d = model.domain
    ax = tuple(range(1, d.dim + 1))
    lam = d.eigenvalues
    q = 0.5 * np.sum(lam * traj.v**2, axis=ax) + 0.5 * np.sum(lam**2 * traj.u**2, axis=ax)
    un = d.to_nodal_batch(traj.u)
    vn = d.to_nodal_batch(traj.v)
    lap_vn = d.to_nodal_batch(lam * traj.v)
    vol = d.cell_volume
    damping = vol * np.sum(mdl.sigma_eval(model.damping, un) * vn * lap_vn, axis=ax)
    forcing = np.sum(model.forcing * lam * traj.v, axis=ax)
    nonlinear = vol * np.sum(mdl.f_eval(model.nonlinearity, un) * lap_vn, axis=ax)
    res = np.abs(q - q[0] + _cumtrapz(traj.times, damping + nonlinear - forcing))
    samples = [(float(t), float(r), tolerance) for t, r in zip(traj.times, res)]
    return AuditReport("strong_identity", samples, float(res.max()), tolerance,
                       {"dt": traj.dt, "N": d.modes})


# -- Galerkin refinement -----------------------------------------------------

def galerkin_convergence(model, initial, Ns, T, dt=1e-3):
    """Differences ||xi^{N_{j+1}}(T) - xi^{N_j}(T)||_H between resolutions.

    Coarse states are zero-padded into the finer space.  Passes iff the
    differences decrease monotonically.
    """
    Ns = [int(x) for x in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValueError("Ns must be increasing")
    finals = []
    for N in Ns:
        m = model.with_modes(N)
        x0 = PhaseState.from_arrays(m.domain, resize_coeffs(initial.u.coeffs, m.domain),
                                    resize_coeffs(initial.v.coeffs, m.domain), initial.t)
        finals.append((m.domain, simulate(m, x0, dt, T, stride=10 ** 9).final))
    diffs = []
    for (dc, xc), (df, xf) in zip(finals, finals[1:]):
        du = xf.u.coeffs - resize_coeffs(xc.u.coeffs, df)
        dv = xf.v.coeffs - resize_coeffs(xc.v.coeffs, df)
        diffs.append(float(np.hypot(coeff_norm(df, du, "H1"), coeff_norm(df, dv, "L2"))))
    diffs = np.array(diffs)
    if len(diffs) < 2:
        worst = 0.0
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            steps = np.where(diffs[:-1] > 0, diffs[1:] / diffs[:-1],
                             np.where(diffs[1:] > 0, np.inf, 0.0))
        worst = float(np.max(steps))
    samples = [(float(N), float(x), float("nan")) for N, x in zip(Ns[1:], diffs)]
    # strictly decreasing differences <=> every successive ratio below 1
    rep = AuditReport("galerkin_convergence", samples, worst, 1.0, {"Ns": Ns, "diffs": diffs})
    if len(diffs) > 1 and worst >= 1.0 and np.any(diffs > 0):
        rep.max_residual = max(worst, 1.0 + 1e-12)
    return rep
