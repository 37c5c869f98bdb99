"""Faedo-Galerkin ODE system for u_tt + sigma(u) u_t - Lap u + f(u) = phi.

The nonlinear terms are evaluated pseudo-spectrally: synthesize u and u_t on
the oversampled midpoint grid, evaluate pointwise, project back by
quadrature.  The accumulated dissipation ``int_0^t int sigma(u) u_t^2`` is
integrated as an extra ODE component with the integrator's own stage
weights, so the energy balance closes at the integrator's order.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import model as mdl
from .errors import NoConvergence, NonFiniteState
from .spectral import Domain, ModalField, coeff_norm

__all__ = [
    "ModelSpec",
    "PhaseState",
    "Trajectory",
    "rhs",
    "step",
    "simulate",
    "strong_simulate",
    "METHODS",
]

log = logging.getLogger(__name__)

METHODS = ("rk4", "implicit_midpoint")
IMPLICIT_TOL = 1e-12
IMPLICIT_MAX_ITERS = 50


@dataclass(frozen=True, eq=False)
class ModelSpec:
    domain: Domain
    damping: mdl.DampingSpec
    nonlinearity: mdl.NonlinearitySpec
    forcing: np.ndarray = None
    check: bool = True

    def __post_init__(self):
        phi = self.forcing
        if phi is None:
            phi = self.domain.zeros()
        elif isinstance(phi, ModalField):
            phi = phi.coeffs
        phi = np.array(phi, dtype=float).reshape(self.domain.shape)
        if not np.all(np.isfinite(phi)):
            raise ValueError("forcing coefficients must be finite")
        phi.setflags(write=False)
        object.__setattr__(self, "forcing", phi)
        lam = self.nonlinearity.lambda_margin
        if lam is not None and lam >= self.domain.lambda1:
            raise ValueError(
                f"lambda_margin={lam} must be below lambda_1={self.domain.lambda1}")
        if self.check:
            rep = mdl.check_assumptions(self, s_range=100.0, samples=1001)
            bad = [a for a in ("S1", "F3") if not rep.verdicts[a]]
            if bad:
                raise ValueError(f"model violates {', '.join(bad)}: {rep.witnesses}")

    @property
    def lambda_margin(self):
        lam = self.nonlinearity.lambda_margin
        return 0.5 * self.domain.lambda1 if lam is None else lam

    @property
    def forcing_field(self):
        return ModalField(self.domain, self.forcing)

    def replace(self, **changes):
        kw = dict(domain=self.domain, damping=self.damping,
                  nonlinearity=self.nonlinearity, forcing=self.forcing, check=False)
        kw.update(changes)
        return ModelSpec(**kw)

    def with_modes(self, modes):
        """Same problem on a different resolution (forcing zero-padded/truncated)."""
        dom = self.domain.with_modes(modes)
        return self.replace(domain=dom, forcing=resize_coeffs(self.forcing, dom))


def resize_coeffs(coeffs, domain):
    """Zero-pad or truncate a coefficient array onto ``domain``."""
    coeffs = np.asarray(coeffs, dtype=float)
    out = domain.zeros()
    n = min(coeffs.shape[0], domain.modes)
    sl = tuple(slice(0, n) for _ in range(domain.dim))
    out[sl] = coeffs[sl]
    return out


@dataclass(frozen=True, eq=False)
class PhaseState:
    t: float
    u: ModalField
    v: ModalField

    def __post_init__(self):
        if self.u.domain != self.v.domain:
            raise ValueError("u and v must share a domain")

    @classmethod
    def from_arrays(cls, domain, u, v=None, t=0.0):
        v = domain.zeros() if v is None else v
        return cls(float(t), ModalField(domain, u), ModalField(domain, v))

    @classmethod
    def zero(cls, domain, t=0.0):
        return cls.from_arrays(domain, domain.zeros(), domain.zeros(), t)

    @property
    def domain(self):
        return self.u.domain

    def energy_norm(self):
        """Phase-space norm sqrt(||grad u||^2 + ||u_t||^2)."""
        return float(np.hypot(coeff_norm(self.domain, self.u.coeffs, "H1"),
                              coeff_norm(self.domain, self.v.coeffs, "L2")))


@dataclass(eq=False)
class Trajectory:
    """Snapshots stored as stacked arrays; ``snapshots`` builds PhaseStates."""

    model: ModelSpec
    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    dissipation_cum: np.ndarray
    dt: float
    integrator: str = "rk4"
    strong_norms: np.ndarray | None = field(default=None)

    def __len__(self):
        return len(self.times)

    def state(self, k):
        return PhaseState.from_arrays(self.model.domain, self.u[k], self.v[k], self.times[k])

    @property
    def snapshots(self):
        return [self.state(k) for k in range(len(self))]

    @property
    def final(self):
        return self.state(-1)

    @property
    def t_end(self):
        return float(self.times[-1])

    def energy_norms(self):
        d = self.model.domain
        axes = tuple(range(1, d.dim + 1))
        grad2 = np.sum(d.eigenvalues * self.u**2, axis=axes)
        kin2 = np.sum(self.v**2, axis=axes)
        return np.sqrt(grad2 + kin2)


# -- right-hand side ---------------------------------------------------------

def _rhs(model, u, v):
    """Return (du, dv, int sigma(u) v^2) on raw coefficient arrays."""
    d = model.domain
    damp, nl = model.damping, model.nonlinearity
    lin = model.forcing - d.eigenvalues * u
    need_u = not nl.is_zero or not damp.is_constant
    un = d.to_nodal(u) if need_u else None
    if damp.is_constant:
        # P(gamma v) = gamma v exactly
        damping_term = damp.gamma * v
        vf = v.ravel()
        diss = damp.gamma * float(vf @ vf)
    else:
        vn = d.to_nodal(v)
        sig_v = mdl.sigma_eval(damp, un) * vn
        damping_term = d.to_modal(sig_v)
        diss = d.integrate(sig_v * vn)
    if nl.is_zero:
        dv = lin - damping_term
    else:
        dv = lin - damping_term - d.to_modal(mdl.f_eval(nl, un))
    # a single reduction: any inf/nan entry makes the sum non-finite
    if not math.isfinite(diss + float(dv.sum())):
        raise NonFiniteState("right-hand side is not finite")
    return v, dv, diss


def rhs(model, state):
    """Time derivative of a phase state, as two modal fields."""
    du, dv, _ = _rhs(model, state.u.coeffs, state.v.coeffs)
    d = model.domain
    return ModalField(d, du), ModalField(d, dv)


def _rk4(model, u, v, dt):
    k1u, k1v, d1 = _rhs(model, u, v)
    h = 0.5 * dt
    k2u, k2v, d2 = _rhs(model, u + h * k1u, v + h * k1v)
    k3u, k3v, d3 = _rhs(model, u + h * k2u, v + h * k2v)
    k4u, k4v, d4 = _rhs(model, u + dt * k3u, v + dt * k3v)
    w = dt / 6.0
    return (u + w * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + w * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            w * (d1 + 2.0 * d2 + 2.0 * d3 + d4))


def _implicit_midpoint(model, u, v, dt):
    h = 0.5 * dt
    du, dv, _ = _rhs(model, u, v)
    mu, mv = u + h * du, v + h * dv
    for _ in range(IMPLICIT_MAX_ITERS):
        du, dv, diss = _rhs(model, mu, mv)
        nu, nv = u + h * du, v + h * dv
        change = max(np.max(np.abs(nu - mu)), np.max(np.abs(nv - mv)))
        scale = 1.0 + max(np.max(np.abs(nu)), np.max(np.abs(nv)))
        mu, mv = nu, nv
        if change <= IMPLICIT_TOL * scale:
            _, _, diss = _rhs(model, mu, mv)
            return 2.0 * mu - u, 2.0 * mv - v, dt * diss
    raise NoConvergence(
        f"implicit midpoint stage did not converge in {IMPLICIT_MAX_ITERS} iterations")


_STEPPERS = {"rk4": _rk4, "implicit_midpoint": _implicit_midpoint}


def _stepper(method):
    try:
        return _STEPPERS[method]
    except KeyError:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}") from None


def step(model, state, dt, method="rk4"):
    if not dt > 0:
        raise ValueError("dt must be positive")
    u, v, _ = _stepper(method)(model, state.u.coeffs, state.v.coeffs, dt)
    return PhaseState.from_arrays(model.domain, u, v, state.t + dt)


def _n_steps(dt, t_end):
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    if not dt > 0:
        raise ValueError("dt must be positive")
    return max(1, int(round(t_end / dt)))


def simulate(model, initial, dt, t_end, stride=1, method="rk4"):
    """Integrate from ``initial`` over ``[t0, t0 + t_end]``.

    ``dt`` is adjusted to ``t_end / round(t_end / dt)`` so the run lands on
    ``t_end`` exactly.  Snapshots are taken every ``stride`` steps plus the
    final step.
    """
    if stride < 1:
        raise ValueError("stride must be >= 1")
    advance = _stepper(method)
    n = _n_steps(dt, t_end)
    dt = t_end / n
    t0 = float(initial.t)
    u = np.array(initial.u.coeffs, dtype=float)
    v = np.array(initial.v.coeffs, dtype=float)
    keep = list(range(0, n + 1, stride))
    if keep[-1] != n:
        keep.append(n)
    K = len(keep)
    times = np.empty(K)
    U = np.empty((K,) + u.shape)
    V = np.empty((K,) + v.shape)
    D = np.empty(K)
    times[0], U[0], V[0], D[0] = t0, u, v, 0.0
    dcum = 0.0
    j = 1
    for i in range(1, n + 1):
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                u, v, dd = advance(model, u, v, dt)
            if not math.isfinite(float(u.sum()) + float(v.sum())):
                raise NonFiniteState("state is not finite")
        except (NonFiniteState, NoConvergence) as exc:
            t_fail = t0 + i * dt
            exc.time = t_fail
            if isinstance(exc, NonFiniteState):
                exc.last_state = PhaseState.from_arrays(model.domain, U[j - 1], V[j - 1],
                                                        times[j - 1])
                exc.partial = Trajectory(model, times[:j], U[:j], V[:j], D[:j], dt, method)
            log.warning("integration failed at t=%g: %s", t_fail, exc)
            raise
        dcum += dd
        if j < K and i == keep[j]:
            times[j], U[j], V[j], D[j] = t0 + i * dt, u, v, dcum
            j += 1
    return Trajectory(model, times, U, V, D, dt, method)


def strong_simulate(model, initial, dt, t_end, stride=1, method="rk4"):
    """:func:`simulate` that also records (||grad u_t||, ||Lap u||) per snapshot."""
    d = model.domain
    vnorm = (coeff_norm(d, initial.u.coeffs, "H2"), coeff_norm(d, initial.v.coeffs, "H1"))
    if not all(np.isfinite(vnorm)):
        raise ValueError("initial data must have finite H2 x H1 norm")
    traj = simulate(model, initial, dt, t_end, stride=stride, method=method)
    traj.strong_norms = strong_norms(traj)
    return traj


def strong_norms(traj):
    d = traj.model.domain
    axes = tuple(range(1, d.dim + 1))
    lam = d.eigenvalues
    grad_v = np.sqrt(np.sum(lam * traj.v**2, axis=axes))
    lap_u = np.sqrt(np.sum(lam**2 * traj.u**2, axis=axes))
    return np.stack([grad_v, lap_u], axis=1)
