"""Spectral Galerkin simulation and audits for damped wave equations with
displacement-dependent damping, u_tt + sigma(u) u_t - Lap u + f(u) = phi."""
from .errors import (DampWaveError, IndefiniteJacobian, InvalidExponents, InvalidRange,
                     NoConvergence, NonFiniteState, ParseError, PlateauTooNarrow,
                     ValidationError)
from .experiments import (DecompositionRun, Equilibrium, continuous_dependence, decompose,
                          dissipative_sweep, galerkin_convergence, lemma53_audit,
                          lemma54_audit, solve_equilibrium, strong_audit)
from .functionals import (AuditReport, energy_E, energy_equality_audit, holder_modulus_audit,
                          lyapunov_audit, perturbed_functionals, perturbed_identity_audit,
                          spacetime_bound_audit, spacetime_norm)
from .galerkin import ModelSpec, PhaseState, Trajectory, rhs, simulate, step, strong_simulate
from .model import DampingSpec, NonlinearitySpec, Region, check_assumptions, exponent_region
from .spectral import (Domain, ModalField, NodalField, eigenvalues, inner, lebesgue_norm,
                       modal_to_nodal, nodal_to_modal, norm)

__version__ = "0.1.0"
