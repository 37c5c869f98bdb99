"""Reference configurations used by the test-suite, the CLI and the README."""
from __future__ import annotations

import numpy as np

from .galerkin import ModelSpec, PhaseState
from .model import DampingSpec, NonlinearitySpec
from .spectral import Domain

PI = np.pi


def default_model(modes=32, dim=1):
    """sigma(s) = 1 + s^2, f(s) = s^3, phi = 0.5 e_1 on (0, pi)^dim."""
    dom = Domain(dim, (PI,) * dim, modes)
    phi = dom.zeros()
    phi[(0,) * dim] = 0.5
    return ModelSpec(dom, DampingSpec("power", sigma0=1.0, r=2.0),
                     NonlinearitySpec("power", p=3.0, a=1.0), phi)


def default_initial(domain):
    """Smooth data: u0 = 1.0 e_1 - 0.4 e_2 + 0.2 e_3, u1 = 0.5 e_2."""
    u = domain.zeros()
    v = domain.zeros()
    for i, a in ((1, 1.0), (2, -0.4), (3, 0.2)):
        if i <= domain.modes:
            u[(i - 1,) + (0,) * (domain.dim - 1)] = a
    if domain.modes >= 2:
        v[(1,) + (0,) * (domain.dim - 1)] = 0.5
    return PhaseState.from_arrays(domain, u, v)


def plateau_model(modes=32, l=10.0):
    """Plateau damping (gamma = 1 on [-l, l]) with cubic f, phi = 0.5 e_1."""
    dom = Domain(1, (PI,), modes)
    phi = dom.zeros()
    phi[0] = 0.5
    return ModelSpec(dom, DampingSpec("plateau", sigma0=0.5, r=0.0, gamma=1.0, l=l),
                     NonlinearitySpec("power", p=3.0, a=1.0), phi)


def linear_model(modes=1, gamma=1.0, phi1=0.5):
    """f = 0, sigma = gamma, phi = phi1 e_1 on (0, pi)."""
    dom = Domain(1, (PI,), modes)
    phi = dom.zeros()
    phi[0] = phi1
    return ModelSpec(dom, DampingSpec("constant", gamma=gamma, sigma0=0.5 * gamma),
                     NonlinearitySpec("zero"), phi)
