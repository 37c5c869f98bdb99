"""Dirichlet sine eigenbasis of -Laplacian on a box, transforms and norms.

Fields are stored as coefficient arrays of shape ``(N,) * dim`` in the
normalized tensor-product basis

    e_i(x) = prod_j sqrt(2 / L_j) * sin(i_j * pi * x_j / L_j),   i_j = 1..N,

so that ``-Lap e_i = lambda_i e_i`` with ``lambda_i = sum_j (pi i_j / L_j)**2``.
Flattening uses C (lexicographic) order of the multi-index.

The nodal grid is the midpoint grid with ``M = oversample * N`` cells per
axis.  On that grid the midpoint rule integrates products ``e_i e_k`` exactly
for all retained modes, so synthesis followed by analysis is the identity.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Domain",
    "ModalField",
    "NodalField",
    "eigenvalues",
    "modal_to_nodal",
    "nodal_to_modal",
    "direct_synthesis",
    "direct_analysis",
    "norm",
    "lebesgue_norm",
    "inner",
]

NORMS = ("L2", "H1", "H2", "Hminus1")


@dataclass(frozen=True)
class Domain:
    """Box ``prod_j (0, L_j)`` with ``modes`` sine modes per axis."""

    dim: int
    lengths: tuple
    modes: int
    oversample: int = 4

    def __post_init__(self):
        lengths = self.lengths
        if np.isscalar(lengths):
            lengths = (float(lengths),) * int(self.dim)
        object.__setattr__(self, "lengths", tuple(float(v) for v in lengths))
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.lengths) != self.dim:
            raise ValueError("need one length per dimension")
        if not all(np.isfinite(v) and v > 0 for v in self.lengths):
            raise ValueError("lengths must be finite and positive")
        if int(self.modes) < 1:
            raise ValueError("modes must be >= 1")
        if int(self.oversample) < 2:
            raise ValueError("oversample must be >= 2")

    @property
    def shape(self):
        return (self.modes,) * self.dim

    @property
    def grid_points(self):
        return self.oversample * self.modes

    @property
    def grid_shape(self):
        return (self.grid_points,) * self.dim

    @property
    def size(self):
        return self.modes**self.dim

    @cached_property
    def spacing(self):
        return tuple(L / self.grid_points for L in self.lengths)

    @cached_property
    def cell_volume(self):
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self):
        """Midpoint nodes along each axis."""
        return tuple((np.arange(self.grid_points) + 0.5) * h for h in self.spacing)

    @cached_property
    def wavenumbers(self):
        i = np.arange(1, self.modes + 1)
        return tuple(np.pi * i / L for L in self.lengths)

    @cached_property
    def eigenvalues(self):
        """Eigenvalues as an array of shape ``self.shape``."""
        lam = np.zeros(self.shape)
        i2 = np.arange(1, self.modes + 1, dtype=float) ** 2
        for j, L in enumerate(self.lengths):
            idx = [None] * self.dim
            idx[j] = slice(None)
            # (pi/L)^2 * i^2 rather than (pi i/L)^2: exact integers when L = pi
            lam = lam + ((np.pi / L) ** 2 * i2)[tuple(idx)]
        lam.setflags(write=False)
        return lam

    @property
    def lambda1(self):
        return float(sum((np.pi / L) ** 2 for L in self.lengths))

    @cached_property
    def _synthesis(self):
        mats = []
        for x, k, L in zip(self.axes, self.wavenumbers, self.lengths):
            mats.append(np.sqrt(2.0 / L) * np.sin(np.outer(x, k)))
        return tuple(mats)

    @cached_property
    def _analysis(self):
        return tuple(h * S.T.copy() for h, S in zip(self.spacing, self._synthesis))

    # array-level transforms; the ModalField wrappers below call these
    def to_nodal(self, coeffs):
        return _apply_axes(self._synthesis, coeffs)

    def to_modal(self, values):
        return _apply_axes(self._analysis, values)

    def to_nodal_batch(self, coeffs):
        """Synthesize a stack of fields; the leading axis indexes the stack."""
        return _apply_axes(self._synthesis, coeffs, offset=1)

    def to_modal_batch(self, values):
        return _apply_axes(self._analysis, values, offset=1)

    def integrate(self, values):
        """Midpoint-rule integral of nodal values over the box."""
        return self.cell_volume * float(np.sum(values))

    def zeros(self):
        return np.zeros(self.shape)

    def multi_indices(self):
        """Multi-indices (1-based) in lexicographic order."""
        return list(itertools.product(range(1, self.modes + 1), repeat=self.dim))

    def with_modes(self, modes):
        return Domain(self.dim, self.lengths, modes, self.oversample)


def _apply_axes(mats, arr, offset=0):
    out = np.asarray(arr, dtype=float)
    if len(mats) == 1:
        return mats[0] @ out if offset == 0 else out @ mats[0].T
    for j, mat in enumerate(mats):
        ax = j + offset
        out = np.moveaxis(np.tensordot(mat, out, axes=([1], [ax])), 0, ax)
    return out


@dataclass(frozen=True, eq=False)
class ModalField:
    domain: Domain
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.size != self.domain.size:
            raise ValueError(f"expected {self.domain.size} coefficients, got {c.size}")
        c = c.reshape(self.domain.shape)
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, domain):
        return cls(domain, domain.zeros())

    @classmethod
    def mode(cls, domain, index, amplitude=1.0):
        """Single basis function ``amplitude * e_index`` (1-based index)."""
        index = (index,) if np.isscalar(index) else tuple(index)
        c = domain.zeros()
        c[tuple(i - 1 for i in index)] = amplitude
        return cls(domain, c)

    def __add__(self, other):
        return ModalField(self.domain, self.coeffs + other.coeffs)

    def __sub__(self, other):
        return ModalField(self.domain, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return ModalField(self.domain, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return ModalField(self.domain, -self.coeffs)

    def flat(self):
        return self.coeffs.ravel()


@dataclass(frozen=True, eq=False)
class NodalField:
    domain: Domain
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.size != self.domain.grid_points**self.domain.dim:
            raise ValueError("value count must be (oversample*N)**dim")
        v = v.reshape(self.domain.grid_shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("nodal values must be finite")
        object.__setattr__(self, "values", v)


def eigenvalues(domain):
    """Dirichlet eigenvalues in lexicographic multi-index order."""
    return domain.eigenvalues.ravel().copy()


def modal_to_nodal(f, method="matrix"):
    """Evaluate the sine expansion at the midpoint grid.

    ``method="dst"`` routes through :func:`scipy.fft.dst` (type III); the
    default dense separable path is the reference.
    """
    d = f.domain
    if method == "matrix":
        return NodalField(d, d.to_nodal(f.coeffs))
    if method == "dst":
        M = d.grid_points
        out = np.zeros(d.grid_shape)
        out[tuple(slice(0, d.modes) for _ in range(d.dim))] = f.coeffs
        for j, L in enumerate(d.lengths):
            out = 0.5 * np.sqrt(2.0 / L) * scipy.fft.dst(out, type=3, axis=j)
        return NodalField(d, out)
    raise ValueError(f"unknown method {method!r}")


def nodal_to_modal(g, n_keep=None, method="matrix"):
    """L2 projection onto the first ``n_keep`` modes per axis by quadrature.

    Modes above ``n_keep`` are returned as zero so the result lives on the
    same domain.
    """
    d = g.domain
    n_keep = d.modes if n_keep is None else int(n_keep)
    if not 0 <= n_keep <= d.modes:
        raise ValueError(f"n_keep must lie in [0, {d.modes}]")
    if method == "matrix":
        c = d.to_modal(g.values)
    elif method == "dst":
        c = np.asarray(g.values, dtype=float)
        for j, (L, h) in enumerate(zip(d.lengths, d.spacing)):
            c = 0.5 * h * np.sqrt(2.0 / L) * scipy.fft.dst(c, type=2, axis=j)
        c = c[tuple(slice(0, d.modes) for _ in range(d.dim))]
    else:
        raise ValueError(f"unknown method {method!r}")
    if n_keep < d.modes:
        c = c.copy()
        for j in range(d.dim):
            idx = [slice(None)] * d.dim
            idx[j] = slice(n_keep, None)
            c[tuple(idx)] = 0.0
    return ModalField(d, c)


def direct_synthesis(domain, coeffs, points):
    """Reference evaluation of ``sum_i a_i e_i`` at arbitrary points.

    ``points`` has shape ``(P, dim)``.  Plain double loop over modes and
    points, no factorization.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    coeffs = np.asarray(coeffs, dtype=float).reshape(domain.shape)
    out = np.zeros(pts.shape[0])
    for idx in domain.multi_indices():
        a = coeffs[tuple(i - 1 for i in idx)]
        if a == 0.0:
            continue
        basis = np.ones(pts.shape[0])
        for j, (i, L) in enumerate(zip(idx, domain.lengths)):
            basis *= np.sqrt(2.0 / L) * np.sin(i * np.pi * pts[:, j] / L)
        out += a * basis
    return out


def direct_analysis(domain, values):
    """Reference midpoint-quadrature inner products with every basis mode."""
    grids = np.meshgrid(*domain.axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = np.asarray(values, dtype=float).ravel()
    out = domain.zeros()
    for idx in domain.multi_indices():
        basis = np.ones(pts.shape[0])
        for j, (i, L) in enumerate(zip(idx, domain.lengths)):
            basis *= np.sqrt(2.0 / L) * np.sin(i * np.pi * pts[:, j] / L)
        out[tuple(i - 1 for i in idx)] = domain.cell_volume * np.dot(basis, vals)
    return out


def _weights(domain, which):
    lam = domain.eigenvalues
    if which == "L2":
        return 1.0
    if which == "H1":
        return lam
    if which == "H2":
        return lam**2
    if which == "Hminus1":
        return 1.0 / lam
    raise ValueError(f"norm must be one of {NORMS}, got {which!r}")


def norm(f, which="L2"):
    """Modal norms: L2, H1 (= ||grad u||), H2 (= ||Lap u||), Hminus1."""
    return float(np.sqrt(np.sum(_weights(f.domain, which) * f.coeffs**2)))


def coeff_norm(domain, coeffs, which="L2"):
    """:func:`norm` on a raw coefficient array."""
    return float(np.sqrt(np.sum(_weights(domain, which) * np.square(coeffs))))


def lebesgue_norm(f, q):
    """``(int |u|^q)^(1/q)`` by the midpoint rule on the nodal grid."""
    if q < 1:
        raise ValueError("q must be >= 1")
    values = f.domain.to_nodal(f.coeffs)
    return nodal_lebesgue_norm(f.domain, values, q)


def nodal_lebesgue_norm(domain, values, q):
    a = np.abs(values)
    peak = float(a.max()) if a.size else 0.0
    if peak == 0.0:
        return 0.0
    # scale out the peak so large q cannot overflow
    return peak * (domain.cell_volume * float(np.sum((a / peak) ** q))) ** (1.0 / q)


def inner(f, g):
    """L2 inner product of two modal fields (Parseval)."""
    return float(np.sum(f.coeffs * g.coeffs))
