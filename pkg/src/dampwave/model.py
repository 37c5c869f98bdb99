"""Damping coefficient, nonlinearity, their primitives and hypothesis checks.

All scalar functions accept floats or numpy arrays and are vectorized.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidExponents, InvalidRange

__all__ = [
    "DampingSpec",
    "NonlinearitySpec",
    "Region",
    "AssumptionReport",
    "sigma_eval",
    "sigma_prime",
    "Sigma_primitive",
    "f_eval",
    "f_prime",
    "f_second",
    "F_primitive",
    "g_eval",
    "G_primitive",
    "cutoff_g",
    "cutoff_G",
    "check_assumptions",
    "exponent_region",
]

DAMPING_FAMILIES = ("power", "plateau", "constant")
NONLINEARITY_FAMILIES = ("power", "power_minus_linear", "zero")


def _abs_pow(s, e):
    """|s|**e with the convention 0**0 = 1."""
    return np.power(np.abs(s), e)


def _signed_pow(s, e):
    return np.sign(s) * np.power(np.abs(s), e)


@dataclass(frozen=True)
class DampingSpec:
    """Damping coefficient sigma(s).

    * ``power``:    sigma0 * (1 + |s|**r)
    * ``plateau``:  gamma on [-l, l], then gamma + sigma0 * (|s| - l)**q with
      ramp exponent ``q = min(max(r + 1, 2), 4)`` so the junction is C^1
    * ``constant``: gamma everywhere
    """

    family: str = "power"
    sigma0: float = 1.0
    r: float = 0.0
    m: float | None = None
    gamma: float = 1.0
    l: float = 1.0
    c_growth: float = 10.0

    def __post_init__(self):
        if self.family not in DAMPING_FAMILIES:
            raise ValueError(f"damping family must be one of {DAMPING_FAMILIES}")
        r = 0.0 if self.family == "constant" else float(self.r)
        object.__setattr__(self, "r", r)
        if self.m is None:
            default_m = {"power": r, "plateau": self.ramp_exponent, "constant": 0.0}
            object.__setattr__(self, "m", float(default_m[self.family]))
        else:
            object.__setattr__(self, "m", float(self.m))
        if not (0.0 <= self.r <= self.m <= 4.0):
            raise InvalidExponents(f"need 0 <= r <= m <= 4, got r={self.r}, m={self.m}")
        for name in ("sigma0", "gamma", "l", "c_growth"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")

    @property
    def ramp_exponent(self):
        return min(max(float(self.r) + 1.0, 2.0), 4.0)

    @property
    def is_constant(self):
        return self.family == "constant"


@dataclass(frozen=True)
class NonlinearitySpec:
    """Nonlinearity f(s).

    * ``power``:              a |s|**(p-1) s
    * ``power_minus_linear``: a |s|**(p-1) s - b s
    * ``zero``:               0
    """

    family: str = "power"
    p: float = 3.0
    a: float = 1.0
    b: float = 0.0
    K: float = 0.0
    lambda_margin: float | None = None
    c_growth: float = 10.0

    def __post_init__(self):
        if self.family not in NONLINEARITY_FAMILIES:
            raise ValueError(f"nonlinearity family must be one of {NONLINEARITY_FAMILIES}")
        if not 2.0 <= self.p <= 7.0:
            raise InvalidExponents(f"p must lie in [2, 7], got {self.p}")
        for name in ("a", "b", "K"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.lambda_margin is not None and not self.lambda_margin > 0:
            raise ValueError("lambda_margin must be positive")
        if not self.c_growth > 0:
            raise ValueError("c_growth must be positive")

    @property
    def is_zero(self):
        return self.family == "zero" or (self.a == 0.0 and self.b == 0.0)


# -- damping -----------------------------------------------------------------

def sigma_eval(spec, s):
    s = np.asarray(s, dtype=float)
    if spec.family == "power":
        return spec.sigma0 * (1.0 + _abs_pow(s, spec.r))
    if spec.family == "plateau":
        excess = np.maximum(np.abs(s) - spec.l, 0.0)
        return spec.gamma + spec.sigma0 * excess**spec.ramp_exponent
    return np.full_like(s, spec.gamma)


def sigma_prime(spec, s):
    s = np.asarray(s, dtype=float)
    if spec.family == "power":
        r = spec.r
        if r == 0.0:
            return np.zeros_like(s)
        with np.errstate(divide="ignore"):
            return spec.sigma0 * r * _signed_pow(s, r - 1.0)
    if spec.family == "plateau":
        q = spec.ramp_exponent
        excess = np.maximum(np.abs(s) - spec.l, 0.0)
        return spec.sigma0 * q * np.sign(s) * excess ** (q - 1.0)
    return np.zeros_like(s)


def Sigma_primitive(spec, s):
    """Sigma(s) = int_0^s sigma."""
    s = np.asarray(s, dtype=float)
    if spec.family == "power":
        r = spec.r
        return spec.sigma0 * (s + _signed_pow(s, r + 1.0) / (r + 1.0))
    if spec.family == "plateau":
        q = spec.ramp_exponent
        excess = np.maximum(np.abs(s) - spec.l, 0.0)
        return spec.gamma * s + np.sign(s) * spec.sigma0 * excess ** (q + 1.0) / (q + 1.0)
    return spec.gamma * s


# -- nonlinearity ------------------------------------------------------------

def f_eval(spec, s):
    s = np.asarray(s, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(s)
    out = spec.a * _signed_pow(s, spec.p)
    if spec.family == "power_minus_linear":
        out = out - spec.b * s
    return out


def f_prime(spec, s):
    s = np.asarray(s, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(s)
    out = spec.a * spec.p * _abs_pow(s, spec.p - 1.0)
    if spec.family == "power_minus_linear":
        out = out - spec.b
    return out


def f_second(spec, s):
    s = np.asarray(s, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(s)
    p = spec.p
    return spec.a * p * (p - 1.0) * _signed_pow(s, p - 2.0)


def F_primitive(spec, s):
    """F(s) = int_0^s f."""
    s = np.asarray(s, dtype=float)
    if spec.family == "zero":
        return np.zeros_like(s)
    out = spec.a * _abs_pow(s, spec.p + 1.0) / (spec.p + 1.0)
    if spec.family == "power_minus_linear":
        out = out - 0.5 * spec.b * s**2
    return out


# -- monotone shift g = f + K s and its cut-off ------------------------------

def g_eval(spec, s):
    s = np.asarray(s, dtype=float)
    return f_eval(spec, s) + spec.K * s


def G_primitive(spec, s):
    s = np.asarray(s, dtype=float)
    return F_primitive(spec, s) + 0.5 * spec.K * s**2


def cutoff_g(n, spec, s):
    """g frozen at g(+-n) outside [-n, n]."""
    if n < 1:
        raise ValueError("cut-off level n must be >= 1")
    return g_eval(spec, np.clip(s, -n, n))


def cutoff_g_prime(n, spec, s):
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < n
    return np.where(inside, f_prime(spec, s) + spec.K, 0.0)


def cutoff_G(n, spec, s):
    """Primitive of :func:`cutoff_g` vanishing at 0."""
    if n < 1:
        raise ValueError("cut-off level n must be >= 1")
    s = np.asarray(s, dtype=float)
    c = np.clip(s, -n, n)
    return G_primitive(spec, c) + g_eval(spec, c) * (s - c)


# -- hypothesis checks -------------------------------------------------------

class Region(str, enum.Enum):
    I = "RegionI"
    II = "RegionII"
    OUTSIDE = "Outside"

    def __str__(self):
        return self.value


def exponent_region(m, r, p):
    """Classify (m, r, p) against the well-posedness regions.

    Returns ``(region, k)`` with ``k = min(r, 4 - m)``.
    """
    if not (0.0 <= r <= m <= 4.0) or not p >= 2.0:
        raise InvalidExponents(f"need 0 <= r <= m <= 4 and p >= 2, got m={m}, r={r}, p={p}")
    k = min(r, 4.0 - m)
    if m <= 2.0 and p <= 3.0:
        return Region.I, k
    if p <= k + 3.0:
        return Region.II, k
    return Region.OUTSIDE, k


@dataclass
class AssumptionReport:
    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    min_constants: dict = field(default_factory=dict)
    k: float = 0.0
    region: Region = Region.OUTSIDE

    @property
    def passed(self):
        return all(self.verdicts.values())

    def rows(self):
        """(assumption, verdict, witness_s, lhs, rhs, min_constant) tuples."""
        out = []
        for name, ok in self.verdicts.items():
            s, lhs, rhs = self.witnesses.get(name, (np.nan, np.nan, np.nan))
            out.append((name, "pass" if ok else "fail", s, lhs, rhs,
                        self.min_constants.get(name, np.nan)))
        return out


def _sample_grid(s_range, samples):
    half = max(samples // 2, 1)
    pos = np.geomspace(1e-4, s_range, half)
    return np.concatenate([-pos[::-1], [0.0], pos])


def _record(report, name, s, lhs, rhs, ok_mask):
    """Store the verdict of ``lhs <= rhs``; a failure keeps its worst sample."""
    slack = rhs - lhs
    ok = bool(np.all(ok_mask))
    j = int(np.argmin(np.where(ok_mask, np.inf, slack))) if not ok else int(np.argmin(slack))
    report.verdicts[name] = ok
    if not ok:
        report.witnesses[name] = (float(s[j]), float(lhs[j]), float(rhs[j]))


def check_assumptions(model, s_range=100.0, samples=2001):
    """Evaluate (S1), (S2), (F1), (F2), (F3) on a sampled grid.

    ``model`` needs ``damping``, ``nonlinearity`` and ``lambda_margin``
    attributes (a :class:`~dampwave.galerkin.ModelSpec`).  The asymptotic
    (F2) condition is checked only on ``|s| >= s_range / 2``, so a pass means
    "pass on the sampled range".
    """
    if not s_range > 1:
        raise InvalidRange(f"s_range must exceed 1, got {s_range}")
    if samples < 100:
        raise InvalidRange(f"need at least 100 samples, got {samples}")
    damp, nl = model.damping, model.nonlinearity
    s = _sample_grid(float(s_range), int(samples))
    rep = AssumptionReport()

    sig = sigma_eval(damp, s)
    s1_rhs = damp.sigma0 * (1.0 + _abs_pow(s, damp.r))
    _record(rep, "S1", s, s1_rhs, sig, sig >= s1_rhs * (1.0 - 1e-12))
    rep.min_constants["S1"] = float(np.min(sig / (1.0 + _abs_pow(s, damp.r))))

    big = np.abs(s) >= 1.0
    sb = s[big]
    dsig = np.abs(sigma_prime(damp, sb))
    growth = damp.m * _abs_pow(sb, damp.m - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(dsig == 0.0, 0.0, dsig / growth)
    c_min = float(np.max(ratio))
    rep.min_constants["S2"] = c_min
    _record(rep, "S2", sb, dsig, damp.c_growth * growth, ratio <= damp.c_growth)

    rep.region, rep.k = exponent_region(damp.m, damp.r, nl.p)

    f2 = np.abs(f_second(nl, s))
    bound = 1.0 + _abs_pow(s, nl.p - 2.0)
    c_min = float(np.max(f2 / bound))
    rep.min_constants["F1"] = c_min
    # growth exponent must also respect p <= k + 3
    f1_ok = (f2 <= nl.c_growth * bound) & (nl.is_zero or nl.p <= rep.k + 3.0)
    _record(rep, "F1", s, f2, nl.c_growth * bound, f1_ok)

    tail = np.abs(s) >= 0.5 * s_range
    st = s[tail]
    quot = f_eval(nl, st) / st
    lam = model.lambda_margin
    _record(rep, "F2", st, -quot, np.full_like(st, lam), quot > -lam)
    rep.min_constants["F2"] = float(np.min(quot))

    fp = f_prime(nl, s)
    _record(rep, "F3", s, -fp, np.full_like(s, nl.K), fp >= -nl.K - 1e-12)
    rep.min_constants["F3"] = float(max(0.0, -np.min(fp)))
    return rep
