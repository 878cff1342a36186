"""Single-mode Gaussian states in (R, p) / (Q, r) variables.

Units are dimensionless throughout (hbar = m = omega_A = 1).  A state is
described by five real numbers:

    A   momentum dispersion
    B   minus the position-momentum covariance
    C   position dispersion
    mR  mean position
    mP  mean momentum

The ambiguity function (Fourier transform of rho in the centre-of-mass
coordinate) is

    chi(Q, r) = exp(i Q mR - i r mP - (A r^2 - 2 B r Q + C Q^2) / 2)

and the density matrix and Wigner function follow from it.  All evaluators
accept numpy arrays for their coordinate arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Omega^2 tolerance below 1/4 that is still accepted (and clamped to 1/4).
OMEGA_SQ_TOL = 1e-12
HEISENBERG_BOUND = 0.25


class InvalidStateError(ValueError):
    """Raised when an operation receives a state violating the Gaussian bounds."""


@dataclass(frozen=True)
class GaussianMoments:
    A: float
    B: float
    C: float
    mR: float = 0.0
    mP: float = 0.0

    @property
    def raw_omega_sq(self) -> float:
        return self.A * self.C - self.B * self.B

    @property
    def omega_sq(self) -> float:
        """Schrodinger-Robertson product A*C - B^2, clamped to 1/4 inside the tolerance band."""
        w = self.raw_omega_sq
        if HEISENBERG_BOUND - OMEGA_SQ_TOL <= w <= HEISENBERG_BOUND:
            return HEISENBERG_BOUND
        return w

    @property
    def omega(self) -> float:
        return math.sqrt(self.omega_sq)

    def as_array(self) -> np.ndarray:
        return np.array([self.A, self.B, self.C, self.mR, self.mP])

    @classmethod
    def ground(cls) -> "GaussianMoments":
        return cls(0.5, 0.0, 0.5)


@dataclass(frozen=True)
class Violation:
    label: str
    value: float
    bound: float

    def __str__(self) -> str:
        return f"{self.label}: value={self.value!r} bound={self.bound!r}"


@dataclass(frozen=True)
class ValidityReport:
    is_valid: bool
    omega_sq: float
    violations: list[Violation] = field(default_factory=list)


def validate_state(m: GaussianMoments) -> ValidityReport:
    values = m.as_array()
    if not np.all(np.isfinite(values)):
        bad = [
            Violation(f"non-finite {name}", float(v), math.nan)
            for name, v in zip(("A", "B", "C", "mR", "mP"), values)
            if not math.isfinite(v)
        ]
        return ValidityReport(False, math.nan, bad)

    violations = []
    if m.A <= 0:
        violations.append(Violation("A > 0", m.A, 0.0))
    if m.C <= 0:
        violations.append(Violation("C > 0", m.C, 0.0))
    raw = m.raw_omega_sq
    if raw < HEISENBERG_BOUND - OMEGA_SQ_TOL:
        violations.append(Violation("omega_sq >= 1/4", raw, HEISENBERG_BOUND))
        return ValidityReport(False, raw, violations)
    return ValidityReport(not violations, m.omega_sq, violations)


def require_valid(m: GaussianMoments) -> None:
    report = validate_state(m)
    if not report.is_valid:
        detail = "; ".join(str(v) for v in report.violations)
        raise InvalidStateError(f"invalid Gaussian state {m}: {detail}")


def ambiguity_at(m: GaussianMoments, Q, r):
    """Ambiguity function chi(Q, r); equals 1 at the origin for every state."""
    require_valid(m)
    Q = np.asarray(Q, dtype=float)
    r = np.asarray(r, dtype=float)
    quad = m.A * r * r - 2.0 * m.B * r * Q + m.C * Q * Q
    out = np.exp(1j * (Q * m.mR - r * m.mP) - 0.5 * quad)
    return out[()] if out.ndim == 0 else out


def wigner_at(m: GaussianMoments, R, p):
    """Wigner function normalised so that its integral against dR dp / (2 pi) is 1."""
    require_valid(m)
    dR = np.asarray(R, dtype=float) - m.mR
    dp = np.asarray(p, dtype=float) - m.mP
    w2 = m.omega_sq
    quad = m.A * dR * dR + 2.0 * m.B * dR * dp + m.C * dp * dp
    out = np.exp(-quad / (2.0 * w2)) / math.sqrt(w2)
    return out[()] if out.ndim == 0 else out


def density_at(m: GaussianMoments, r1, r2):
    """Position-space density matrix <r1|rho|r2>."""
    require_valid(m)
    x1 = np.asarray(r1, dtype=float) - m.mR
    x2 = np.asarray(r2, dtype=float) - m.mR
    w2 = m.omega_sq
    expo = (
        x1 * x1 * (0.25 + w2 + 1j * m.B)
        + x2 * x2 * (0.25 + w2 - 1j * m.B)
        + x1 * x2 * (0.5 - 2.0 * w2)
    )
    out = np.exp(-1j * m.mP * (x1 - x2) - expo / (2.0 * m.C)) / math.sqrt(2.0 * math.pi * m.C)
    return out[()] if out.ndim == 0 else out


def purity(m: GaussianMoments) -> float:
    """Tr rho^2 = 1 / (2 Omega)."""
    require_valid(m)
    return 0.5 / m.omega


def _coth(x: float) -> float:
    return 1.0 / math.tanh(x)


def _check_temperature(T_tilde: float) -> None:
    if not (math.isfinite(T_tilde) and T_tilde > 0):
        raise ValueError(f"T_tilde must be positive and finite, got {T_tilde!r}")


def thermal_state(T_tilde: float) -> GaussianMoments:
    """Thermal oscillator state at dimensionless temperature T_tilde."""
    _check_temperature(T_tilde)
    half = 0.5 * _coth(0.5 / T_tilde)
    return GaussianMoments(half, 0.0, half)


def thermal_density_at(T_tilde: float, r1, r2):
    """Canonical thermal kernel of the unit oscillator, in the coth/cosech form.

    With u = 1/(2 T_tilde) the kernel is

        sqrt(tanh(u) / pi) * exp(-[(r1^2 + r2^2) coth(2u) - 2 r1 r2 cosech(2u)] / 2)

    which integrates to 1 along the diagonal.
    """
    _check_temperature(T_tilde)
    u = 0.5 / T_tilde
    x1 = np.asarray(r1, dtype=float)
    x2 = np.asarray(r2, dtype=float)
    coth2 = _coth(2.0 * u)
    # sinh overflows for very low temperatures; cosech -> 0 there
    cosech2 = 0.0 if 2.0 * u > 700 else 1.0 / math.sinh(2.0 * u)
    expo = (x1 * x1 + x2 * x2) * coth2 - 2.0 * x1 * x2 * cosech2
    out = math.sqrt(math.tanh(u) / math.pi) * np.exp(-0.5 * expo) + 0j
    return out[()] if out.ndim == 0 else out
