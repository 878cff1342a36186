"""Independent checks of the moment machinery.

``characteristics_ambiguity`` solves the ambiguity transport equation

    d_t chi + (omega^2 r + gamma Q) d_Q chi + (-Q + gamma r) d_r chi
        = (-h11 r^2 / 2 - h33 Q^2 / 2 + h13r Q r) chi

pointwise by following characteristics back to tau = 0, without assuming
anything about Gaussian closure.  The quadrature routines integrate the
Wigner function and the density matrix on a grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .dynamics import InitialConditions, LindbladParams
from .state import GaussianMoments, ambiguity_at, density_at, purity, require_valid, wigner_at

MAX_CHARACTERISTIC_STEP = 1e-3


@dataclass(frozen=True)
class GridSpec:
    """Trapezoidal grid: ``half_width`` standard deviations each side, ``points_per_axis`` nodes."""

    half_width: float = 8.0
    points_per_axis: int = 2048

    def __post_init__(self):
        if self.half_width < 4:
            raise ValueError(f"half_width must be >= 4, got {self.half_width!r}")
        if self.points_per_axis < 128 or self.points_per_axis % 2:
            raise ValueError(f"points_per_axis must be even and >= 128, got {self.points_per_axis!r}")

    def axis(self, centre: float, sigma: float, half_width: float | None = None) -> np.ndarray:
        hw = self.half_width if half_width is None else half_width
        return np.linspace(centre - hw * sigma, centre + hw * sigma, self.points_per_axis)


@dataclass(frozen=True)
class CharacteristicPoint:
    Q: float
    r: float
    value: complex


def characteristics_ambiguity(
    p: LindbladParams,
    ic: InitialConditions,
    t: float,
    points: Iterable[tuple[float, float]],
) -> list[CharacteristicPoint]:
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"t must be finite and non-negative, got {t!r}")
    pts = np.asarray(list(points), dtype=float).reshape(-1, 2)
    Q = pts[:, 0].copy()
    r = pts[:, 1].copy()
    g, w2 = p.gamma, p.omega**2

    def rhs(Q, r):
        # backward in time: negated characteristic velocity, plus the source
        dQ = -(w2 * r + g * Q)
        dr = Q - g * r
        src = -0.5 * p.h11 * r * r - 0.5 * p.h33 * Q * Q + p.h13r * Q * r
        return dQ, dr, src

    acc = np.zeros_like(Q)
    n = int(math.ceil(t / MAX_CHARACTERISTIC_STEP)) if t > 0 else 0
    h = t / n if n else 0.0
    for _ in range(n):
        q1, r1, s1 = rhs(Q, r)
        q2, r2, s2 = rhs(Q + 0.5 * h * q1, r + 0.5 * h * r1)
        q3, r3, s3 = rhs(Q + 0.5 * h * q2, r + 0.5 * h * r2)
        q4, r4, s4 = rhs(Q + h * q3, r + h * r3)
        Q = Q + (h / 6.0) * (q1 + 2 * q2 + 2 * q3 + q4)
        r = r + (h / 6.0) * (r1 + 2 * r2 + 2 * r3 + r4)
        acc = acc + (h / 6.0) * (s1 + 2 * s2 + 2 * s3 + s4)

    if not (np.all(np.isfinite(Q)) and np.all(np.isfinite(r)) and np.all(np.isfinite(acc))):
        raise FloatingPointError("characteristic integration produced non-finite values")
    values = np.atleast_1d(ambiguity_at(ic.state(), Q, r)) * np.exp(acc)
    return [CharacteristicPoint(float(q), float(rr), complex(v)) for (q, rr), v in zip(pts, values)]


def _trapz2(F: np.ndarray, x: np.ndarray, y: np.ndarray):
    return np.trapezoid(np.trapezoid(F, y, axis=1), x)


def quadrature_moments(m: GaussianMoments, g: GridSpec = GridSpec()) -> tuple[dict, dict]:
    """Phase-space moments of the Wigner function by 2-D trapezoidal quadrature.

    Returns ``(moments, residuals)``, both keyed by mR, mP, var_R, var_p,
    cov_Rp; residuals are recovered minus stored (mR, mP, C, A, -B).
    """
    require_valid(m)
    R = g.axis(m.mR, math.sqrt(m.C))
    P = g.axis(m.mP, math.sqrt(m.A))
    RR, PP = np.meshgrid(R, P, indexing="ij")
    f = wigner_at(m, RR, PP) / (2.0 * math.pi)
    norm = _trapz2(f, R, P)
    if abs(norm - 1.0) > 1e-4:
        raise ValueError(f"grid too coarse: Wigner normalisation {norm!r}")
    mR = _trapz2(RR * f, R, P)
    mP = _trapz2(PP * f, R, P)
    dR, dP = RR - mR, PP - mP
    moments = {
        "mR": mR,
        "mP": mP,
        "var_R": _trapz2(dR * dR * f, R, P),
        "var_p": _trapz2(dP * dP * f, R, P),
        "cov_Rp": _trapz2(dR * dP * f, R, P),
    }
    stored = {"mR": m.mR, "mP": m.mP, "var_R": m.C, "var_p": m.A, "cov_Rp": -m.B}
    residuals = {k: moments[k] - stored[k] for k in moments}
    return moments, residuals


def _norm_and_purity(m: GaussianMoments, g: GridSpec, half_width: float) -> tuple[float, float]:
    x = g.axis(m.mR, math.sqrt(m.C), half_width)
    norm = np.trapezoid(density_at(m, x, x), x).real
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    rho = density_at(m, X1, X2)
    pur = _trapz2((rho * rho.conj()).real, x, x)
    return float(norm), float(pur)


def quadrature_purity_norm(m: GaussianMoments, g: GridSpec = GridSpec()) -> tuple[float, float]:
    """(Tr rho, Tr rho^2) by trapezoidal quadrature of the position-space kernel."""
    require_valid(m)
    norm, pur = _norm_and_purity(m, g, g.half_width)
    norm2, pur2 = _norm_and_purity(m, g, g.half_width + 2.0)
    if abs(norm2 - norm) > 1e-6 or abs(pur2 - pur) > 1e-6:
        raise ValueError("quadrature tails have not converged; widen the grid")
    return norm, pur


def closed_form_gap(m: GaussianMoments, g: GridSpec = GridSpec()) -> tuple[float, float]:
    """Quadrature minus closed form for (norm, purity)."""
    norm, pur = quadrature_purity_norm(m, g)
    return norm - 1.0, pur - purity(m)
