"""Moment dynamics of the Lindblad damped oscillator.

Second moments x = (A, B, C) obey dx/dtau = M x + d and first moments
m = (mR, mP) obey dm/dtau = F m.  Two flavours of (M, d) exist:

``Mode.AS_PRINTED``
    the reference moment matrix and drive, taken verbatim.
``Mode.REDERIVED``
    obtained by inserting the Gaussian ambiguity ansatz into the ambiguity
    transport equation.  This is the exact closure of that equation and the
    one whose eigenvalues are -2 gamma, -2 gamma +/- 2i omega.

The reference stationary formulas and thermal calibration are provided
verbatim as well; ``audit`` quantifies how far the three disagree.

Every drift matrix here has the form -a I + N with N zero on the diagonal
and tridiagonal, so N^3 = -k N (Cayley-Hamilton) and exp(M tau) is a
three-term polynomial in N with scalar trigonometric coefficients.  That is
the closed form used by ``propagate``; ``propagate_numeric`` is an
independent RK4 integration of the same linear system.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .state import GaussianMoments, thermal_state, _check_temperature, _coth

PHYSICALITY_TOL = 1e-9


class Mode(str, enum.Enum):
    AS_PRINTED = "as-printed"
    REDERIVED = "rederived"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class LindbladParams:
    """Dimensionless couplings; ``gamma`` is the friction (imaginary part of h13).

    ``thermal_T`` and ``provenance`` are set by :func:`thermal_calibration`.
    """

    gamma: float
    h11: float
    h33: float
    h13r: float
    omega: float = 1.0
    thermal_T: Optional[float] = None
    provenance: str = ""

    def __post_init__(self):
        for name in ("gamma", "h11", "h33", "h13r", "omega"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.omega <= 0:
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        for name in ("gamma", "h11", "h33"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)!r}")

    @property
    def coupling_margin(self) -> float:
        """h11*h33 - h13r^2 - gamma^2; negative values cannot come from a valid Lindblad generator."""
        return self.h11 * self.h33 - self.h13r**2 - self.gamma**2

    @property
    def coupling_ok(self) -> bool:
        return self.coupling_margin >= 0.0


@dataclass(frozen=True)
class InitialConditions:
    """Uncorrelated initial state: C(0) = a1, A(0) = b1, B(0) = 0."""

    a1: float = 0.5
    b1: float = 0.5
    mR0: float = 0.0
    mP0: float = 0.0

    def __post_init__(self):
        for name in ("a1", "b1", "mR0", "mP0"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.a1 <= 0 or self.b1 <= 0:
            raise ValueError(f"a1 and b1 must be positive, got a1={self.a1!r} b1={self.b1!r}")
        if self.a1 * self.b1 < 0.25 - 1e-12:
            raise ValueError(f"a1*b1 = {self.a1 * self.b1!r} violates the uncertainty bound 1/4")

    def state(self) -> GaussianMoments:
        return GaussianMoments(A=self.b1, B=0.0, C=self.a1, mR=self.mR0, mP=self.mP0)

    @classmethod
    def from_state(cls, m: GaussianMoments) -> "InitialConditions":
        if m.B != 0.0:
            raise ValueError("initial conditions carry no position-momentum correlation")
        return cls(a1=m.C, b1=m.A, mR0=m.mR, mP0=m.mP)


@dataclass(frozen=True, eq=False)
class MomentSystem:
    M: np.ndarray
    d: np.ndarray
    F: np.ndarray
    mode: Mode


def moment_system(p: LindbladParams, mode: Mode | str) -> MomentSystem:
    mode = Mode(mode)
    g, w2 = p.gamma, p.omega**2
    if mode is Mode.AS_PRINTED:
        M = np.array([
            [-2 * g, -2 * w2, 0.0],
            [1.0, -2 * g, -2 * w2],
            [0.0, 2.0, -2 * g],
        ])
        d = np.array([p.h11, -p.h13r, p.h33])
    else:
        M = np.array([
            [-2 * g, 2 * w2, 0.0],
            [-1.0, -2 * g, w2],
            [0.0, -2.0, -2 * g],
        ])
        d = np.array([p.h11, p.h13r, p.h33])
    F = np.array([[-g, -1.0], [w2, -g]])
    return MomentSystem(M=M, d=d, F=F, mode=mode)


# -- closed-form exponentials ---------------------------------------------------

_SERIES_TERMS = 14


def _entire(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """S(z) = sin(w)/w, Cf(z) = (1 - cos w)/w^2, D(z) = (w - sin w)/w^3 with w = sqrt(z).

    All three are entire in z and real for real z (negative z gives the
    hyperbolic versions).  Small |z| uses the Taylor series to avoid
    cancellation.
    """
    z = np.asarray(z, dtype=float)
    S = np.empty_like(z)
    Cf = np.empty_like(z)
    D = np.empty_like(z)
    small = np.abs(z) < 1.0
    if np.any(small):
        zs = z[small]
        s_acc = np.zeros_like(zs)
        c_acc = np.zeros_like(zs)
        d_acc = np.zeros_like(zs)
        power = np.ones_like(zs)
        for n in range(_SERIES_TERMS):
            sign = -1.0 if n % 2 else 1.0
            s_acc += sign * power / math.factorial(2 * n + 1)
            c_acc += sign * power / math.factorial(2 * n + 2)
            d_acc += sign * power / math.factorial(2 * n + 3)
            power = power * zs
        S[small], Cf[small], D[small] = s_acc, c_acc, d_acc
    big = ~small
    if np.any(big):
        zb = z[big]
        w = np.sqrt(zb.astype(complex))
        sw, cw = np.sin(w), np.cos(w)
        S[big] = (sw / w).real
        Cf[big] = ((1.0 - cw) / zb).real
        D[big] = ((w - sw) / (zb * w)).real
    return S, Cf, D


def _split_drift(M: np.ndarray) -> tuple[float, np.ndarray, float]:
    """Write M = -a I + N with zero-diagonal tridiagonal N; return (a, N, k) with N^3 = -k N."""
    n = M.shape[0]
    diag = np.diag(M)
    if not np.allclose(diag, diag[0], rtol=0, atol=1e-14):
        raise ValueError("closed-form propagation needs a constant diagonal")
    a = -float(diag[0])
    N = M + a * np.eye(n)
    if n == 3:
        if N[0, 2] != 0.0 or N[2, 0] != 0.0:
            raise ValueError("closed-form propagation needs a tridiagonal drift matrix")
        k = -(N[0, 1] * N[1, 0] + N[1, 2] * N[2, 1])
    elif n == 2:
        k = -N[0, 1] * N[1, 0]
    else:
        raise ValueError("only 2x2 and 3x3 drift matrices are supported")
    return a, N, float(k)


def _flow(M: np.ndarray, v: np.ndarray, times: np.ndarray) -> np.ndarray:
    """exp(M tau) v for each tau; returns shape (len(times), dim)."""
    a, N, k = _split_drift(M)
    t = times[:, None]
    S, Cf, _ = _entire(k * times**2)
    S, Cf = S[:, None], Cf[:, None]
    decay = np.exp(-a * t)
    Nv = N @ v
    if M.shape[0] == 2:
        # N^2 = -k I, so exp(N tau) = cos(kappa tau) I + tau S N
        cos = 1.0 - k * t * t * Cf
        return decay * (cos * v + t * S * Nv)
    return decay * (v + t * S * Nv + t * t * Cf * (N @ Nv))


def _forced_response(M: np.ndarray, d: np.ndarray, times: np.ndarray) -> np.ndarray:
    """integral_0^tau exp(M s) d ds for an undamped (a = 0) drift matrix."""
    a, N, k = _split_drift(M)
    if a != 0.0:
        raise ValueError("forced response closed form is only used without damping")
    t = times[:, None]
    _, Cf, D = _entire(k * times**2)
    Nd = N @ d
    return t * d + t**2 * Cf[:, None] * Nd + t**3 * D[:, None] * (N @ Nd)


# -- trajectories ---------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    """Time series of Gaussian moments plus derived length scales.

    ``flagged`` is set when any sample violates A > 0, C > 0 or
    Omega^2 >= 1/4 - 1e-9; derived columns are NaN at such samples.
    """

    times: np.ndarray
    moments: np.ndarray  # (n, 5): A, B, C, mR, mP
    mode: Mode
    params: LindbladParams
    omega_sq: np.ndarray = field(init=False)
    purity: np.ndarray = field(init=False)
    d_corr: np.ndarray = field(init=False)
    d_decoh: np.ndarray = field(init=False)
    d_mix: np.ndarray = field(init=False)
    flagged: bool = field(init=False)
    violations: list[str] = field(init=False)

    def __post_init__(self):
        A, B, C = self.moments[:, 0], self.moments[:, 1], self.moments[:, 2]
        w2 = A * C - B * B
        bad = ~np.isfinite(self.moments).all(axis=1) | (A <= 0) | (C <= 0) | (w2 < 0.25 - PHYSICALITY_TOL)
        self.flagged = bool(bad.any())
        self.violations = [
            f"tau={float(self.times[i])!r}: A={float(A[i])!r} C={float(C[i])!r} omega_sq={float(w2[i])!r}"
            for i in np.flatnonzero(bad)[:10]
        ]
        w2 = np.where(bad, np.nan, np.maximum(w2, 0.25))
        Cv = np.where(bad, np.nan, C)
        excess = 4.0 * w2 - 1.0
        with np.errstate(divide="ignore", invalid="ignore"):
            self.omega_sq = w2
            self.purity = 0.5 / np.sqrt(w2)
            self.d_corr = np.sqrt(2.0 * Cv)
            self.d_decoh = np.sqrt(Cv / (2.0 * w2))
            self.d_mix = np.where(excess > 0, np.sqrt(8.0 * Cv / excess), np.inf)
        self.d_mix = np.where(bad, np.nan, self.d_mix)

    def __len__(self) -> int:
        return len(self.times)

    def state(self, i: int) -> GaussianMoments:
        return GaussianMoments(*(float(x) for x in self.moments[i]))

    @property
    def states(self) -> list[GaussianMoments]:
        return [self.state(i) for i in range(len(self))]

    @property
    def second_moments(self) -> np.ndarray:
        return self.moments[:, :3]

    @property
    def uncertainty(self) -> np.ndarray:
        """The Schrodinger-Robertson product Omega^2 at each sample."""
        return self.omega_sq


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("times must be a non-empty 1-D sequence")
    if times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("times must be increasing and start at tau >= 0")
    return times


def propagate(
    p: LindbladParams,
    mode: Mode | str,
    ic: InitialConditions,
    times: Sequence[float],
) -> Trajectory:
    """Exact evolution of all five moments at the requested times."""
    times = _check_times(times)
    sys = moment_system(p, mode)
    x0 = ic.state().as_array()
    if p.gamma > 0:
        x_inf = stationary_solve(p, sys.mode)
        second = _flow(sys.M, x0[:3] - x_inf, times) + x_inf
    else:
        second = _flow(sys.M, x0[:3], times) + _forced_response(sys.M, sys.d, times)
    first = _flow(sys.F, x0[3:], times)
    return Trajectory(times, np.hstack([second, first]), sys.mode, p)


def _max_stable_step(p: LindbladParams) -> float:
    return 0.1 / max(1.0, p.gamma, p.omega**2)


def propagate_numeric(
    p: LindbladParams,
    mode: Mode | str,
    ic: InitialConditions,
    t_end: float,
    dt: float,
) -> Trajectory:
    """Classical RK4 on the 5-dimensional linear system, sampled every step."""
    if not (t_end > 0 and dt > 0):
        raise ValueError("t_end and dt must be positive")
    if dt > _max_stable_step(p):
        raise ValueError(f"dt={dt!r} exceeds the allowed step {_max_stable_step(p)!r}")
    sys = moment_system(p, mode)
    K = np.zeros((5, 5))
    K[:3, :3] = sys.M
    K[3:, 3:] = sys.F
    e = np.zeros(5)
    e[:3] = sys.d

    n = max(1, int(round(t_end / dt)))
    h = t_end / n
    out = np.empty((n + 1, 5))
    y = ic.state().as_array()
    out[0] = y
    for i in range(n):
        k1 = K @ y + e
        k2 = K @ (y + 0.5 * h * k1) + e
        k3 = K @ (y + 0.5 * h * k2) + e
        k4 = K @ (y + h * k3) + e
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        out[i + 1] = y
    times = h * np.arange(n + 1)
    return Trajectory(times, out, sys.mode, p)


# -- stationary states ----------------------------------------------------------


def stationary_formula(p: LindbladParams) -> np.ndarray:
    """Reference closed-form asymptotic (A, B, C), valid in units where omega = 1."""
    if p.gamma <= 0:
        raise ValueError("no stationary state for gamma = 0")
    if p.omega != 1.0:
        raise ValueError("the closed-form stationary values assume omega = 1")
    g = p.gamma
    den = g * g + 4.0
    A = (p.h11 * (g * g + 2.0) + 2.0 * p.h33 + 2.0 * g * p.h13r) / (g * den)
    B = (p.h11 - p.h33 - 2.0 * g * p.h13r) / den
    C = (2.0 * p.h11 + p.h33 * (g * g + 2.0) - 2.0 * g * p.h13r) / (g * den)
    return np.array([A, B, C])


def stationary_solve(p: LindbladParams, mode: Mode | str) -> np.ndarray:
    """Fixed point of the selected moment system, i.e. the solution of M x + d = 0."""
    if p.gamma <= 0:
        raise ValueError("no stationary state for gamma = 0")
    sys = moment_system(p, mode)
    try:
        return np.linalg.solve(sys.M, -sys.d)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular drift matrix for {p}") from exc


def thermal_calibration(T_tilde: float, gamma: float, mode: Mode | str) -> LindbladParams:
    """Couplings whose stationary state is the thermal state at T_tilde.

    AS_PRINTED returns the reference calibration h11 = h33 = (gamma/2) coth(1/2T).
    REDERIVED uses twice that value, the choice for which the thermal state
    is an exact fixed point of the rederived moment system.
    """
    _check_temperature(T_tilde)
    if not (math.isfinite(gamma) and gamma > 0):
        raise ValueError(f"gamma must be positive, got {gamma!r}")
    mode = Mode(mode)
    c = _coth(0.5 / T_tilde)
    if mode is Mode.AS_PRINTED:
        h = 0.5 * gamma * c
        note = "reference calibration h11 = h33 = (gamma/2) coth(1/(2T)), h13r = 0"
    else:
        h = gamma * c
        note = "rederived calibration h11 = h33 = gamma coth(1/(2T)), h13r = 0 (twice the reference value)"
    return LindbladParams(gamma=gamma, h11=h, h33=h, h13r=0.0, thermal_T=T_tilde, provenance=note)


# -- audit ----------------------------------------------------------------------


def _sorted_eigs(X: np.ndarray) -> np.ndarray:
    ev = np.linalg.eigvals(X)
    ev = np.where(np.abs(ev.imag) < 1e-12, ev.real + 0j, ev)
    return ev[np.lexsort((ev.real, np.round(ev.imag, 9)))]


@dataclass(eq=False)
class ConsistencyReport:
    params: LindbladParams
    eigenvalues: dict[Mode, np.ndarray]
    first_moment_eigenvalues: dict[Mode, np.ndarray]
    fixed_points: dict[Mode, np.ndarray]
    formula: Optional[np.ndarray]
    formula_residuals: dict[Mode, float]
    differences: dict[str, float]
    matches_stated_decay: dict[Mode, bool]
    thermal_residuals: Optional[dict[Mode, float]]
    coupling_margin: float
    coupling_ok: bool


def stated_decay_eigenvalues(p: LindbladParams) -> np.ndarray:
    """Eigenvalues implied by decay as exp(-2 gamma tau) and exp(+/-2i omega tau - 2 gamma tau)."""
    g, w = p.gamma, p.omega
    return np.array([-2 * g - 2j * w, -2 * g + 0j, -2 * g + 2j * w])


def audit(p: LindbladParams) -> ConsistencyReport:
    if p.gamma <= 0:
        raise ValueError("audit needs gamma > 0")
    modes = (Mode.AS_PRINTED, Mode.REDERIVED)
    systems = {m: moment_system(p, m) for m in modes}
    eigs = {m: _sorted_eigs(systems[m].M) for m in modes}
    feigs = {m: _sorted_eigs(systems[m].F) for m in modes}
    fixed = {m: stationary_solve(p, m) for m in modes}
    stated = _sorted_eigs(np.diag(stated_decay_eigenvalues(p)))
    matches = {m: bool(np.allclose(eigs[m], stated, atol=1e-10)) for m in modes}

    formula = stationary_formula(p) if p.omega == 1.0 else None
    formula_res: dict[Mode, float] = {}
    diffs = {
        "as-printed_vs_rederived": float(np.max(np.abs(fixed[Mode.AS_PRINTED] - fixed[Mode.REDERIVED]))),
    }
    if formula is not None:
        for m in modes:
            sys = systems[m]
            formula_res[m] = float(np.max(np.abs(sys.M @ formula + sys.d)))
            diffs[f"formula_vs_{m.value}"] = float(np.max(np.abs(formula - fixed[m])))

    thermal_res = None
    if p.thermal_T is not None:
        xt = thermal_state(p.thermal_T).as_array()[:3]
        thermal_res = {m: float(np.max(np.abs(systems[m].M @ xt + systems[m].d))) for m in modes}

    return ConsistencyReport(
        params=p,
        eigenvalues=eigs,
        first_moment_eigenvalues=feigs,
        fixed_points=fixed,
        formula=formula,
        formula_residuals=formula_res,
        differences=diffs,
        matches_stated_decay=matches,
        thermal_residuals=thermal_res,
        coupling_margin=p.coupling_margin,
        coupling_ok=p.coupling_ok,
    )


def with_overrides(p: LindbladParams, **changes) -> LindbladParams:
    """Copy of ``p`` with some couplings replaced; drops any thermal provenance."""
    return replace(p, thermal_T=None, provenance="", **changes)
