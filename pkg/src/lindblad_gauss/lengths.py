"""Correlation, decoherence and mixing lengths of a Gaussian state.

    d_corr  = sqrt(2 C)                      decay of the diagonal <r|rho|r>
    d_decoh = sqrt(C / (2 Omega^2))          decay of the anti-diagonal <r|rho|-r>
    d_mix   = sqrt(8 C / (4 Omega^2 - 1))    mixed-state correlation; inf when pure

They satisfy d_decoh^-2 = d_corr^-2 + 4 d_mix^-2 identically.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .state import GaussianMoments, require_valid, _check_temperature, _coth


@dataclass(frozen=True)
class LengthScales:
    d_corr: float
    d_decoh: float
    d_mix: float
    omega_sq: float

    @property
    def inv_mix_sq(self) -> float:
        return 0.0 if math.isinf(self.d_mix) else 1.0 / self.d_mix**2


def length_scales(m: GaussianMoments) -> LengthScales:
    require_valid(m)
    w2 = m.omega_sq
    excess = 4.0 * w2 - 1.0
    d_mix = math.inf if excess <= 0.0 else math.sqrt(8.0 * m.C / excess)
    return LengthScales(
        d_corr=math.sqrt(2.0 * m.C),
        d_decoh=math.sqrt(m.C / (2.0 * w2)),
        d_mix=d_mix,
        omega_sq=w2,
    )


def composition_residual(m: GaussianMoments) -> float:
    """d_decoh^-2 - d_corr^-2 - 4 d_mix^-2 (zero up to rounding)."""
    ls = length_scales(m)
    return ls.d_decoh**-2 - ls.d_corr**-2 - 4.0 * ls.inv_mix_sq


def thermal_lengths(T_tilde: float) -> LengthScales:
    _check_temperature(T_tilde)
    u = 0.5 / T_tilde
    try:
        d_mix = math.sqrt(2.0 * math.sinh(2.0 * u))
    except OverflowError:
        d_mix = math.inf
    c = _coth(u)
    return LengthScales(
        d_corr=math.sqrt(c),
        d_decoh=math.sqrt(math.tanh(u)),
        d_mix=d_mix,
        omega_sq=0.25 * c * c,
    )
