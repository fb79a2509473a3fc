"""Exact currents for the potential-free model and strong-dephasing asymptotics.

These are rational functions of the rates; for very long chains (N >= 10**6)
they are evaluated in ``fractions.Fraction`` arithmetic to avoid cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .lattice import CouplingSpec, LatticeSpec
from .potentials import ValidationError

FORMULAS = ("chain", "box", "znidaric", "strong_noise_leading", "strong_noise_lower")
_EXACT_FROM = 10**6


@dataclass(frozen=True)
class ClosedFormResult:
    value: float
    formula_id: str


def _rates(c: CouplingSpec, exact: bool):
    conv = Fraction if exact else float
    return (conv(c.alpha_in_l), conv(c.alpha_out_l), conv(c.alpha_in_r),
            conv(c.alpha_out_r), conv(c.beta))


def closed_form_dd(c: CouplingSpec, dims) -> float:
    """Current through a potential-free box N1 x ... x Nd (transport along axis 1)."""
    lattice = dims if isinstance(dims, LatticeSpec) else LatticeSpec(tuple(dims))
    c.require_both_ends()
    N1 = lattice.length
    if N1 < 2:
        raise ValidationError("closed form needs N1 >= 2")
    exact = N1 >= _EXACT_FROM
    ail, aol, air, aor, beta = _rates(c, exact)
    zl, zr = ail + aol, air + aor
    num = 2 * (ail * aor - aol * air) * lattice.cross_section
    den = (beta * (N1 - 1) + zl + zr) * zl * zr + zl + zr
    return float(num / den)


def closed_form_1d(c: CouplingSpec, N: int) -> float:
    """2*Delta / (zeta_l + zeta_r + zeta_l*zeta_r*(zeta_l + zeta_r + beta*(N - 1)))."""
    c.require_both_ends()
    if N < 2:
        raise ValidationError("closed form needs N >= 2")
    exact = N >= _EXACT_FROM
    ail, aol, air, aor, beta = _rates(c, exact)
    zl, zr = ail + aol, air + aor
    return float(2 * (ail * aor - aol * air) / (zl + zr + zl * zr * (zl + zr + beta * (N - 1))))


def znidaric_map(Gamma: float, mu: float, gamma: float) -> CouplingSpec:
    """Rates of the symmetric-bath parametrization (Gamma, mu, gamma)."""
    return CouplingSpec(Gamma * (1 - mu) / 2, Gamma * (1 + mu) / 2,
                        Gamma * (1 + mu) / 2, Gamma * (1 - mu) / 2, 2 * gamma)


def znidaric_current(Gamma: float, mu: float, gamma: float, N: int) -> float:
    """-mu / (Gamma + 1/Gamma + gamma*(N - 1))."""
    if not Gamma > 0:
        raise ValidationError("Gamma must be positive")
    if not -1 <= mu <= 1:
        raise ValidationError("mu must lie in [-1, 1]")
    if gamma < 0:
        raise ValidationError("gamma must be nonnegative")
    if N < 2:
        raise ValidationError("N must be at least 2")
    return -mu / (Gamma + 1 / Gamma + gamma * (N - 1))


def strong_noise_leading(c: CouplingSpec, N: int) -> float:
    """Limit of beta * J_beta(N) as beta -> infinity (any bounded potential)."""
    c.require_both_ends()
    if N < 2:
        raise ValidationError("N must be at least 2")
    return 2 * c.delta / (c.zeta_l * c.zeta_r * (N - 1))


def strong_noise_constant(c: CouplingSpec) -> float:
    """3 + max(zeta_l, zeta_r, 1)."""
    return 3.0 + max(c.zeta_l, c.zeta_r, 1.0)


def strong_noise_threshold(c: CouplingSpec, v_sup: float) -> float:
    """Smallest admissible epsilon (exclusive) for the lower bound at beta = epsilon*N."""
    return 4.0 * v_sup * strong_noise_constant(c)


def strong_noise_lower_bound(c: CouplingSpec, epsilon: float, N: int, v_sup: float) -> float:
    """Lower bound on J at beta = epsilon*N for any potential with sup|v| <= v_sup.

    Requires epsilon > 4*v_sup*(3 + max(zeta_l, zeta_r, 1)) and Delta > 0.
    The ``beta`` field of ``c`` is ignored.
    """
    c.require_both_ends()
    if N < 2:
        raise ValidationError("N must be at least 2")
    if v_sup < 0:
        raise ValidationError("v_sup must be nonnegative")
    if not c.delta > 0:
        raise ValidationError("the lower bound is stated for Delta > 0")
    threshold = strong_noise_threshold(c, v_sup)
    if not epsilon > threshold:
        raise ValidationError(f"epsilon must exceed 4*v_sup*C = {threshold!r}, got {epsilon!r}")
    zl, zr = c.zeta_l, c.zeta_r
    K = strong_noise_constant(c)
    den = zl + zr + zl * zr * (zl + zr + epsilon * N * (N - 1))
    return 4 * c.delta / den * (0.5 - 2 * v_sup * K / epsilon)


def evaluate(formula_id: str, *args, **kwargs) -> ClosedFormResult:
    """Dispatch by formula id and tag the result."""
    fn = {
        "chain": closed_form_1d,
        "box": closed_form_dd,
        "znidaric": znidaric_current,
        "strong_noise_leading": strong_noise_leading,
        "strong_noise_lower": strong_noise_lower_bound,
    }.get(formula_id)
    if fn is None:
        raise ValidationError(f"unknown formula {formula_id!r}")
    value = fn(*args, **kwargs)
    if not math.isfinite(value):
        raise ValidationError(f"{formula_id} gave a non-finite value")
    return ClosedFormResult(value, formula_id)
