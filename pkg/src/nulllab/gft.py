"""Generalized Fourier transform machinery.

The generalized characteristic function of a sample is

    phi_n(t) = (1/n) sum_j exp(omega * t * X_j),   omega = -(1 + i)/sqrt(2),

so that omega**2 = i. For a Gaussian N(u, s2) the transform has modulus
exp(-u t / sqrt(2)) and phase -u t/sqrt(2) + s2 t**2 / 2: the mean drives the
amplitude and the variance drives the phase. The functionals below invert
that relation for the null component.

Complex values are plain Python ``complex``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    EmptySample,
    ExponentOverflow,
    NonFiniteInput,
    ZeroFrequency,
    ZeroModulus,
)

OMEGA = complex(-1.0, -1.0) / math.sqrt(2.0)
SQRT2 = math.sqrt(2.0)

# exp() overflows a double near 709.78
EXP_GUARD = 700.0


@dataclass(frozen=True)
class GcharPair:
    """phi_n(t) and its t-derivative, evaluated in one pass."""

    value: complex
    deriv: complex
    t: float
    n: int


@dataclass(frozen=True)
class NullFunctionalInput:
    """Argument of the null-parameter functionals: g(t), g'(t) and t."""

    g: complex
    g_prime: complex
    t: float

    @classmethod
    def from_pair(cls, pair) -> "NullFunctionalInput":
        return cls(pair.value, pair.deriv, pair.t)


def as_array(samples) -> np.ndarray:
    """Extract a 1-d float array from a SampleSet or any array-like."""
    values = getattr(samples, "values", samples)
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample("EmptySample: no observations")
    if not np.all(np.isfinite(x)):
        bad = int(np.flatnonzero(~np.isfinite(x))[0])
        raise NonFiniteInput(f"non-finite observation at index {bad}")
    return x


def _check_finite(*values) -> None:
    for v in values:
        if not (math.isfinite(v.real) and math.isfinite(v.imag)):
            raise NonFiniteInput(f"non-finite functional input: {v!r}")


def gchar(samples, t: float) -> GcharPair:
    """Empirical generalized characteristic function and its derivative.

    Sums are exactly rounded (``math.fsum``), so the result does not depend on
    summation order and repeated calls are bit-identical.
    """
    x = as_array(samples)
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteInput(f"frequency must be finite, got {t}")
    n = x.size
    theta = x * (t / SQRT2)
    worst = int(np.argmin(theta))
    if -theta[worst] > EXP_GUARD:
        raise ExponentOverflow(
            f"exponent {-theta[worst]:.6g} at sample index {worst} exceeds "
            f"guard {EXP_GUARD}",
            index=worst,
        )
    amp = np.exp(-theta)
    c = amp * np.cos(theta)
    s = amp * np.sin(theta)
    # exp(omega t x) = exp(-theta) * (cos theta - i sin theta)
    value = complex(math.fsum(c.tolist()) / n, 0.0 - math.fsum(s.tolist()) / n)
    xs = complex(
        math.fsum((x * c).tolist()) / n, 0.0 - math.fsum((x * s).tolist()) / n
    )
    return GcharPair(value=value, deriv=OMEGA * xs, t=t, n=n)


def u0_functional(inp: NullFunctionalInput) -> float:
    """Mean functional: -sqrt(2) * d|g|/dt / |g|, with d|g|/dt = Re(conj(g) g')/|g|."""
    g, gp = inp.g, inp.g_prime
    _check_finite(g, gp)
    mod2 = abs(g) ** 2
    if mod2 == 0.0:
        raise ZeroModulus("ZeroModulus: |g(t)| = 0")
    return -SQRT2 * (g.conjugate() * gp).real / mod2


def sigma0_functional(inp: NullFunctionalInput) -> float:
    """Variance functional sqrt(2) Re(omega conj(g) g') / (t |g|^2).

    Not clamped: a negative value on noisy input is returned as is.
    """
    g, gp, t = inp.g, inp.g_prime, float(inp.t)
    _check_finite(g, gp)
    if t == 0.0:
        raise ZeroFrequency("ZeroFrequency: variance functional needs t != 0")
    mod2 = abs(g) ** 2
    if mod2 == 0.0:
        raise ZeroModulus("ZeroModulus: |g(t)| = 0")
    return SQRT2 * (OMEGA * g.conjugate() * gp).real / (t * mod2)


def eps_functional_raw(g_value: complex, t: float, u0: float, sigma0_sq: float) -> complex:
    """1 - exp(-omega u0 t - i sigma0_sq t^2 / 2) g(t), as a complex number."""
    _check_finite(complex(g_value))
    expo = -OMEGA * u0 * t - 1j * sigma0_sq * t * t / 2.0
    if expo.real > EXP_GUARD:
        raise ExponentOverflow(
            f"exponent {expo.real:.6g} exceeds guard {EXP_GUARD} (u0 t / sqrt 2)"
        )
    return 1.0 - cmath.exp(expo) * complex(g_value)


def eps_functional(
    g_value: complex, t: float, u0: float, sigma0_sq: float, clamp: bool = True
) -> float:
    """Proportion functional: real part of the raw expression, clamped to [0, 1]."""
    val = eps_functional_raw(g_value, t, u0, sigma0_sq).real
    if clamp:
        return min(1.0, max(0.0, val))
    return val


class PerturbationBounds(NamedTuple):
    lhs_u0: float
    rhs_u0: float
    lhs_sigma: float
    rhs_sigma: float


def perturbation_bound_check(
    f: NullFunctionalInput, g: NullFunctionalInput
) -> PerturbationBounds:
    """Both sides of the perturbation inequalities for the two functionals.

    The right-hand sides use |f| + |g| as the factor multiplying |f - g|,
    which is what the triangle-inequality argument produces.
    """
    if f.t != g.t:
        raise ValueError("f and g must be evaluated at the same t")
    t = float(f.t)
    u0_f, u0_g = u0_functional(f), u0_functional(g)
    s_f, s_g = sigma0_functional(f), sigma0_functional(g)
    mf, mg = abs(f.g), abs(g.g)
    diff = abs(f.g - g.g)
    ddiff = abs(f.g_prime - g.g_prime)
    gp = abs(g.g_prime)

    rhs_u0 = ((abs(u0_g) * (mf + mg) + SQRT2 * gp) * diff + SQRT2 * mf * ddiff) / mf**2
    rhs_sigma = (
        (abs(s_g) * abs(t) * (mf + mg) + SQRT2 * gp) * diff + SQRT2 * mf * ddiff
    ) / (abs(t) * mf**2)
    return PerturbationBounds(abs(u0_g - u0_f), rhs_u0, abs(s_g - s_f), rhs_sigma)
