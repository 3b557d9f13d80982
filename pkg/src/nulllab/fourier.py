"""Ordinary empirical characteristic function and its plug-in functionals.

For N(u, s2) the characteristic function is exp(-s2 t^2/2) * exp(i u t): the
variance sets the amplitude and the mean sets the phase. These functionals
recover the null parameters when high-frequency damping kills the alternative
(elevated-variance models). The choice of t for this family is heuristic; the
calibration t_n(gamma) is reused without a consistency guarantee.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import ExponentOverflow, NonFiniteInput, ZeroFrequency, ZeroModulus
from .gft import EXP_GUARD, NullFunctionalInput, _check_finite, as_array


@dataclass(frozen=True)
class CharPair:
    value: complex
    deriv: complex
    t: float
    n: int


def char(samples, t: float) -> CharPair:
    """psi_n(t) = mean(exp(i t X)) and its t-derivative mean(i X exp(i t X))."""
    x = as_array(samples)
    t = float(t)
    if not math.isfinite(t):
        raise NonFiniteInput(f"frequency must be finite, got {t}")
    n = x.size
    theta = x * t
    c = np.cos(theta)
    s = np.sin(theta)
    value = complex(math.fsum(c.tolist()) / n, math.fsum(s.tolist()) / n)
    # i * (xc + i xs) = -xs + i xc
    deriv = complex(
        0.0 - math.fsum((x * s).tolist()) / n, math.fsum((x * c).tolist()) / n
    )
    return CharPair(value=value, deriv=deriv, t=t, n=n)


def gev_u0_functional(inp: NullFunctionalInput) -> float:
    """Phase slope Im(conj(g) g') / |g|^2."""
    g, gp = inp.g, inp.g_prime
    _check_finite(g, gp)
    mod2 = abs(g) ** 2
    if mod2 == 0.0:
        raise ZeroModulus("ZeroModulus: |g(t)| = 0")
    return (g.conjugate() * gp).imag / mod2


def gev_sigma0_functional(inp: NullFunctionalInput) -> float:
    """-(1/t) d log|g| / dt = -Re(conj(g) g') / (t |g|^2)."""
    g, gp, t = inp.g, inp.g_prime, float(inp.t)
    _check_finite(g, gp)
    if t == 0.0:
        raise ZeroFrequency("ZeroFrequency: variance functional needs t != 0")
    mod2 = abs(g) ** 2
    if mod2 == 0.0:
        raise ZeroModulus("ZeroModulus: |g(t)| = 0")
    return -(g.conjugate() * gp).real / (t * mod2)


def gev_eps_functional_raw(
    g_value: complex, t: float, u0: float, sigma0_sq: float
) -> complex:
    _check_finite(complex(g_value))
    damp = sigma0_sq * t * t / 2.0
    if damp > EXP_GUARD:
        raise ExponentOverflow(f"exponent {damp:.6g} exceeds guard {EXP_GUARD}")
    return 1.0 - cmath.exp(complex(damp, -u0 * t)) * complex(g_value)


def gev_eps_functional(
    g_value: complex, t: float, u0: float, sigma0_sq: float, clamp: bool = True
) -> float:
    """1 - Re(exp(-i u0 t + sigma0_sq t^2/2) g(t)), clamped to [0, 1]."""
    val = gev_eps_functional_raw(g_value, t, u0, sigma0_sq).real
    if clamp:
        return min(1.0, max(0.0, val))
    return val
