"""Estimation pipelines for the null parameters and the non-null proportion.

Everything is evaluated at one frequency t = sqrt(gamma * log n) (natural
log): the null parameters come from the two functionals applied to the
empirical transform, and the proportion from the proportion functional with
either the true or the plugged-in null parameters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import special

from . import fourier, gft
from .errors import (
    DegenerateSampleSize,
    DegenerateVarianceWarning,
    GammaWindowWarning,
    NearZeroModulusWarning,
    ValidationError,
)
from .mixtures import variance_bound_params

SIGMA_FLOOR = 1e-12
NEAR_ZERO_REL = 1e-6
FAMILIES = ("GEM", "GEV")


@dataclass(frozen=True)
class EstimatorConfig:
    gamma: float = 0.2
    t_override: float | None = None
    family: str = "GEM"
    clamp_sigma: bool = True
    A: float | None = None

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValidationError(f"gamma must be > 0, got {self.gamma}")
        if self.family not in FAMILIES:
            raise ValidationError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if self.t_override is not None and not self.t_override > 0:
            raise ValidationError("t_override must be > 0")
        if self.A is not None and not self.A > 0:
            raise ValidationError("A must be > 0")

    @classmethod
    def from_dict(cls, d: dict) -> "EstimatorConfig":
        extra = set(d) - {"gamma", "t_override", "family", "clamp_sigma", "A"}
        if extra:
            raise ValidationError(f"unknown keys in estimator: {sorted(extra)}")
        return cls(**d)


@dataclass
class Diagnostics:
    gchar_modulus: float
    raw_eps_complex: complex
    raw_sigma0_sq: float
    variance_bound: float | None = None
    warnings: list = field(default_factory=list)


@dataclass
class EstimateReport:
    u0_hat: float
    sigma0_sq_hat: float
    eps_hat: float
    t_used: float
    gamma: float
    n: int
    family: str
    diagnostics: Diagnostics

    def to_dict(self) -> dict:
        d = asdict(self)
        z = self.diagnostics.raw_eps_complex
        d["diagnostics"]["raw_eps_complex"] = {"re": z.real, "im": z.imag}
        return d


class NullEstimate(NamedTuple):
    u0_hat: float
    sigma0_sq_hat: float
    t_used: float


class GevEstimate(NamedTuple):
    u0_hat: float
    sigma0_sq_hat: float
    eps_hat: float
    t_used: float


def t_n(gamma: float, n: int) -> float:
    """Frequency calibration sqrt(gamma * ln n)."""
    if n < 2:
        raise DegenerateSampleSize(f"DegenerateSampleSize: need n >= 2, got {n}")
    if not gamma > 0:
        raise ValidationError(f"gamma must be > 0, got {gamma}")
    return math.sqrt(gamma * math.log(n))


def frequency(cfg: EstimatorConfig, n: int) -> float:
    if n < 2:
        raise DegenerateSampleSize(f"DegenerateSampleSize: need n >= 2, got {n}")
    if cfg.t_override is not None:
        return float(cfg.t_override)
    return t_n(cfg.gamma, n)


def _clamp_sigma(raw: float, cfg: EstimatorConfig) -> float:
    return max(raw, SIGMA_FLOOR) if cfg.clamp_sigma else raw


def _window_notes(cfg: EstimatorConfig) -> list:
    if cfg.A is not None and cfg.t_override is None and cfg.gamma >= 1.0 / cfg.A:
        return [(GammaWindowWarning,
                 f"gamma={cfg.gamma} is outside the consistency window (0, 1/A={1.0 / cfg.A:.4g})")]
    return []


def _near_zero(modulus: float, log_ref: float, x, t: float) -> bool:
    """modulus < NEAR_ZERO_REL * exp(log_ref), or heavy cancellation in the mean.

    Compared in log space: when the modulus is tiny the location estimate
    behind log_ref is itself garbage and exp(log_ref) can overflow.
    """
    if modulus == 0.0:
        return True
    log_rel = math.log(modulus) - math.log(NEAR_ZERO_REL)
    if log_rel < log_ref:
        return True
    # mean |exp(omega t X)| = mean exp(-t X / sqrt2)
    log_scale = special.logsumexp(-t * x / gft.SQRT2) - math.log(x.size)
    return log_rel < log_scale


def _emit(notes) -> None:
    for category, message in notes:
        warnings.warn(message, category, stacklevel=3)


# --------------------------------------------------------------------------
# GEM (generalized transform)


def gem_from_pair(pair) -> tuple[float, float]:
    """(u0, raw sigma0_sq) from a (phi_n, phi_n') pair."""
    inp = gft.NullFunctionalInput.from_pair(pair)
    return gft.u0_functional(inp), gft.sigma0_functional(inp)


def _gem_core(samples, cfg: EstimatorConfig):
    x = gft.as_array(samples)
    t = frequency(cfg, x.size)
    pair = gft.gchar(x, t)
    u0_hat, s2_raw = gem_from_pair(pair)
    notes = _window_notes(cfg)
    modulus = abs(pair.value)
    if _near_zero(modulus, -u0_hat * t / gft.SQRT2, x, t):
        notes.append((NearZeroModulusWarning,
                      f"NearZeroModulus: |phi_n(t)|={modulus:.3g} is tiny; estimate unstable"))
    if s2_raw < SIGMA_FLOOR or np.ptp(x) == 0.0:
        notes.append((DegenerateVarianceWarning,
                      f"sigma0_sq estimate {s2_raw:.3g} is degenerate; clamped to {SIGMA_FLOOR}"))
    return x, t, pair, u0_hat, s2_raw, notes


def estimate_null_gem(samples, cfg: EstimatorConfig = EstimatorConfig()) -> NullEstimate:
    _, t, _, u0_hat, s2_raw, notes = _gem_core(samples, cfg)
    _emit(notes)
    return NullEstimate(u0_hat, _clamp_sigma(s2_raw, cfg), t)


def estimate_eps_known(
    samples, cfg: EstimatorConfig, u0: float, sigma0_sq: float, clamp: bool = True
) -> float:
    """Proportion estimate with the null parameters supplied."""
    x = gft.as_array(samples)
    t = frequency(cfg, x.size)
    _emit(_window_notes(cfg))
    pair = gft.gchar(x, t)
    return gft.eps_functional(pair.value, t, u0, sigma0_sq, clamp=clamp)


def estimate_eps_plugin(samples, cfg: EstimatorConfig = EstimatorConfig()) -> EstimateReport:
    """Null parameters then the proportion, all at the same frequency."""
    x, t, pair, u0_hat, s2_raw, notes = _gem_core(samples, cfg)
    s2_hat = _clamp_sigma(s2_raw, cfg)
    raw = gft.eps_functional_raw(pair.value, t, u0_hat, s2_hat)
    eps_hat = min(1.0, max(0.0, raw.real))
    vb = None
    if cfg.A is not None:
        vb = variance_bound_params(t, x.size, u0_hat, s2_hat, eps_hat, max(cfg.A, s2_hat))[0]
    _emit(notes)
    diag = Diagnostics(abs(pair.value), raw, s2_raw, vb, [m for _, m in notes])
    return EstimateReport(u0_hat, s2_hat, eps_hat, t, cfg.gamma, x.size, "GEM", diag)


# --------------------------------------------------------------------------
# GEV (ordinary transform)


def gev_from_pair(pair) -> tuple[float, float]:
    inp = gft.NullFunctionalInput.from_pair(pair)
    return fourier.gev_u0_functional(inp), fourier.gev_sigma0_functional(inp)


def _gev_report(samples, cfg: EstimatorConfig) -> EstimateReport:
    x = gft.as_array(samples)
    t = frequency(cfg, x.size)
    pair = fourier.char(x, t)
    u0_hat, s2_raw = gev_from_pair(pair)
    s2_hat = _clamp_sigma(s2_raw, cfg)
    notes = _window_notes(cfg)
    modulus = abs(pair.value)
    if modulus < NEAR_ZERO_REL * math.exp(-s2_hat * t * t / 2):
        notes.append((NearZeroModulusWarning,
                      f"NearZeroModulus: |psi_n(t)|={modulus:.3g} is tiny; estimate unstable"))
    if s2_raw < SIGMA_FLOOR or np.ptp(x) == 0.0:
        notes.append((DegenerateVarianceWarning,
                      f"sigma0_sq estimate {s2_raw:.3g} is degenerate; clamped to {SIGMA_FLOOR}"))
    raw = fourier.gev_eps_functional_raw(pair.value, t, u0_hat, s2_hat)
    eps_hat = min(1.0, max(0.0, raw.real))
    _emit(notes)
    diag = Diagnostics(modulus, raw, s2_raw, None, [m for _, m in notes])
    return EstimateReport(u0_hat, s2_hat, eps_hat, t, cfg.gamma, x.size, "GEV", diag)


def estimate_null_gev(samples, cfg: EstimatorConfig = EstimatorConfig(family="GEV")) -> GevEstimate:
    rep = _gev_report(samples, cfg)
    return GevEstimate(rep.u0_hat, rep.sigma0_sq_hat, rep.eps_hat, rep.t_used)


def estimate(samples, cfg: EstimatorConfig = EstimatorConfig(), known_null=None) -> EstimateReport:
    """Full report for either family; ``known_null=(u0, sigma0_sq)`` fixes the null."""
    if cfg.family == "GEV":
        rep = _gev_report(samples, cfg)
    else:
        rep = estimate_eps_plugin(samples, cfg)
    if known_null is not None:
        u0, s2 = map(float, known_null)
        x = gft.as_array(samples)
        if cfg.family == "GEV":
            raw = fourier.gev_eps_functional_raw(fourier.char(x, rep.t_used).value, rep.t_used, u0, s2)
        else:
            raw = gft.eps_functional_raw(gft.gchar(x, rep.t_used).value, rep.t_used, u0, s2)
        rep.u0_hat, rep.sigma0_sq_hat = u0, s2
        rep.eps_hat = min(1.0, max(0.0, raw.real))
        rep.diagnostics.raw_eps_complex = raw
    return rep
