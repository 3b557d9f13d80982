"""Generative models, samplers and population-level oracles.

A mixture is (1 - eps) N(u0, sigma0_sq) + eps * int N(u, sigma^2) dH(u, sigma).
H is either a point mass or a product of independent laws for u and sigma,
which lets every transform factor into a u-part and a sigma-part:

    r(t) = eps/(1-eps) * E[exp(omega (u-u0) t)] * E[exp(i (sigma^2-sigma0^2) t^2/2)]
    s(t) = eps/(1-eps) * E[exp(i (u-u0) t)]     * E[exp(-(sigma^2-sigma0^2) t^2/2)]

Each factor has a closed form for Const and Uniform laws (and for the u-part
of a Gamma law); otherwise it falls back to adaptive Gauss-Legendre
quadrature.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Union

import numpy as np
from scipy import special, stats

from .errors import ExponentOverflow, MissingDelta, QuadratureFailure, ValidationError
from .gft import EXP_GUARD, OMEGA, SQRT2

QUAD_TOL = 1e-10
# below this |argument| the Uniform transforms switch to power series
SERIES_RADIUS = 0.5
TAIL_PROB = 1e-12
# quantile used as the variance cap when the sigma-law is unbounded
A_QUANTILE = 1.0 - 1e-6


# --------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _gl_rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def adaptive_gauss_legendre(
    func, a: float, b: float, tol: float = QUAD_TOL, order: int = 16,
    max_intervals: int = 4000,
) -> complex:
    """Integrate a vectorised (possibly complex) function over [a, b].

    Each interval is accepted when its one-panel estimate agrees with the sum
    of its two halves to within its share of ``tol``.
    """
    nodes, weights = _gl_rule(order)

    def panel(lo, hi):
        half = 0.5 * (hi - lo)
        x = lo + half * (nodes + 1.0)
        return half * np.dot(weights, func(x))

    total_len = b - a
    if total_len <= 0:
        return 0j
    pending = [(a, b, panel(a, b))]
    result = 0j
    n_intervals = 0
    while pending:
        lo, hi, whole = pending.pop()
        mid = 0.5 * (lo + hi)
        left, right = panel(lo, mid), panel(mid, hi)
        share = tol * (hi - lo) / total_len
        if abs(left + right - whole) <= share:
            result += left + right
            continue
        n_intervals += 1
        if n_intervals > max_intervals:
            raise QuadratureFailure(
                f"tolerance {tol} not met on [{a}, {b}] after {max_intervals} subdivisions"
            )
        pending.append((mid, hi, right))
        pending.append((lo, mid, left))
    return complex(result)


# --------------------------------------------------------------------------
# scalar laws


@dataclass(frozen=True)
class Const:
    v: float

    kind = "const"

    @property
    def lower(self) -> float:
        return self.v

    @property
    def upper(self) -> float:
        return self.v

    @property
    def atom_at_lower(self) -> bool:
        return True

    @property
    def mean(self) -> float:
        return self.v

    def sample(self, rng, size):
        return np.full(size, float(self.v))

    def quantile(self, p):
        return self.v

    def expect(self, fn) -> complex:
        return complex(fn(np.array([float(self.v)]))[0])

    def mgf(self, z):
        e = cmath.exp(z * self.v)
        return e, self.v * e

    def sq_mgf(self, w):
        v2 = self.v * self.v
        e = cmath.exp(w * v2)
        return e, v2 * e

    def to_dict(self):
        return {"kind": "const", "v": self.v}


def _sinhc_series(y):
    """sinh(y)/y and its derivative by power series, for small |y|."""
    g, dg = 1 + 0j, 0j
    y2 = y * y
    term = 1 + 0j  # y^(2k) / (2k+1)!
    for k in range(1, 30):
        term *= y2 / ((2 * k) * (2 * k + 1))
        g += term
        dg += 2 * k * term / y if y != 0 else 0j
        if abs(term) < 1e-18:
            break
    return g, dg


@dataclass(frozen=True)
class Uniform:
    a: float
    b: float

    kind = "uniform"

    def __post_init__(self):
        if not self.a < self.b:
            raise ValidationError(f"Uniform requires a < b, got ({self.a}, {self.b})")

    @property
    def lower(self) -> float:
        return self.a

    @property
    def upper(self) -> float:
        return self.b

    @property
    def atom_at_lower(self) -> bool:
        return False

    @property
    def mean(self) -> float:
        return 0.5 * (self.a + self.b)

    def sample(self, rng, size):
        return rng.uniform(self.a, self.b, size)

    def quantile(self, p):
        return self.a + p * (self.b - self.a)

    def expect(self, fn) -> complex:
        width = self.b - self.a
        return adaptive_gauss_legendre(lambda x: fn(x) / width, self.a, self.b)

    def mgf(self, z):
        # centred form exp(z c) g(z h) with g(y) = sinh(y)/y avoids cancellation
        c, h = self.mean, 0.5 * (self.b - self.a)
        y = z * h
        if abs(y) < SERIES_RADIUS:
            g, dg = _sinhc_series(y)
        else:
            g = cmath.sinh(y) / y
            dg = (y * cmath.cosh(y) - cmath.sinh(y)) / (y * y)
        e = cmath.exp(z * c)
        m = e * g
        return m, c * m + e * h * dg

    def sq_mgf(self, w):
        """E[exp(w X^2)] and E[X^2 exp(w X^2)] via the complex error function."""
        a, b, width = self.a, self.b, self.b - self.a
        if abs(w) * max(a * a, b * b) < SERIES_RADIUS:
            return self._sq_mgf_series(w)
        root = cmath.sqrt(-w)
        scale = math.sqrt(math.pi) / (2 * root)
        integral = scale * (special.erf(root * b) - special.erf(root * a))
        q = integral / width
        # by parts: int x^2 e^{w x^2} = [x e^{w x^2}/(2w)] - int e^{w x^2}/(2w)
        boundary = b * cmath.exp(w * b * b) - a * cmath.exp(w * a * a)
        dq = (boundary - integral) / (2 * w * width)
        return complex(q), complex(dq)

    def _sq_mgf_series(self, w):
        a, b, width = self.a, self.b, self.b - self.a

        def moment(k):
            return (b ** (k + 1) - a ** (k + 1)) / ((k + 1) * width)

        q = dq = 0j
        coef = 1 + 0j
        for j in range(80):
            tq, tdq = coef * moment(2 * j), coef * moment(2 * j + 2)
            q += tq
            dq += tdq
            if abs(tdq) <= 1e-17 * abs(dq) and abs(tq) <= 1e-17 * abs(q):
                break
            coef *= w / (j + 1)
        return q, dq

    def to_dict(self):
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class GammaShifted:
    """shift + Gamma(shape, scale); mean shift + shape * scale."""

    shape: float
    scale: float
    shift: float = 0.0

    kind = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise ValidationError("Gamma requires shape > 0 and scale > 0")

    @property
    def lower(self) -> float:
        return self.shift

    @property
    def upper(self) -> float:
        return math.inf

    @property
    def atom_at_lower(self) -> bool:
        return False

    @property
    def mean(self) -> float:
        return self.shift + self.shape * self.scale

    def sample(self, rng, size):
        return self.shift + rng.gamma(self.shape, self.scale, size)

    def quantile(self, p):
        return self.shift + stats.gamma.ppf(p, self.shape, scale=self.scale)

    def expect(self, fn) -> complex:
        dist = stats.gamma(self.shape, scale=self.scale)
        lo = self.shift + dist.ppf(TAIL_PROB)
        hi = self.shift + dist.isf(TAIL_PROB)
        return adaptive_gauss_legendre(
            lambda x: fn(x) * dist.pdf(x - self.shift), lo, hi
        )

    def mgf(self, z):
        if z.real >= 1.0 / self.scale:
            raise ValidationError("Gamma moment generating function diverges")
        base = 1.0 - self.scale * z
        m = cmath.exp(z * self.shift) * base ** (-self.shape)
        return m, m * (self.shift + self.shape * self.scale / base)

    def sq_mgf(self, w):
        if w == 0:
            # only the trivial point has a closed form; elsewhere quadrature
            k, th, c = self.shape, self.scale, self.shift
            return 1 + 0j, complex(k * th * th + (c + k * th) ** 2)
        return None

    def to_dict(self):
        return {"kind": "gamma", "shape": self.shape, "scale": self.scale, "shift": self.shift}


ScalarLaw = Union[Const, Uniform, GammaShifted]


def law_from_dict(d: dict) -> ScalarLaw:
    d = dict(d)
    kind = d.pop("kind", None)
    fields = {"const": ("v",), "uniform": ("a", "b"), "gamma": ("shape", "scale", "shift")}
    if kind not in fields:
        raise ValidationError(f"unknown scalar law kind {kind!r}")
    extra = set(d) - set(fields[kind])
    if extra:
        raise ValidationError(f"unknown keys in {kind} law: {sorted(extra)}")
    try:
        if kind == "const":
            return Const(float(d["v"]))
        if kind == "uniform":
            return Uniform(float(d["a"]), float(d["b"]))
        return GammaShifted(float(d["shape"]), float(d["scale"]), float(d.get("shift", 0.0)))
    except KeyError as exc:
        raise ValidationError(f"{kind} law missing field {exc}") from None


# --------------------------------------------------------------------------
# mixing laws


@dataclass(frozen=True)
class PointMass:
    u: float
    sigma_sq: float

    def __post_init__(self):
        if not self.sigma_sq >= 0:
            raise ValidationError("PointMass requires sigma_sq >= 0")

    @property
    def u_law(self) -> Const:
        return Const(self.u)

    @property
    def sigma_law(self) -> Const:
        return Const(math.sqrt(self.sigma_sq))

    def to_dict(self):
        return {"kind": "point_mass", "u": self.u, "sigma_sq": self.sigma_sq}


@dataclass(frozen=True)
class ProductLaw:
    """u and sigma drawn independently; sigma is a standard deviation."""

    u_law: ScalarLaw
    sigma_law: ScalarLaw

    def __post_init__(self):
        if self.sigma_law.lower < 0:
            raise ValidationError("sigma law must be supported on [0, inf)")

    def to_dict(self):
        return {"kind": "product", "u": self.u_law.to_dict(), "sigma": self.sigma_law.to_dict()}


MixingLaw = Union[PointMass, ProductLaw]


def mixing_from_dict(d: dict) -> MixingLaw:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind == "point_mass":
        law = PointMass(float(d.pop("u")), float(d.pop("sigma_sq")))
    elif kind == "product":
        law = ProductLaw(law_from_dict(d.pop("u")), law_from_dict(d.pop("sigma")))
    else:
        raise ValidationError(f"unknown mixing law kind {kind!r}")
    if d:
        raise ValidationError(f"unknown keys in mixing law: {sorted(d)}")
    return law


# --------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class MixtureSpec:
    u0: float
    sigma0_sq: float
    eps: float
    mixing: MixingLaw
    A: float | None = None
    delta_n: float | None = None
    A_from_quantile: bool = field(default=False, init=False)

    def __post_init__(self):
        if not self.sigma0_sq > 0:
            raise ValidationError(f"sigma0_sq must be > 0, got {self.sigma0_sq}")
        if not 0.0 <= self.eps < 1.0:
            raise ValidationError(f"eps must lie in [0, 1), got {self.eps}")
        if self.A is None:
            sig = self.mixing.sigma_law
            if math.isfinite(sig.upper):
                cap = sig.upper**2
            else:
                cap = float(sig.quantile(A_QUANTILE)) ** 2
                object.__setattr__(self, "A_from_quantile", True)
            object.__setattr__(self, "A", max(cap, self.sigma0_sq))
        elif self.A < self.sigma0_sq:
            raise ValidationError("A must be at least sigma0_sq")

    @property
    def gem_admissible(self) -> bool:
        """True when the mixing law puts u > u0 almost surely."""
        law = self.mixing.u_law
        if law.atom_at_lower:
            return law.lower > self.u0
        return law.lower >= self.u0

    @property
    def gev_admissible(self) -> bool:
        sig = self.mixing.sigma_law
        sigma0 = math.sqrt(self.sigma0_sq)
        if sig.lower < sigma0:
            return False
        law = self.mixing.u_law
        at_null = isinstance(law, Const) and law.v == self.u0
        return not (at_null and isinstance(sig, Const) and sig.v == sigma0)

    def with_eps(self, eps: float) -> "MixtureSpec":
        return MixtureSpec(self.u0, self.sigma0_sq, eps, self.mixing, self.A, self.delta_n)

    def to_dict(self) -> dict:
        return {
            "u0": self.u0,
            "sigma0_sq": self.sigma0_sq,
            "eps": self.eps,
            "mixing": self.mixing.to_dict(),
            "A": self.A,
            "delta_n": self.delta_n,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        d = dict(d)
        allowed = {"u0", "sigma0_sq", "eps", "mixing", "A", "delta_n"}
        extra = set(d) - allowed
        if extra:
            raise ValidationError(f"unknown keys in model: {sorted(extra)}")
        try:
            return cls(
                u0=float(d["u0"]),
                sigma0_sq=float(d["sigma0_sq"]),
                eps=float(d["eps"]),
                mixing=mixing_from_dict(d["mixing"]),
                A=None if d.get("A") is None else float(d["A"]),
                delta_n=None if d.get("delta_n") is None else float(d["delta_n"]),
            )
        except KeyError as exc:
            raise ValidationError(f"model missing field {exc}") from None


@dataclass(frozen=True, eq=False)
class SampleSet:
    values: np.ndarray
    seed: int | None = None
    block_L: int = 0
    n_null: int | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValidationError("SampleSet values must be finite")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self):
        return self.n


# --------------------------------------------------------------------------
# samplers


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-based stream for (seed, key...); identical wherever it is built."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def derive_seed(seed: int, *key: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def null_count(n: int, eps: float) -> int:
    """Number of null draws: n (1 - eps) rounded half-up."""
    return min(n, int(math.floor(n * (1.0 - eps) + 0.5)))


def _component_params(spec: MixtureSpec, n: int, rng):
    n0 = null_count(n, spec.eps)
    m = n - n0
    mu = np.empty(n)
    sd = np.empty(n)
    mu[:n0] = spec.u0
    sd[:n0] = math.sqrt(spec.sigma0_sq)
    mu[n0:] = spec.mixing.u_law.sample(rng, m)
    sd[n0:] = spec.mixing.sigma_law.sample(rng, m)
    return mu, sd, n0


def sample_iid(spec: MixtureSpec, n: int, seed: int = 0, rng=None) -> SampleSet:
    """First round(n(1-eps)) draws are nulls, the rest non-nulls with fresh (u, sigma)."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if rng is None:
        rng = make_rng(seed)
    n0 = null_count(n, spec.eps)
    x = np.empty(n)
    x[:n0] = spec.u0 + math.sqrt(spec.sigma0_sq) * rng.standard_normal(n0)
    m = n - n0
    if m:
        u = spec.mixing.u_law.sample(rng, m)
        sd = spec.mixing.sigma_law.sample(rng, m)
        x[n0:] = u + sd * rng.standard_normal(m)
    return SampleSet(x, seed=seed, block_L=0, n_null=n0)


def moving_average_noise(rng, n: int, L: int) -> np.ndarray:
    """z_j = sum_{k=j}^{j+L} w_k / sqrt(L+1) with w iid N(0, 1)."""
    w = rng.standard_normal(n + L)
    return np.convolve(w, np.ones(L + 1), mode="valid") / math.sqrt(L + 1)


def sample_block_dependent(
    spec: MixtureSpec, n: int, L: int, seed: int = 0, rng=None
) -> SampleSet:
    """X_j = mu_j + sigma_j z_j with moving-average noise; L = 0 is the iid sampler."""
    if L < 0:
        raise ValidationError(f"L must be >= 0, got {L}")
    if L == 0:
        return sample_iid(spec, n, seed, rng=rng)
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if rng is None:
        rng = make_rng(seed)
    mu, sd, n0 = _component_params(spec, n, rng)
    z = moving_average_noise(rng, n, L)
    return SampleSet(mu + sd * z, seed=seed, block_L=L, n_null=n0)


def sample(spec: MixtureSpec, n: int, L: int = 0, seed: int = 0, rng=None) -> SampleSet:
    return sample_block_dependent(spec, n, L, seed, rng=rng)


# --------------------------------------------------------------------------
# population oracles


def _exp_guarded(z: complex) -> complex:
    if z.real > EXP_GUARD:
        raise ExponentOverflow(f"exponent {z.real:.6g} exceeds guard {EXP_GUARD}")
    return cmath.exp(z)


def phi0(t: float, spec: MixtureSpec) -> complex:
    """(1 - eps) exp(omega u0 t + i sigma0_sq t^2 / 2)."""
    return (1.0 - spec.eps) * _exp_guarded(OMEGA * spec.u0 * t + 0.5j * spec.sigma0_sq * t * t)


def phi0_deriv(t: float, spec: MixtureSpec) -> complex:
    return (OMEGA * spec.u0 + 1j * spec.sigma0_sq * t) * phi0(t, spec)


def psi0(t: float, spec: MixtureSpec) -> complex:
    """(1 - eps) exp(i u0 t - sigma0_sq t^2 / 2)."""
    return (1.0 - spec.eps) * cmath.exp(complex(-0.5 * spec.sigma0_sq * t * t, spec.u0 * t))


def psi0_deriv(t: float, spec: MixtureSpec) -> complex:
    return (1j * spec.u0 - spec.sigma0_sq * t) * psi0(t, spec)


def _mgf(law, z: complex, method: str):
    if method != "quad":
        closed = law.mgf(z)
        if closed is not None:
            return closed
    m = law.expect(lambda x: np.exp(z * x))
    dm = law.expect(lambda x: x * np.exp(z * x))
    return m, dm


def _sq_mgf(law, w: complex, method: str):
    if method != "quad":
        closed = law.sq_mgf(w)
        if closed is not None:
            return closed
    q = law.expect(lambda x: np.exp(w * x * x))
    dq = law.expect(lambda x: x * x * np.exp(w * x * x))
    return q, dq


def _contamination(t, spec, z, dz, w, dw, method):
    """K * U(t) * V(t) and its t-derivative for the given exponent paths.

    U(t) = E[exp(z(t) (u - u0))], V(t) = E[exp(w(t) (sigma^2 - sigma0^2))],
    z and w linear/quadratic in t with derivatives dz, dw.
    """
    if spec.eps == 0.0:
        return 0j, 0j
    k = spec.eps / (1.0 - spec.eps)
    u0, s0 = spec.u0, spec.sigma0_sq
    m, dm = _mgf(spec.mixing.u_law, z, method)
    eu = _exp_guarded(-z * u0)
    U = eu * m
    dU = dz * eu * (dm - u0 * m)
    q, dq = _sq_mgf(spec.mixing.sigma_law, w, method)
    ev = cmath.exp(-w * s0)
    V = ev * q
    dV = dw * ev * (dq - s0 * q)
    return k * U * V, k * (dU * V + U * dV)


def r_and_deriv(t: float, spec: MixtureSpec, method: str = "auto"):
    """Generalized-transform contamination r(t) and r'(t).

    ``method="quad"`` forces quadrature on every factor (the oracle route).
    """
    t = float(t)
    return _contamination(t, spec, OMEGA * t, OMEGA, 0.5j * t * t, 1j * t, method)


def r_of_t(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    return r_and_deriv(t, spec, method)[0]


def r_deriv(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    return r_and_deriv(t, spec, method)[1]


def s_and_deriv(t: float, spec: MixtureSpec, method: str = "auto"):
    """Ordinary-transform contamination s(t) and s'(t)."""
    t = float(t)
    return _contamination(t, spec, 1j * t, 1j, -0.5 * t * t + 0j, -t, method)


def s_of_t(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    return s_and_deriv(t, spec, method)[0]


def s_deriv(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    return s_and_deriv(t, spec, method)[1]


def population_gchar(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    """phi(t) = phi0(t) (1 + r(t))."""
    return phi0(t, spec) * (1.0 + r_of_t(t, spec, method))


def population_gchar_pair(t: float, spec: MixtureSpec, method: str = "auto"):
    """(phi(t), phi'(t)) by the product rule."""
    p0, dp0 = phi0(t, spec), phi0_deriv(t, spec)
    r, dr = r_and_deriv(t, spec, method)
    return p0 * (1.0 + r), dp0 * (1.0 + r) + p0 * dr


def population_char(t: float, spec: MixtureSpec, method: str = "auto") -> complex:
    return psi0(t, spec) * (1.0 + s_of_t(t, spec, method))


def population_char_pair(t: float, spec: MixtureSpec, method: str = "auto"):
    p0, dp0 = psi0(t, spec), psi0_deriv(t, spec)
    s, ds = s_and_deriv(t, spec, method)
    return p0 * (1.0 + s), dp0 * (1.0 + s) + p0 * ds


# --------------------------------------------------------------------------
# bounds


def variance_bound(t: float, n: int, spec: MixtureSpec) -> tuple[float, float]:
    """Upper bounds on Var(phi_n(t)) and (asymptotically) Var(phi_n'(t))."""
    return variance_bound_params(t, n, spec.u0, spec.sigma0_sq, spec.eps, spec.A)


def variance_bound_params(t, n, u0, s0, eps, A) -> tuple[float, float]:
    base = math.exp(-SQRT2 * u0 * t + s0 * t * t) / n
    lift = math.exp((A - s0) * t * t)
    v_phi = base * ((1.0 - eps) + eps * lift)
    v_phi_prime = base * (
        (1.0 - eps) * (s0 + 2 * u0**2 + 4 * s0**2 * t * t)
        + eps * (A + 2 * u0**2 + 4 * A**2 * t * t) * lift
    )
    return v_phi, v_phi_prime


def bias_rate_bound(t: float, spec: MixtureSpec) -> float:
    """eps/(1-eps) (delta + sqrt(2)/(e t) + A t) exp(-delta t / sqrt(2)), bounding |r'(t)|."""
    if spec.delta_n is None:
        raise MissingDelta("MissingDelta: spec.delta_n is required for the bias bound")
    if spec.eps == 0.0:
        return 0.0
    d = spec.delta_n
    k = spec.eps / (1.0 - spec.eps)
    return k * (d + SQRT2 / (math.e * t) + spec.A * t) * math.exp(-d * t / SQRT2)
