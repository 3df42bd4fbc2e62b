"""Euclidean free scalar field: continuum covariance and a 2D lattice GFF.

Sign convention: Delta is the NONNEGATIVE Laplacian (-sum of second
derivatives), so (Delta + m^2) is positive and exp(-1/2 int phi (Delta+m^2)
phi) is a Gaussian weight.

The continuum covariance is the integral kernel of (Delta + m^2)^(-1),

    C(r) = (2 pi)^(-n/2) (m/r)^((n-2)/2) K_{(n-2)/2}(m r),

which closes to exp(-mr)/(2m) in n=1, K_0(mr)/(2 pi) in n=2 and
exp(-mr)/(4 pi r) in n=3.

The lattice stands in for mollifier regularization: on an L x L torus with
spacing a the momentum modes 1/(lambda_k + m^2) are sampled exactly, the
local variance c0 = C_a(0,0) plays the role of the diverging diagonal, and
Wick ordering subtracts it as one constant per lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from funcint.gaussian import wick_order
from funcint.numerics import bessel_k, bessel_k_batch
from funcint.rng import RngStream


@dataclass(frozen=True)
class CovarianceKernel:
    """Free covariance (Delta + m^2)^(-1) in dimension n in {1, 2, 3}."""

    n: int
    m: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError("covariance kernel implemented for n in {1,2,3}")
        if not self.m > 0:
            raise ValueError("mass must be positive")


def covariance(kernel: CovarianceKernel, r: float) -> float:
    """C(r) at separation r > 0 (singular on the diagonal for n >= 2)."""
    if not r > 0:
        raise ValueError("covariance needs r > 0; the kernel is singular at 0")
    m = kernel.m
    if kernel.n == 1:
        return math.exp(-m * r) / (2.0 * m)
    if kernel.n == 2:
        return bessel_k(0.0, m * r) / (2.0 * math.pi)
    return math.exp(-m * r) / (4.0 * math.pi * r)


def covariance_batch(kernel: CovarianceKernel, r: np.ndarray) -> np.ndarray:
    """Vectorized covariance over an array of positive separations."""
    r = np.asarray(r, dtype=float)
    m = kernel.m
    if kernel.n == 1:
        return np.exp(-m * r) / (2.0 * m)
    if kernel.n == 2:
        return bessel_k_batch(0.0, m * r) / (2.0 * math.pi)
    return np.exp(-m * r) / (4.0 * math.pi * r)


@dataclass(frozen=True)
class LatticeSpec:
    """Periodic L x L torus with spacing a and mass m."""

    length: int
    spacing: float
    m: float

    def __post_init__(self):
        if self.length < 4 or self.length % 2:
            raise ValueError("lattice side must be even and >= 4")
        if not (self.spacing > 0 and self.m > 0):
            raise ValueError("spacing and mass must be positive")


@lru_cache(maxsize=32)
def _covariance_table_cached(length: int, spacing: float, m: float) -> np.ndarray:
    k = np.arange(length)
    s2 = np.sin(np.pi * k / length) ** 2
    lam = (4.0 / spacing ** 2) * (s2[:, None] + s2[None, :])
    table = np.fft.ifft2(1.0 / (lam + m ** 2)).real / spacing ** 2
    table.setflags(write=False)
    return table


def covariance_table(spec: LatticeSpec) -> np.ndarray:
    """C_a(dx, dy) for all displacements, as an L x L array.

    C_a(d) = (1/(L a)^2) sum_k exp(2 pi i k.d / L) / (lambda_k + m^2) with
    lattice eigenvalues lambda_k = (4/a^2)(sin^2(pi k1/L) + sin^2(pi k2/L)).
    The 1/a^2 makes the table converge to the continuum kernel at fixed
    physical separation.
    """
    return _covariance_table_cached(spec.length, spec.spacing, spec.m)


def lattice_covariance(spec: LatticeSpec, dx: int, dy: int) -> float:
    """Two-point function of the lattice field at displacement (dx, dy)."""
    table = covariance_table(spec)
    return float(table[dx % spec.length, dy % spec.length])


def local_variance(spec: LatticeSpec) -> float:
    """c0 = C_a(0,0), the Wick-ordering constant of this lattice."""
    return lattice_covariance(spec, 0, 0)


@dataclass
class LatticeField:
    """One field configuration with its lattice and Wick constant."""

    spec: LatticeSpec
    values: np.ndarray
    c0: float

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        L = self.spec.length
        if self.values.shape != (L, L):
            raise ValueError("field shape must match the lattice")
        if abs(self.c0 - local_variance(self.spec)) > 1e-10:
            raise ValueError("c0 inconsistent with the lattice spectral sum")


def sample_gff(spec: LatticeSpec, rng: RngStream) -> LatticeField:
    """Exact spectral sample of the lattice free field.

    Filters white noise by sqrt of the mode variance so that empirically
    Cov(phi(x), phi(y)) = lattice_covariance(x - y); the field is real by
    the Hermitian symmetry of the filter.
    """
    gen = rng.generator()
    return _field_from_noise(spec, gen.standard_normal((spec.length, spec.length)))


def _field_from_noise(spec: LatticeSpec, noise: np.ndarray) -> LatticeField:
    L, a, m = spec.length, spec.spacing, spec.m
    k = np.arange(L)
    s2 = np.sin(np.pi * k / L) ** 2
    lam = (4.0 / a ** 2) * (s2[:, None] + s2[None, :])
    filt = np.sqrt(1.0 / (a ** 2 * (lam + m ** 2)))
    values = np.fft.ifft2(np.fft.fft2(noise) * filt).real
    return LatticeField(spec, values, local_variance(spec))


def gff_fields(spec: LatticeSpec, n_samples: int, rng: RngStream):
    """Generator of n_samples fields from one stream (memory-friendly)."""
    gen = rng.generator()
    for _ in range(n_samples):
        yield _field_from_noise(spec, gen.standard_normal((spec.length, spec.length)))


def lattice_pairing(spec: LatticeSpec, f: np.ndarray, g: np.ndarray) -> float:
    """C(f, g) = a^4 sum_{x,y} f(x) C_a(x-y) g(y) by FFT convolution."""
    table = covariance_table(spec)
    conv = np.fft.ifft2(np.fft.fft2(table) * np.fft.fft2(g)).real
    return float(spec.spacing ** 4 * np.sum(f * conv))


def field_pairing(field: LatticeField, f: np.ndarray) -> float:
    """phi(f) = a^2 sum_x f(x) phi(x)."""
    return float(field.spec.spacing ** 2 * np.sum(f * field.values))


def wick_power_field(field: LatticeField, k: int) -> np.ndarray:
    """Pointwise (:phi(x)^k:) using the lattice Wick constant c0."""
    if k < 0:
        raise ValueError("power must be >= 0")
    poly = wick_order(k, field.c0)
    out = np.zeros_like(field.values)
    for (deg,), coeff in poly.terms.items():
        out += float(coeff) * field.values ** deg
    return out


def _leading(coeffs):
    deg = len(coeffs) - 1
    while deg > 0 and coeffs[deg] == 0:
        deg -= 1
    return deg, coeffs[deg]


def interaction_action(field: LatticeField, coeffs, region=None) -> float:
    """S_I = a^2 sum_{x in region} sum_j P_j (:phi(x)^j:).

    ``coeffs`` lists P_0..P_deg; the leading degree must be even with a
    positive coefficient so the action is bounded below.
    """
    coeffs = list(coeffs)
    if coeffs and any(c != 0 for c in coeffs):
        deg, lead = _leading(coeffs)
        if deg % 2 or lead < 0:
            raise ValueError("interaction must have positive even leading term")
    if region is None:
        region = np.ones_like(field.values, dtype=bool)
    density = np.zeros_like(field.values)
    for j, pj in enumerate(coeffs):
        if pj:
            density += pj * wick_power_field(field, j)
    return float(field.spec.spacing ** 2 * np.sum(density[region]))


def exp_interaction(field: LatticeField, alpha: float, g: np.ndarray) -> float:
    """V = a^2 sum_x g(x) (:exp(alpha phi(x)):), always positive for g >= 0.

    The Wick exponential closes to exp(alpha phi - alpha^2 c0 / 2).
    """
    g = np.asarray(g, dtype=float)
    if np.any(g < 0):
        raise ValueError("weights must be nonnegative")
    wick_exp_vals = np.exp(alpha * field.values - 0.5 * alpha ** 2 * field.c0)
    return float(field.spec.spacing ** 2 * np.sum(g * wick_exp_vals))


def exp_interaction_moments(spec: LatticeSpec, alpha: float, g: np.ndarray):
    """Exact (E[V], E[V^2]) of the Wick-exponential interaction.

    E[V] = a^2 sum g; E[V^2] = a^4 sum_{x,y} g(x) g(y) exp(alpha^2 C(x-y)),
    evaluated as a circular correlation.  The second moment is the quantity
    whose continuum limit exists only for alpha^2 < 4 pi.
    """
    g = np.asarray(g, dtype=float)
    a = spec.spacing
    table = covariance_table(spec)
    corr = np.fft.ifft2(np.abs(np.fft.fft2(g)) ** 2).real  # sum_x g(x) g(x+d)
    first = a ** 2 * float(np.sum(g))
    second = a ** 4 * float(np.sum(corr * np.exp(alpha ** 2 * table)))
    return first, second


def interaction_variance(spec: LatticeSpec, k: int, region=None) -> float:
    """Var of a^2 sum_Lambda (:phi^k:) = k! a^4 sum_{x,y in Lambda} C(x-y)^k."""
    mask = np.ones((spec.length, spec.length)) if region is None else np.asarray(region, dtype=float)
    table = covariance_table(spec)
    corr = np.fft.ifft2(np.abs(np.fft.fft2(mask)) ** 2).real
    return float(math.factorial(k) * spec.spacing ** 4 * np.sum(corr * table ** k))


def partition_estimate(spec: LatticeSpec, coeffs, region, n_samples: int, rng: RngStream):
    """Monte Carlo estimate of Z = E[exp(-S_I)] with log-sum-exp guards.

    Returns (Z, stderr).
    """
    log_vals = np.empty(n_samples)
    for i, field in enumerate(gff_fields(spec, n_samples, rng)):
        log_vals[i] = -interaction_action(field, coeffs, region)
    log_mean = logsumexp(log_vals) - math.log(n_samples)
    log_mean_sq = logsumexp(2.0 * log_vals) - math.log(n_samples)
    z = math.exp(log_mean)
    var = max(math.exp(log_mean_sq) - z * z, 0.0)
    return z, math.sqrt(var / n_samples)


@dataclass(frozen=True)
class PointSources:
    """Finite combination sum_p w_p delta_{z_p} as a continuum test function."""

    points: np.ndarray  # (k, n), time = last coordinate
    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "points", np.atleast_2d(np.asarray(self.points, dtype=float)))
        object.__setattr__(self, "weights", np.atleast_1d(np.asarray(self.weights, dtype=float)))
        if self.points.shape[0] != self.weights.size:
            raise ValueError("one weight per point required")


class SupportError(ValueError):
    """Test function leaks outside the positive-time half space."""


def _continuum_rp_gram(kernel: CovarianceKernel, sources):
    for s in sources:
        if np.any(s.points[:, -1] <= 0):
            raise SupportError("sources must sit strictly at positive times")
        if s.points.shape[1] != kernel.n:
            raise ValueError("source dimension must match the kernel")
    k = len(sources)
    gram = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            pi, pj = sources[i].points, sources[j].points.copy()
            pj[:, -1] *= -1.0  # time reflection
            diffs = pi[:, None, :] - pj[None, :, :]
            dists = np.sqrt(np.sum(diffs ** 2, axis=-1))
            cvals = covariance_batch(kernel, dists)
            gram[i, j] = gram[j, i] = float(
                sources[i].weights @ cvals @ sources[j].weights
            )
    return gram


def _lattice_rp_gram(spec: LatticeSpec, functions):
    L = spec.length
    half = L // 2
    table = covariance_table(spec)
    table_hat = np.fft.fft2(table)
    k = len(functions)
    conv = []
    for f in functions:
        f = np.asarray(f, dtype=float)
        if f.shape != (L, L):
            raise ValueError("lattice test function shape mismatch")
        support_rows = np.nonzero(np.any(f != 0.0, axis=1))[0]
        if support_rows.size and (support_rows.min() < 1 or support_rows.max() > half - 1):
            raise SupportError("lattice functions must live on rows 1..L/2-1")
        reflected = np.roll(f[::-1, :], 1, axis=0)  # row t -> row (-t) mod L
        conv.append(np.fft.ifft2(table_hat * np.fft.fft2(reflected)).real)
    gram = np.empty((k, k))
    for i in range(k):
        fi = np.asarray(functions[i], dtype=float)
        for j in range(k):
            gram[i, j] = spec.spacing ** 4 * float(np.sum(fi * conv[j]))
    return gram


def reflection_positivity_check(geometry, test_functions) -> float:
    """Minimum eigenvalue of the time-reflection Gram matrix C(f_i, theta f_j).

    ``geometry`` is a :class:`CovarianceKernel` (test functions are
    :class:`PointSources` at strictly positive times) or a
    :class:`LatticeSpec` (arrays supported on rows 1..L/2-1 of the torus).
    Reflection positivity of the free covariance makes the Gram positive
    semidefinite, so the return value should only be negative at roundoff
    size.
    """
    if isinstance(geometry, CovarianceKernel):
        gram = _continuum_rp_gram(geometry, list(test_functions))
    elif isinstance(geometry, LatticeSpec):
        gram = _lattice_rp_gram(geometry, list(test_functions))
    else:
        raise TypeError("geometry must be a CovarianceKernel or LatticeSpec")
    gram = 0.5 * (gram + gram.T)
    return float(np.min(np.linalg.eigvalsh(gram)))


@dataclass(frozen=True)
class GaussianBump:
    """Smooth rapidly-decaying test function amp * exp(-|x-c|^2 / (2 s^2))."""

    center: np.ndarray
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.atleast_1d(np.asarray(self.center, dtype=float)))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        d2 = np.sum((pts - self.center) ** 2, axis=-1)
        return self.amplitude * np.exp(-0.5 * d2 / self.width ** 2)

    def transformed(self, angle: float, shift) -> "GaussianBump":
        """Exact pushforward under rotation by angle then translation (2D)."""
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        return GaussianBump(rot @ self.center + np.asarray(shift, dtype=float),
                            self.width, self.amplitude)


def _bump_quadrature(bump: GaussianBump, nodes_1d: int = 40, extent: float = 6.0):
    xg, wg = np.polynomial.legendre.leggauss(nodes_1d)
    half = extent * bump.width
    pts_1d = [bump.center[d] + half * xg for d in range(2)]
    wts_1d = [half * wg for _ in range(2)]
    xx, yy = np.meshgrid(pts_1d[0], pts_1d[1], indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    wts = np.outer(wts_1d[0], wts_1d[1]).ravel()
    return pts, wts * bump(pts)


def _radial_table(kernel: CovarianceKernel, rmin: float, rmax: float, points: int = 4000):
    """Cubic spline of C(r) on [rmin, rmax] built from the integral values."""
    from scipy.interpolate import CubicSpline

    r = np.linspace(rmin, rmax, points)
    return CubicSpline(r, covariance_batch(kernel, r))


def pair_bumps(kernel: CovarianceKernel, f: GaussianBump, g: GaussianBump,
               nodes_1d: int = 40) -> float:
    """C(f, g) = int f(x) C(|x-y|) g(y) dx dy by tensor quadrature (2D).

    Kernel values come from a dense radial spline of the Bessel integral so
    the double quadrature stays cheap.
    """
    pf, wf = _bump_quadrature(f, nodes_1d)
    pg, wg = _bump_quadrature(g, nodes_1d)
    diffs = pf[:, None, :] - pg[None, :, :]
    dists = np.sqrt(np.sum(diffs ** 2, axis=-1))
    spline = _radial_table(kernel, 0.99 * float(np.min(dists)), 1.01 * float(np.max(dists)))
    return float(wf @ spline(dists) @ wg)


def euclidean_invariance_check(kernel: CovarianceKernel, f: GaussianBump,
                               g: GaussianBump, angle: float, shift) -> float:
    """|C(Tf, Tg) - C(f, g)| for a rigid motion T; zero up to quadrature error."""
    base = pair_bumps(kernel, f, g)
    moved = pair_bumps(kernel, f.transformed(angle, shift), g.transformed(angle, shift))
    return abs(moved - base)


def schwinger_two_point(m: float, y) -> float:
    """Euclidean two-point function S_2(y); equals the free covariance G(y)."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    r = float(np.linalg.norm(y))
    if r == 0.0:
        raise ValueError("two-point function is singular at coinciding points")
    return covariance(CovarianceKernel(y.size, m), r)
