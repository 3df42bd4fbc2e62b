"""Shared numerical kernels.

Conventions fixed here and used by every other module:

- Fourier transform in the symmetric normalization
      fhat(k) = (2 pi)^(-1/2) \\int exp(-i k x) f(x) dx,
  inverse with the opposite sign in the exponent.  Nobody else in the
  package is allowed to roll their own transform.
- Fresnel (oscillatory Gaussian) integrals by closed form,
      \\int exp(i/2 <Qx,x>) exp(<w,x>) dx
        = exp(i pi sign(Q)/4) |det(Q/2pi)|^(-1/2) exp(i/2 <Q^-1 w, w>),
  with sign(Q) = n+ - n-.  The epsilon-regularized limit defining the
  left-hand side lives in the test suite as a slow quadrature oracle.
- Modified Bessel K_nu by the integral representation
      K_nu(z) = \\int_0^inf exp(-z cosh t) cosh(nu t) dt
  truncated where the integrand is below 1e-20 of the result.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate

SYMMETRY_TOL = 1e-12


@dataclass
class SampledFunction:
    """Complex samples of a function on a uniform grid x_j = x0 + j*dx."""

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.ndim != 1 or self.values.size < 2:
            raise ValueError("need at least 2 samples on a 1D grid")
        if not self.dx > 0:
            raise ValueError("grid spacing must be positive")

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.n)

    def norm_l2(self) -> float:
        """Continuum L2 norm approximated by the grid sum."""
        return float(np.sqrt(self.dx * np.sum(np.abs(self.values) ** 2)))

    @classmethod
    def from_callable(cls, f, x0, dx, n) -> "SampledFunction":
        x = x0 + dx * np.arange(n)
        return cls(x0, dx, np.asarray(f(x), dtype=complex))


def dual_grid(f: SampledFunction):
    """(k0, dk) of the frequency grid dual to f's spatial grid."""
    dk = 2.0 * np.pi / (f.n * f.dx)
    k0 = -(f.n // 2) * dk
    return k0, dk


def fourier_transform(f: SampledFunction, direction: str = "forward") -> SampledFunction:
    """Continuum Fourier transform of a sampled function.

    ``forward`` maps samples of f(x) to samples of fhat(k) on the dual
    grid; ``inverse`` uses the +ikx sign.  inverse(forward(f)) recovers f
    exactly up to roundoff because the discrete pair is unitary with the
    (2 pi)^(-1/2) * (grid spacing) weights.
    """
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    sign = -1.0 if direction == "forward" else +1.0
    n = f.n
    k0, dk = dual_grid(f)
    j = np.arange(n)
    # sum_m exp(sign*i*k_j*x_m) f_m factors through one FFT after pulling
    # out the k0 and x0 phases
    inner = f.values * np.exp(sign * 1j * k0 * f.dx * j)
    if sign < 0:
        transformed = np.fft.fft(inner)
    else:
        transformed = np.fft.ifft(inner) * n
    phase = np.exp(sign * 1j * (k0 + dk * j) * f.x0)
    values = (2.0 * np.pi) ** -0.5 * f.dx * phase * transformed
    return SampledFunction(k0, dk, values)


@dataclass
class QuadraticForm:
    """Real symmetric nondegenerate quadratic form with its signature."""

    matrix: np.ndarray
    signature: tuple = field(init=False)

    def __post_init__(self):
        q = np.asarray(self.matrix, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("quadratic form must be a square matrix")
        if not np.allclose(q, q.T, atol=SYMMETRY_TOL, rtol=0.0):
            raise ValueError("quadratic form must be symmetric to 1e-12")
        self.matrix = 0.5 * (q + q.T)
        eig = np.linalg.eigvalsh(self.matrix)
        self.signature = (int(np.sum(eig > 0)), int(np.sum(eig < 0)))

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def sign(self) -> int:
        return self.signature[0] - self.signature[1]


def fresnel_integral(form: QuadraticForm, w=None) -> complex:
    """Closed form of the regularized oscillatory Gaussian integral.

    Returns exp(i pi sign(Q)/4) |det(Q/2pi)|^(-1/2) exp(i/2 <Q^-1 w, w>).
    ``w`` may be complex; the bilinear (unconjugated) pairing is used, which
    is the analytic continuation needed by the time-sliced propagator.
    """
    q = form.matrix
    n = form.n
    sig_det, logdet = np.linalg.slogdet(q / (2.0 * np.pi))
    if sig_det == 0:
        raise np.linalg.LinAlgError("singular quadratic form in Fresnel integral")
    amp = np.exp(-0.5 * logdet)
    phase = np.exp(0.25j * np.pi * form.sign())
    if w is None:
        return complex(phase * amp)
    w = np.asarray(w, dtype=complex).reshape(n)
    qinv_w = np.linalg.solve(q, w)
    return complex(phase * amp * np.exp(0.5j * np.dot(qinv_w, w)))


def _bessel_cutoff(nu: float, z: float) -> float:
    # z*cosh(T) - nu*T > 46 puts the tail below ~1e-20
    t = float(np.arccosh(max(46.0 / z, 2.0)))
    while z * np.cosh(t) - nu * t < 46.0:
        t += 0.5
    return t


def bessel_k(nu: float, z: float) -> float:
    """Modified Bessel function K_nu(z) for z > 0 by adaptive quadrature."""
    if nu < 0:
        nu = -nu  # K_{-nu} = K_nu
    if not z > 0:
        raise ValueError("bessel_k requires z > 0")
    cutoff = _bessel_cutoff(nu, z)
    val, _ = integrate.quad(
        lambda t: np.exp(-z * np.cosh(t)) * np.cosh(nu * t),
        0.0,
        cutoff,
        epsabs=0.0,
        epsrel=1e-12,
        limit=400,
    )
    return float(val)


def bessel_k_batch(nu: float, z: np.ndarray) -> np.ndarray:
    """Vectorized K_nu over an array of positive arguments.

    Shares one composite Gauss-Legendre rule across all arguments (cutoff
    taken from the smallest z), trading a little work for the ability to
    evaluate millions of kernel values in one shot.
    """
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("bessel_k requires z > 0")
    cutoff = _bessel_cutoff(abs(nu), float(np.min(z)))
    panels = max(6, int(np.ceil(2.0 * cutoff)))
    edges = np.linspace(0.0, cutoff, panels + 1)
    xg, wg = np.polynomial.legendre.leggauss(32)
    mids = 0.5 * (edges[:-1] + edges[1:])
    halves = 0.5 * np.diff(edges)
    nodes = (mids[:, None] + halves[:, None] * xg[None, :]).ravel()
    weights = (halves[:, None] * wg[None, :]).ravel() * np.cosh(abs(nu) * nodes)
    cosh_nodes = np.cosh(nodes)
    flat = z.ravel()
    out = np.empty_like(flat)
    block = max(1, 20_000_000 // nodes.size)
    for start in range(0, flat.size, block):
        stop = start + block
        out[start:stop] = np.exp(-np.multiply.outer(flat[start:stop], cosh_nodes)) @ weights
    return out.reshape(z.shape)


def gauss_hermite_expect(g, order: int) -> float:
    """E[g(X)] for X standard normal, by Gauss-Hermite quadrature.

    Exact for polynomials of degree <= 2*order - 1.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    nodes, weights = hermegauss(order)
    weights = weights / np.sqrt(2.0 * np.pi)
    return float(np.sum(weights * np.asarray([g(x) for x in nodes], dtype=float)))


def gauss_hermite_expect_2d(g, cov, order: int = 40) -> float:
    """E[g(X, Y)] for centered bivariate normal (X, Y) with 2x2 covariance.

    Tensor Gauss-Hermite on the whitened variables; used as the quadrature
    oracle for Wick-product inner products.
    """
    cov = np.asarray(cov, dtype=float)
    chol = np.linalg.cholesky(cov)
    nodes, weights = hermegauss(order)
    weights = weights / np.sqrt(2.0 * np.pi)
    zx, zy = np.meshgrid(nodes, nodes, indexing="ij")
    x = chol[0, 0] * zx
    y = chol[1, 0] * zx + chol[1, 1] * zy
    return float(np.einsum("i,j,ij->", weights, weights, g(x, y)))
