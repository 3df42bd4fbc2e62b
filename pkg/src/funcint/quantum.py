"""Quantum mechanics layer: truncated operators, kernels, evolution.

Operator identities on the truncated oscillator basis only hold on the
interior block (indices below N - degree); the top corner is corrupted by
truncation, so assertions should use :meth:`TruncatedOperator.interior`.

Branch convention: sqrt(i) = exp(i pi/4) everywhere a real-time kernel
needs a square root of i.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from funcint.mechanics import PhasePolynomial
from funcint.numerics import QuadraticForm, SampledFunction, dual_grid, fourier_transform, fresnel_integral

SELFADJOINT_TOL = 1e-12
BOUNDARY_TOL = 1e-10


class NotSelfAdjointError(ValueError):
    pass


@dataclass
class TruncatedOperator:
    """Operator truncated to the first N orthonormal oscillator states."""

    entries: np.ndarray
    params: tuple  # (m, omega, hbar)

    def __post_init__(self):
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.ndim != 2 or self.entries.shape[0] != self.entries.shape[1]:
            raise ValueError("operator must be a square matrix")

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def dagger(self) -> "TruncatedOperator":
        return TruncatedOperator(self.entries.conj().T, self.params)

    def interior(self, margin: int) -> np.ndarray:
        """Top-left (N - margin) block, where truncation has not leaked."""
        k = self.dim - margin
        return self.entries[:k, :k]

    def is_selfadjoint(self, tol: float = SELFADJOINT_TOL) -> bool:
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) < tol)

    def __matmul__(self, other):
        return TruncatedOperator(self.entries @ other.entries, self.params)

    def __add__(self, other):
        if isinstance(other, TruncatedOperator):
            return TruncatedOperator(self.entries + other.entries, self.params)
        return TruncatedOperator(self.entries + other * np.eye(self.dim), self.params)

    def __sub__(self, other):
        if isinstance(other, TruncatedOperator):
            return TruncatedOperator(self.entries - other.entries, self.params)
        return TruncatedOperator(self.entries - other * np.eye(self.dim), self.params)

    def __mul__(self, scalar):
        return TruncatedOperator(self.entries * scalar, self.params)

    __rmul__ = __mul__


def ladder_operators(n: int, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0):
    """Annihilation/creation matrices: a e_k = sqrt(k) e_{k-1}, a* e_k = sqrt(k+1) e_{k+1}.

    The basis is the orthonormalized oscillator ladder (the unnormalized
    states psi_k with <psi_k, psi_k> = k! divided by sqrt(k!)).
    """
    if n < 2:
        raise ValueError("need at least a 2-dimensional truncation")
    params = (m, omega, hbar)
    a = np.zeros((n, n), dtype=complex)
    for k in range(1, n):
        a[k - 1, k] = math.sqrt(k)
    return TruncatedOperator(a, params), TruncatedOperator(a.conj().T, params)


def position_momentum(n: int, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0):
    """x and p matrices reconstructed from the ladder pair."""
    a, adag = ladder_operators(n, m, omega, hbar)
    x = math.sqrt(hbar / (2.0 * m * omega)) * (a.entries + adag.entries)
    p = 1j * math.sqrt(hbar * m * omega / 2.0) * (adag.entries - a.entries)
    params = (m, omega, hbar)
    return TruncatedOperator(x, params), TruncatedOperator(p, params)


def oscillator_hamiltonian(n: int, m: float = 1.0, omega: float = 1.0, hbar: float = 1.0):
    """H = p^2/2m + m omega^2 x^2 / 2 assembled from the matrices above."""
    x, p = position_momentum(n, m, omega, hbar)
    h = p.entries @ p.entries / (2.0 * m) + 0.5 * m * omega ** 2 * x.entries @ x.entries
    return TruncatedOperator(h, (m, omega, hbar))


def weyl_quantize(poly: PhasePolynomial, n: int, m: float = 1.0, omega: float = 1.0,
                  hbar: float = 1.0) -> TruncatedOperator:
    """Symmetric (Weyl) quantization of a 1D phase-space polynomial.

    Each monomial x^a p^b maps to the average over all (a+b)! orderings of
    its letters; identical letters collapse that to the mean over the
    C(a+b, a) distinct words, e.g. x^2 p -> (xxp + xpx + pxx)/3.
    """
    if poly.n != 1:
        raise ValueError("Weyl quantization implemented for 1D polynomials")
    xop, pop = position_momentum(n, m, omega, hbar)
    out = np.zeros((n, n), dtype=complex)
    eye = np.eye(n, dtype=complex)
    for (a, b), coeff in poly.terms.items():
        if a + b == 0:
            out += coeff * eye
            continue
        words = np.zeros((n, n), dtype=complex)
        slots = a + b
        for xpos in combinations(range(slots), a):
            word = eye
            for s in range(slots):
                word = word @ (xop.entries if s in xpos else pop.entries)
            words += word
        out += coeff * words / math.comb(slots, a)
    return TruncatedOperator(out, (m, omega, hbar))


def wick_quantize(poly: PhasePolynomial, alpha: float, n: int, m: float = 1.0,
                  omega: float = 1.0, hbar: float = 1.0) -> TruncatedOperator:
    """Normal-ordered quantization through z = x + i alpha p.

    Rewrites the polynomial in (z, zbar) and evaluates each monomial
    z^r zbar^s as (z*)^s z^r with z = x + i alpha p on the truncated basis,
    i.e. all starred factors to the left.
    """
    if poly.n != 1:
        raise ValueError("Wick quantization implemented for 1D polynomials")
    # monomial x^a p^b -> sum over (j, l) of binomial coefficients in z, zbar
    zcoeffs: dict = {}
    for (a, b), coeff in poly.terms.items():
        for j in range(a + 1):
            for l in range(b + 1):
                c = (
                    coeff
                    * math.comb(a, j)
                    * math.comb(b, l)
                    * (-1) ** (b - l)
                    / (2.0 ** a * (2.0j * alpha) ** b)
                )
                key = (j + l, (a - j) + (b - l))  # (power of z, power of zbar)
                zcoeffs[key] = zcoeffs.get(key, 0.0) + c
    xop, pop = position_momentum(n, m, omega, hbar)
    z = xop.entries + 1j * alpha * pop.entries
    zdag = xop.entries - 1j * alpha * pop.entries
    out = np.zeros((n, n), dtype=complex)
    for (r, s), c in zcoeffs.items():
        word = np.eye(n, dtype=complex)
        for _ in range(s):
            word = word @ zdag
        for _ in range(r):
            word = word @ z
        out += c * word
    return TruncatedOperator(out, (m, omega, hbar))


def free_kernel(t: float, x: float, y: float, m: float = 1.0, hbar: float = 1.0,
                mode: str = "realtime") -> complex:
    """Free-particle propagator kernel.

    realtime:  sqrt(m/(2 pi i hbar t)) exp(i m (x-y)^2 / (2 hbar t))
    euclidean: the Wick rotation t -> -i t, a heat kernel; with m = hbar = 1
    this is (2 pi t)^(-1/2) exp(-(x-y)^2/(2t)).
    """
    if not t > 0:
        raise ValueError("kernel needs t > 0")
    if mode == "realtime":
        amp = math.sqrt(m / (2.0 * math.pi * hbar * t))
        return complex(amp * np.exp(-0.25j * np.pi) * np.exp(1j * m * (x - y) ** 2 / (2.0 * hbar * t)))
    if mode == "euclidean":
        amp = math.sqrt(m / (2.0 * math.pi * hbar * t))
        return complex(amp * math.exp(-m * (x - y) ** 2 / (2.0 * hbar * t)))
    raise ValueError(f"unknown mode {mode!r}")


@dataclass
class WaveFunction:
    """L^2 state sampled on a uniform grid, with physical constants."""

    f: SampledFunction
    m: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        peak = np.max(np.abs(self.f.values))
        if peak > 0:
            edge = max(abs(self.f.values[0]), abs(self.f.values[-1]))
            if edge > BOUNDARY_TOL * peak:
                raise ValueError(
                    "grid too narrow: boundary amplitude exceeds 1e-10 of the peak"
                )

    def norm(self) -> float:
        return self.f.norm_l2()

    @property
    def grid(self) -> np.ndarray:
        return self.f.grid

    @classmethod
    def _unchecked(cls, f: SampledFunction, m: float, hbar: float) -> "WaveFunction":
        # evolution may legitimately push amplitude toward the boundary;
        # callers warn instead of failing the construction invariant
        obj = object.__new__(cls)
        obj.f, obj.m, obj.hbar = f, m, hbar
        return obj


def _check_spill(values: np.ndarray):
    peak = np.max(np.abs(values))
    edge = max(abs(values[0]), abs(values[-1]))
    if peak > 0 and edge > BOUNDARY_TOL * peak:
        warnings.warn("evolved state spilled to the grid boundary", RuntimeWarning)


def evolve_free(psi: WaveFunction, t: float, mode: str = "realtime") -> WaveFunction:
    """Free evolution by Fourier multiplier.

    realtime multiplies fhat(k) by exp(-i hbar k^2 t / (2m)) (unitary, any
    sign of t); heat mode uses exp(-hbar k^2 t / (2m)) for imaginary-time
    propagation.
    """
    fhat = fourier_transform(psi.f, "forward")
    k0, dk = fhat.x0, fhat.dx
    k = k0 + dk * np.arange(fhat.n)
    w = psi.hbar * k ** 2 / (2.0 * psi.m)
    if mode == "realtime":
        mult = np.exp(-1j * w * t)
    elif mode == "heat":
        mult = np.exp(-w * t)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    evolved = SampledFunction(fhat.x0, fhat.dx, fhat.values * mult)
    back = fourier_transform(evolved, "inverse")
    _check_spill(back.values)
    return WaveFunction._unchecked(
        SampledFunction(psi.f.x0, psi.f.dx, back.values), psi.m, psi.hbar
    )


def trotter_evolve(potential, psi: WaveFunction, t: float, n: int,
                   mode: str = "realtime") -> WaveFunction:
    """n alternating split steps of (free) x (potential).

    The operator product acts right to left, so each step multiplies by the
    potential factor first, then free-evolves by t/n.  realtime uses
    exp(-i dt V / hbar); imaginary uses exp(-dt V) with the heat kernel.
    """
    if n < 1:
        raise ValueError("need at least one Trotter step")
    if mode not in ("realtime", "imaginary"):
        raise ValueError(f"unknown mode {mode!r}")
    grid = psi.grid
    v = np.asarray([potential(x) for x in grid], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("potential not finite on the grid")
    dt = t / n
    if mode == "realtime":
        vfactor = np.exp(-1j * dt * v / psi.hbar)
        free_mode = "realtime"
    else:
        vfactor = np.exp(-dt * v)
        free_mode = "heat"
    state = psi
    for _ in range(n):
        stepped = SampledFunction(state.f.x0, state.f.dx, state.f.values * vfactor)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            state = evolve_free(
                WaveFunction._unchecked(stepped, state.m, state.hbar), dt, mode=free_mode
            )
    _check_spill(state.f.values)
    return state


def eigen_propagator(h: TruncatedOperator, t: float) -> TruncatedOperator:
    """U(t) = sum_j exp(-i t lambda_j / hbar) |phi_j><phi_j| by diagonalization."""
    if not h.is_selfadjoint():
        raise NotSelfAdjointError("propagator needs a self-adjoint generator")
    hbar = h.params[2]
    lam, vecs = np.linalg.eigh(h.entries)
    phases = np.exp(-1j * t * lam / hbar)
    u = (vecs * phases) @ vecs.conj().T
    return TruncatedOperator(u, h.params)


def timeslice_free_kernel(t: float, x: float, y: float, m: float = 1.0,
                          hbar: float = 1.0, n: int = 1) -> complex:
    """Free propagator from the n-slice finite-dimensional path integral.

    Evaluates A(n,t) * int_{R^{n-1}} exp(i S/hbar) dx_1..dx_{n-1} exactly
    through the Fresnel closed form on the tridiagonal quadratic form of the
    sliced action, with A(n,t) = (m / (2 pi i hbar (t/n)))^{n/2}.  The chain
    of Gaussian integrals collapses to the one-slice kernel for every n.
    """
    if n < 1 or not t > 0:
        raise ValueError("need n >= 1 slices and t > 0")
    dt = t / n
    c = m / (hbar * dt)
    norm = (m / (2.0 * math.pi * hbar * dt)) ** (n / 2.0) * np.exp(-0.25j * math.pi * n)
    if n == 1:
        return complex(norm * np.exp(0.5j * c * (x - y) ** 2))
    tri = 2.0 * np.eye(n - 1) - np.eye(n - 1, k=1) - np.eye(n - 1, k=-1)
    form = QuadraticForm(c * tri)
    w = np.zeros(n - 1, dtype=complex)
    w[0] = -1j * c * x
    w[-1] = -1j * c * y
    boundary = np.exp(0.5j * c * (x ** 2 + y ** 2))
    return complex(norm * boundary * fresnel_integral(form, w))
