"""Classical mechanics on R^{2n}: polynomial observables and discrete paths.

Observables are restricted to polynomials in (x_1..x_n, p_1..p_n), so
Poisson brackets are exact symbolic computations and every bracket identity
can be tested to machine zero.  The flow integrator is a leapfrog
(kick-drift-kick) step, which preserves the symplectic form exactly for
separable Hamiltonians T(p) + V(x).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import optimize


class BoundaryHitError(RuntimeError):
    """Legendre maximizer landed on the search-interval boundary."""


class NonSeparableError(ValueError):
    """Hamiltonian mixes x and p in one monomial; leapfrog does not apply."""


@dataclass(frozen=True)
class PhasePolynomial:
    """Polynomial on phase space R^{2n}.

    ``terms`` maps exponent tuples (a_1..a_n, b_1..b_n) for the monomial
    x^a p^b to real coefficients; zero coefficients are never stored.
    """

    n: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 2 * self.n:
                raise ValueError("exponent tuple length must be 2n")
            if c != 0.0:
                cleaned[exps] = cleaned.get(exps, 0.0) + float(c)
        object.__setattr__(self, "terms", {e: c for e, c in cleaned.items() if c != 0.0})

    @classmethod
    def coordinate(cls, n: int, which: str, j: int, coeff: float = 1.0):
        """The observable x_j (which='x') or p_j (which='p'), 0-based j."""
        exps = [0] * (2 * n)
        exps[j if which == "x" else n + j] = 1
        return cls(n, {tuple(exps): coeff})

    @classmethod
    def constant(cls, n: int, value: float):
        return cls(n, {tuple([0] * (2 * n)): value})

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = PhasePolynomial.constant(self.n, other)
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, 0.0) + c
        return PhasePolynomial(self.n, terms)

    def __sub__(self, other):
        return self + (other * -1.0 if isinstance(other, PhasePolynomial) else -other)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return PhasePolynomial(self.n, {e: c * other for e, c in self.terms.items()})
        if other.n != self.n:
            raise ValueError("dimension mismatch")
        terms = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                terms[e] = terms.get(e, 0.0) + c1 * c2
        return PhasePolynomial(self.n, terms)

    __rmul__ = __mul__

    def diff(self, which: str, j: int):
        """Exact partial derivative with respect to x_j or p_j."""
        idx = j if which == "x" else self.n + j
        terms = {}
        for e, c in self.terms.items():
            if e[idx] == 0:
                continue
            new = list(e)
            new[idx] -= 1
            terms[tuple(new)] = terms.get(tuple(new), 0.0) + c * e[idx]
        return PhasePolynomial(self.n, terms)

    def __call__(self, x, p) -> float:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        p = np.atleast_1d(np.asarray(p, dtype=float))
        total = 0.0
        for e, c in self.terms.items():
            term = c
            for j in range(self.n):
                if e[j]:
                    term *= x[j] ** e[j]
                if e[self.n + j]:
                    term *= p[j] ** e[self.n + j]
            total += term
        return total

    def total_degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        object.__setattr__(self, "p", np.atleast_1d(np.asarray(self.p, dtype=float)))
        if self.x.shape != self.p.shape:
            raise ValueError("position and momentum dimensions disagree")


@dataclass
class Path:
    """Discretized trajectory: strictly increasing times, values q(t_i)."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.ndim != 1 or self.times.size < 2:
            raise ValueError("path needs at least two nodes")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        if self.values.shape[0] != self.times.size:
            raise ValueError("one value per time required")

    @property
    def is_uniform(self) -> bool:
        dt = np.diff(self.times)
        return bool(np.allclose(dt, dt[0], rtol=1e-12, atol=1e-14))


def poisson_bracket(f: PhasePolynomial, g: PhasePolynomial) -> PhasePolynomial:
    """{f, g} = sum_j (df/dx_j dg/dp_j - dg/dx_j df/dp_j), exactly."""
    if f.n != g.n:
        raise ValueError("dimension mismatch")
    out = PhasePolynomial(f.n, {})
    for j in range(f.n):
        out = out + f.diff("x", j) * g.diff("p", j) - g.diff("x", j) * f.diff("p", j)
    return out


def _split_separable(h: PhasePolynomial):
    """Split H = T(p) + V(x); raise if any monomial mixes x and p."""
    n = h.n
    t_terms, v_terms = {}, {}
    for e, c in h.terms.items():
        has_x = any(e[:n])
        has_p = any(e[n:])
        if has_x and has_p:
            raise NonSeparableError("Hamiltonian is not separable as T(p) + V(x)")
        (t_terms if has_p else v_terms)[e] = c
    return PhasePolynomial(n, t_terms), PhasePolynomial(n, v_terms)


def hamiltonian_flow(h: PhasePolynomial, s0: PhaseState, t: float, steps: int):
    """Leapfrog trajectory of Hamilton's equations, steps+1 states.

    Kick-drift-kick with dH/dp from T and -dH/dx from V; the one-step map
    has unit Jacobian determinant (symplectic) and is time reversible.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    kinetic, potential = _split_separable(h)
    n = h.n
    dt_dp = [kinetic.diff("p", j) for j in range(n)]
    dv_dx = [potential.diff("x", j) for j in range(n)]
    dt = t / steps
    x = s0.x.copy()
    p = s0.p.copy()
    out = [PhaseState(x.copy(), p.copy())]
    grad_v = np.array([g(x, p) for g in dv_dx])
    for _ in range(steps):
        p_half = p - 0.5 * dt * grad_v
        x = x + dt * np.array([g(x, p_half) for g in dt_dp])
        grad_v = np.array([g(x, p_half) for g in dv_dx])
        p = p_half - 0.5 * dt * grad_v
        out.append(PhaseState(x.copy(), p.copy()))
    return out


def leapfrog_jacobian(h: PhasePolynomial, s: PhaseState, dt: float, fd_eps: float = 1e-6):
    """Numerical Jacobian of one leapfrog step at state s (for Liouville checks)."""
    z0 = np.concatenate([s.x, s.p])
    dim = z0.size
    jac = np.zeros((dim, dim))

    def step(z):
        st = PhaseState(z[: dim // 2], z[dim // 2:])
        res = hamiltonian_flow(h, st, dt, 1)[-1]
        return np.concatenate([res.x, res.p])

    for k in range(dim):
        dz = np.zeros(dim)
        dz[k] = fd_eps
        jac[:, k] = (step(z0 + dz) - step(z0 - dz)) / (2 * fd_eps)
    return jac


def legendre_transform(f, p: float, search_interval, tol: float = 1e-10) -> float:
    """max_x (p*x - f(x)) for convex f, maximizer interior to the interval."""
    lo, hi = search_interval
    res = optimize.minimize_scalar(
        lambda x: f(x) - p * x, bounds=(lo, hi), method="bounded",
        options={"xatol": tol},
    )
    xstar = res.x
    margin = 1e-6 * (hi - lo)
    if xstar - lo < margin or hi - xstar < margin:
        raise BoundaryHitError(
            f"maximizer {xstar:.6g} hit the boundary of [{lo}, {hi}]; widen the interval"
        )
    return float(p * xstar - f(xstar))


def action(mass: float, potential, path: Path) -> float:
    """Time-sliced action with piecewise-linear kinetic term.

    S = sum_i dt_i [ m/2 |(q_{i+1}-q_i)/dt_i|^2 - V(q_i) ]; the potential is
    sampled at the left endpoint, matching the slicing of the propagator.
    """
    q = path.values if path.values.ndim > 1 else path.values[:, None]
    dt = np.diff(path.times)
    dq = np.diff(q, axis=0)
    kinetic = 0.5 * mass * np.sum(dq ** 2, axis=1) / dt
    v_left = np.array([potential(qi) for qi in q[:-1]], dtype=float)
    return float(np.sum(kinetic - dt * v_left))


def euler_lagrange_residual(mass: float, potential, grad_potential, path: Path):
    """-grad V(q_i) - m (q_{i+1} - 2 q_i + q_{i-1}) / dt^2 at interior nodes."""
    if not path.is_uniform:
        raise ValueError("residual needs a uniform time grid")
    q = path.values if path.values.ndim > 1 else path.values[:, None]
    dt = path.times[1] - path.times[0]
    accel = (q[2:] - 2 * q[1:-1] + q[:-2]) / dt ** 2
    grad = np.array([np.atleast_1d(grad_potential(qi)) for qi in q[1:-1]], dtype=float)
    return -grad - mass * accel
