"""Finite-dimensional Gaussian measures and the Wick-ordering calculus.

A measure here is (mean a, covariance S) with S symmetric positive
definite; its characteristic functional is exp(i<a,y> - 1/2 <Sy,y>).
Linear observables f are identified with vectors, and the pairing
q(f, g) = <S f, g> drives everything else: moments by summing over perfect
matchings, Wick-ordered powers (:f^n:) orthogonal to lower degree,
Feynman-diagram values, and the Cameron-Martin change of density under a
mean shift.

The whole module is deliberately combinatorial and exact; Monte Carlo and
quadrature only appear in the test suite as oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from funcint.rng import RngStream


@dataclass
class GaussianSpec:
    """Mean vector and positive-definite covariance on R^n."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        self.mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        self.cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        n = self.mean.size
        if self.cov.shape != (n, n):
            raise ValueError("covariance shape must match the mean")
        if not np.allclose(self.cov, self.cov.T, atol=1e-12, rtol=0.0):
            raise ValueError("covariance must be symmetric to 1e-12")
        if np.min(np.linalg.eigvalsh(self.cov)) <= 0:
            raise np.linalg.LinAlgError("covariance must be positive definite")

    @property
    def n(self) -> int:
        return self.mean.size

    def pairing(self, u, v) -> float:
        """q(u, v) = <S u, v>."""
        return float(np.asarray(u) @ self.cov @ np.asarray(v))


def sample(spec: GaussianSpec, rng: RngStream) -> np.ndarray:
    """One draw a + L z with L the Cholesky factor of the covariance."""
    return sample_batch(spec, 1, rng)[0]


def sample_batch(spec: GaussianSpec, n_samples: int, rng: RngStream) -> np.ndarray:
    """(n_samples, n) array of draws from the measure."""
    try:
        chol = np.linalg.cholesky(spec.cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("covariance is not positive definite") from exc
    z = rng.generator().standard_normal((n_samples, spec.n))
    return spec.mean[None, :] + z @ chol.T


def characteristic(spec: GaussianSpec, y) -> complex:
    """E[exp(i <y, X>)] = exp(i <a,y> - 1/2 <S y, y>).

    The quadratic form is bilinear (no conjugation), so purely imaginary
    arguments give the analytic continuation to the moment generating
    function.
    """
    y = np.asarray(y)
    quad = np.dot(spec.cov @ y, y)
    return complex(np.exp(1j * np.dot(spec.mean, y) - 0.5 * quad))


@dataclass(frozen=True)
class Diagram:
    """Pairing structure on labeled vertices.

    ``edges`` are disjoint unordered pairs of vertex labels, ``unpaired``
    the remaining labels.  ``blocks``, when present, partition the vertices
    and no edge may stay inside one block (generalized diagrams).
    """

    vertices: tuple
    edges: tuple
    unpaired: tuple
    blocks: Optional[tuple] = None

    def __post_init__(self):
        seen = set()
        for i, j in self.edges:
            if i == j or i in seen or j in seen:
                raise ValueError("edges must be disjoint pairs")
            seen.update((i, j))
        if set(self.unpaired) & seen or set(self.unpaired) | seen != set(self.vertices):
            raise ValueError("unpaired set must be the complement of the edge endpoints")
        if self.blocks is not None:
            membership = {}
            for b, block in enumerate(self.blocks):
                for v in block:
                    membership[v] = b
            for i, j in self.edges:
                if membership[i] == membership[j]:
                    raise ValueError("generalized diagram has an edge inside a block")

    @property
    def rank(self) -> int:
        return len(self.edges)

    def is_complete(self) -> bool:
        return not self.unpaired


def _matchings(items, forbidden=None):
    """All perfect matchings, smallest-unmatched-first, lexicographic."""
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for idx, partner in enumerate(rest):
        if forbidden is not None and forbidden(first, partner):
            continue
        pair = (first, partner)
        remaining = rest[:idx] + rest[idx + 1:]
        for tail in _matchings(remaining, forbidden):
            yield (pair,) + tail


def enumerate_pairings(k: int):
    """All complete pairings of vertices 1..k as Diagram objects.

    (k-1)!! diagrams for even k, none for odd k, in deterministic
    lexicographic order.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    vertices = tuple(range(1, k + 1))
    if k % 2:
        return []
    return [Diagram(vertices, edges, ()) for edges in _matchings(vertices)]


def moment_wick(spec: GaussianSpec, vectors) -> float:
    """E[prod_i <u_i, X>] for the centered measure, by summing matchings."""
    if np.max(np.abs(spec.mean)) != 0.0:
        raise ValueError("moment formula requires a centered measure")
    vectors = [np.asarray(v, dtype=float) for v in vectors]
    k = len(vectors)
    if k % 2:
        return 0.0
    gram = np.array([[spec.pairing(u, v) for v in vectors] for u in vectors])
    total = 0.0
    for edges in _matchings(tuple(range(k))):
        prod = 1.0
        for i, j in edges:
            prod *= gram[i, j]
        total += prod
    return total


@dataclass
class WickPolynomial:
    """Polynomial in k generators with a pairing matrix q.

    ``terms`` maps exponent tuples over the generators to coefficients;
    ``q`` holds q(f_i, f_j).  Coefficient arithmetic follows the supplied
    number types, so Fractions stay exact.
    """

    k: int
    terms: dict
    q: np.ndarray = field(default=None)

    def __post_init__(self):
        self.terms = {tuple(int(x) for x in e): c for e, c in self.terms.items() if c != 0}
        if self.q is not None:
            self.q = np.atleast_2d(np.asarray(self.q, dtype=float))

    def __call__(self, *values):
        total = 0
        for e, c in self.terms.items():
            term = c
            for val, exp in zip(values, e):
                if exp:
                    term = term * val ** exp
            total = total + term
        return total

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)


def wick_order(n: int, q) -> WickPolynomial:
    """(:f^n:) as an explicit polynomial in f.

    (:f^n:) = sum_k n!/(k! (n-2k)!) f^(n-2k) (-q/2)^k, the unique
    polynomial with unit leading coefficient killed by the measure and
    reproduced by d/df up to the factor n.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    terms = {}
    for k in range(n // 2 + 1):
        coeff = math.factorial(n) // (math.factorial(k) * math.factorial(n - 2 * k))
        terms[(n - 2 * k,)] = coeff * (-q / 2) ** k if k else coeff
    return WickPolynomial(1, terms, np.array([[float(q)]]))


def power_in_wick(n: int, q) -> dict:
    """Inverse expansion: f^n = sum_k c_k (:f^(n-2k):); returns degree -> c."""
    out = {}
    for k in range(n // 2 + 1):
        coeff = math.factorial(n) // (math.factorial(k) * math.factorial(n - 2 * k))
        out[n - 2 * k] = coeff * (q / 2) ** k if k else coeff
    return out


def hermite(n: int, x):
    """Probabilists' Hermite polynomial H_n by the three-term recurrence.

    H_0 = 1, H_1 = x, H_{n+1} = x H_n - n H_{n-1}; equals wick_order(n, 1)
    evaluated at x, and exp(t x - t^2/2) = sum t^n/n! H_n(x).
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    prev, cur = 1.0, x
    if n == 0:
        return np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur


def wick_inner(n: int, m: int, qff: float, qgg: float, qfg: float) -> float:
    """Integral of (:f^n:)(:g^m:) d mu = delta_{nm} n! q(f,g)^n."""
    if abs(qfg) > math.sqrt(qff * qgg) * (1 + 1e-12):
        raise ValueError("pairing violates Cauchy-Schwarz")
    if n != m:
        return 0.0
    return math.factorial(n) * qfg ** n


@dataclass
class WickExponential:
    """Truncated series sum_k alpha^k/k! (:f^k:) next to its closed form."""

    alpha: float
    q: float
    trunc: int = 30

    def series(self, x):
        total = 0.0
        for k in range(self.trunc + 1):
            total += self.alpha ** k / math.factorial(k) * wick_order(k, self.q)(x)
        return total

    def closed(self, x):
        return np.exp(self.alpha * x - 0.5 * self.alpha ** 2 * self.q)

    def remainder_l2(self) -> float:
        """L2(mu) norm bound of the dropped tail: sqrt(sum_{k>T} a^{2k} q^k / k!)."""
        tail = 0.0
        for k in range(self.trunc + 1, self.trunc + 60):
            tail += (self.alpha ** 2 * self.q) ** k / math.factorial(k)
        return math.sqrt(tail)


def wick_exp(alpha: float, q: float, trunc: int = 30) -> WickExponential:
    """(:exp(alpha f):): series through (:f^trunc:) plus exp(a f - a^2 q/2)."""
    return WickExponential(alpha, q, trunc)


def eval_diagram(diagram: Diagram, q: np.ndarray, labels=None) -> WickPolynomial:
    """Value of a Feynman diagram: product of q over edges times the
    unpaired monomial.  Complete diagrams give constants."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    if labels is None:
        labels = list(diagram.vertices)
    try:
        index = {v: labels.index(v) for v in diagram.vertices}
    except ValueError as exc:
        raise ValueError("diagram labels not contained in the supplied vectors") from exc
    value = 1.0
    for i, j in diagram.edges:
        value *= q[index[i], index[j]]
    exps = [0] * len(labels)
    for v in diagram.unpaired:
        exps[index[v]] += 1
    return WickPolynomial(len(labels), {tuple(exps): value}, q)


def generalized_wick_expectation(blocks, q: np.ndarray) -> float:
    """Integral of a product of Wick-ordered blocks.

    ``blocks`` lists the vertex labels (row indices of q) of each Wick
    factor; the result sums the edge products over all complete pairings
    with no edge inside one block.
    """
    if not blocks or any(len(b) == 0 for b in blocks):
        raise ValueError("blocks must be nonempty")
    q = np.atleast_2d(np.asarray(q, dtype=float))
    layout = []
    owner = []
    for b, block in enumerate(blocks):
        for label in block:
            layout.append(label)
            owner.append(b)
    k = len(layout)
    if k % 2:
        return 0.0
    positions = tuple(range(k))

    def same_block(i, j):
        return owner[i] == owner[j]

    total = 0.0
    for edges in _matchings(positions, forbidden=same_block):
        prod = 1.0
        for i, j in edges:
            prod *= q[layout[i], layout[j]]
        total += prod
    return total


def cameron_martin_density(h) -> callable:
    """Radon-Nikodym density of the h-shifted standard Gaussian.

    Returns w -> exp(-|h|^2/2) exp(<h, w>); reweighting expectations by it
    turns mean-0 samples into mean-h expectations.
    """
    h = np.atleast_1d(np.asarray(h, dtype=float))
    norm_sq = float(h @ h)

    def density(w):
        w = np.asarray(w, dtype=float)
        return np.exp(-0.5 * norm_sq + w @ h)

    return density


def fock_exp_inner(h1, h2, trunc: int) -> float:
    """<Exp(h1), Exp(h2)> truncated: sum_{n<=trunc} <h1,h2>^n / n!."""
    if trunc < 0:
        raise ValueError("trunc must be >= 0")
    inner = float(np.dot(np.atleast_1d(h1), np.atleast_1d(h2)))
    total = 0.0
    term = 1.0
    for n in range(trunc + 1):
        if n:
            term *= inner / n
        total += term
    return total
