"""Brownian paths, cylinder sets, bridges, and Feynman-Kac estimators.

Units are fixed to hbar = m = 1 with H = -1/2 d^2/dx^2 + V throughout, so
the heat kernel is (2 pi t)^(-1/2) exp(-(x-y)^2/(2t)) and Brownian
increments over dt are centered Gaussians of variance dt.

The potential in every discretized exponential is sampled at the LEFT
endpoint of each sub-interval.  Monte Carlo accumulation is vectorized over
paths in a fixed order, so a given RngStream reproduces results bit for
bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from funcint.mechanics import Path
from funcint.rng import RngStream


@dataclass
class BrownianPath:
    """Uniform-grid path on [0, T] pinned to 0 at time 0."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values[0] != 0.0:
            raise ValueError("Brownian path must start at 0")
        if not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


@dataclass
class CylinderSet:
    """Times 0 < t_1 < ... < t_k and one interval (a_i, b_i] per time.

    Infinite ends are passed as -inf / +inf.
    """

    times: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        if not (self.times.size and self.times[0] > 0 and np.all(np.diff(self.times) > 0)):
            raise ValueError("need strictly increasing positive times")
        if self.lower.shape != self.times.shape or self.upper.shape != self.times.shape:
            raise ValueError("one box per time required")
        if np.any(self.lower > self.upper):
            raise ValueError("box lower bounds exceed upper bounds")

    @property
    def k(self) -> int:
        return self.times.size


def sample_brownian(t_final: float, steps: int, rng: RngStream) -> BrownianPath:
    """One Brownian path on a uniform grid with steps increments."""
    if steps < 1 or not t_final > 0:
        raise ValueError("need steps >= 1 and T > 0")
    gen = rng.generator()
    dt = t_final / steps
    increments = gen.normal(0.0, math.sqrt(dt), size=steps)
    values = np.concatenate([[0.0], np.cumsum(increments)])
    times = np.linspace(0.0, t_final, steps + 1)
    return BrownianPath(times, values)


def sample_brownian_batch(t_final: float, steps: int, n_paths: int, rng: RngStream) -> np.ndarray:
    """(n_paths, steps+1) array of Brownian paths, one stream draw."""
    gen = rng.generator()
    dt = t_final / steps
    incr = gen.normal(0.0, math.sqrt(dt), size=(n_paths, steps))
    out = np.zeros((n_paths, steps + 1))
    np.cumsum(incr, axis=1, out=out[:, 1:])
    return out


_GL_RULE = np.polynomial.legendre.leggauss(48)


def _gauss_legendre_panel(a, b):
    x, w = _GL_RULE
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _box_nodes(lo, hi, scale):
    """Composite Gauss-Legendre nodes over a (possibly unbounded) box."""
    cut = 10.0 * scale
    a = max(lo, -cut)
    b = min(hi, cut)
    if not b > a:
        b = a + 1e-12
    panels = max(2, int(np.ceil((b - a) / (0.5 * scale))))
    panels = min(panels, 80)
    edges = np.linspace(a, b, panels + 1)
    nodes, weights = [], []
    for lo_p, hi_p in zip(edges[:-1], edges[1:]):
        x, w = _gauss_legendre_panel(lo_p, hi_p)
        nodes.append(x)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def cylinder_probability(cyl: CylinderSet) -> float:
    """Wiener measure of a cylinder set by iterated Gaussian quadrature.

    Propagates the heat kernel through each box in turn; supported for
    k <= 4 times (use Monte Carlo beyond that).
    """
    if cyl.k > 4:
        raise ValueError("cylinder quadrature supported for k <= 4; use Monte Carlo")
    dts = np.diff(np.concatenate([[0.0], cyl.times]))
    spread = math.sqrt(cyl.times[-1])
    # density carried on quadrature nodes of the previous slice
    prev_nodes = np.array([0.0])
    prev_density = np.array([1.0])
    for i in range(cyl.k):
        nodes, weights = _box_nodes(cyl.lower[i], cyl.upper[i], spread)
        dt = dts[i]
        kernel = np.exp(-((nodes[:, None] - prev_nodes[None, :]) ** 2) / (2.0 * dt))
        kernel /= math.sqrt(2.0 * math.pi * dt)
        density = weights * (kernel @ prev_density)
        prev_nodes, prev_density = nodes, density
    return float(np.sum(prev_density))


def sample_bridge(x: float, y: float, a: float, b: float, steps: int, rng: RngStream) -> Path:
    """Brownian bridge from (a, x) to (b, y) by sequential conditioning.

    Each new point is drawn from its exact Gaussian conditional given the
    current point and the pinned endpoint, so marginals are exact at every
    resolution.  The path carries no kernel weight; the bridge measure's
    total mass (2 pi (b-a))^(-1/2) exp(-(x-y)^2/(2(b-a))) is
    :func:`bridge_weight`.
    """
    if not b > a:
        raise ValueError("need b > a")
    gen = rng.generator()
    times = np.linspace(a, b, steps + 1)
    values = np.empty(steps + 1)
    values[0], values[-1] = x, y
    cur = x
    for i in range(1, steps):
        remaining = b - times[i - 1]
        dt = times[i] - times[i - 1]
        mean = cur + (y - cur) * dt / remaining
        var = dt * (b - times[i]) / remaining
        cur = gen.normal(mean, math.sqrt(var))
        values[i] = cur
    return Path(times, values)


def bridge_weight(x: float, y: float, a: float, b: float) -> float:
    """Total mass of the conditional Wiener measure from (a,x) to (b,y)."""
    dt = b - a
    return math.exp(-((x - y) ** 2) / (2.0 * dt)) / math.sqrt(2.0 * math.pi * dt)


def holder_statistic(path: BrownianPath, alpha: float) -> float:
    """max over dyadic lags L of max_i |x(t_{i+L}) - x(t_i)| / (L dt)^alpha."""
    values = path.values
    dt = path.times[1] - path.times[0]
    if not np.allclose(np.diff(path.times), dt, rtol=1e-12, atol=1e-14):
        raise ValueError("statistic needs a uniform grid")
    n = values.size - 1
    best = 0.0
    lag = 1
    while lag <= n:
        increments = np.abs(values[lag:] - values[:-lag])
        best = max(best, float(np.max(increments)) / (lag * dt) ** alpha)
        lag *= 2
    return best


def feynman_kac(potential, psi, t: float, x0: float, n_paths: int, steps: int,
                rng: RngStream, chunk: int = 100_000):
    """Monte Carlo for (e^{-tH} psi)(x0) over Brownian paths from x0.

    Averages psi(x(t)) exp(-sum_j dt V(x(t_{j-1}))) with the left-endpoint
    Riemann sum of the potential integral.  Returns (estimate, stderr).
    """
    if not t > 0:
        raise ValueError("need t > 0")
    dt = t / steps
    sqdt = math.sqrt(dt)
    gen = rng.generator()
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        x = np.full(m, float(x0))
        integral = np.zeros(m)
        for _ in range(steps):
            integral += dt * potential(x)
            x = x + sqdt * gen.standard_normal(m)
        if not np.all(np.isfinite(integral)):
            raise FloatingPointError("potential produced non-finite values along paths")
        samples = psi(x) * np.exp(-integral)
        total += float(np.sum(samples))
        total_sq += float(np.sum(samples ** 2))
        done += m
    mean = total / n_paths
    var = max(total_sq / n_paths - mean ** 2, 0.0)
    return mean, math.sqrt(var / n_paths)


def feynman_kac_kernel(potential, t: float, x: float, y: float, n_paths: int,
                       steps: int, rng: RngStream, chunk: int = 50_000):
    """Bridge estimator of the kernel of e^{-tH}.

    Heat-kernel weight times the bridge average of exp(-int V), again with
    left-endpoint sampling.  Returns (estimate, stderr).
    """
    if not t > 0:
        raise ValueError("need t > 0")
    dt = t / steps
    gen = rng.generator()
    times = np.linspace(0.0, t, steps + 1)
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        cur = np.full(m, float(x))
        integral = dt * potential(cur)
        for i in range(1, steps):
            remaining = t - times[i - 1]
            step_dt = times[i] - times[i - 1]
            mean = cur + (y - cur) * step_dt / remaining
            var = step_dt * (t - times[i]) / remaining
            cur = mean + math.sqrt(var) * gen.standard_normal(m)
            integral += dt * potential(cur)
        if not np.all(np.isfinite(integral)):
            raise FloatingPointError("potential produced non-finite values along bridges")
        samples = np.exp(-integral)
        total += float(np.sum(samples))
        total_sq += float(np.sum(samples ** 2))
        done += m
    weight = bridge_weight(x, y, 0.0, t)
    mean = total / n_paths
    var = max(total_sq / n_paths - mean ** 2, 0.0)
    return weight * mean, weight * math.sqrt(var / n_paths)
