import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from funcint.mechanics import (
    BoundaryHitError,
    NonSeparableError,
    Path,
    PhasePolynomial,
    PhaseState,
    action,
    euler_lagrange_residual,
    hamiltonian_flow,
    leapfrog_jacobian,
    legendre_transform,
    poisson_bracket,
)


def coordinate(which, j, n=2):
    return PhasePolynomial.coordinate(n, which, j)


@st.composite
def phase_polynomials(draw, n=2, max_degree=4, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(1, max_terms))):
        exps = [0] * (2 * n)
        budget = max_degree
        for i in range(2 * n):
            e = draw(st.integers(0, budget))
            exps[i] = e
            budget -= e
        coeff = draw(st.integers(-3, 3))
        terms[tuple(exps)] = terms.get(tuple(exps), 0) + coeff
    return PhasePolynomial(n, terms)


class TestPoissonBracket:
    def test_canonical_pairs(self):
        n = 3
        for i in range(n):
            for j in range(n):
                b = poisson_bracket(coordinate("x", i, n), coordinate("p", j, n))
                expected = {tuple([0] * (2 * n)): 1.0} if i == j else {}
                assert b.terms == expected

    def test_self_bracket_vanishes(self):
        f = PhasePolynomial(2, {(1, 0, 2, 0): 1.5, (0, 1, 0, 1): -2.0, (3, 0, 0, 0): 0.25})
        assert poisson_bracket(f, f).is_zero()

    def test_jacobi_specific(self):
        f = PhasePolynomial(1, {(2, 1): 1.0})   # x^2 p
        g = PhasePolynomial(1, {(1, 1): 1.0})   # x p
        h = PhasePolynomial(1, {(0, 2): 1.0})   # p^2
        lhs = poisson_bracket(f, poisson_bracket(g, h))
        rhs = poisson_bracket(poisson_bracket(f, g), h) + poisson_bracket(g, poisson_bracket(f, h))
        assert (lhs - rhs).is_zero()

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            poisson_bracket(PhasePolynomial(1, {(1, 0): 1.0}), PhasePolynomial(2, {(1, 0, 0, 0): 1.0}))

    @settings(max_examples=30, deadline=None)
    @given(phase_polynomials(), phase_polynomials())
    def test_antisymmetry(self, f, g):
        assert (poisson_bracket(f, g) + poisson_bracket(g, f)).is_zero()

    @settings(max_examples=30, deadline=None)
    @given(phase_polynomials(), phase_polynomials(), phase_polynomials(), st.integers(-3, 3))
    def test_linearity(self, f, g, h, c):
        lhs = poisson_bracket(f, g + float(c) * h)
        rhs = poisson_bracket(f, g) + float(c) * poisson_bracket(f, h)
        assert (lhs - rhs).is_zero()

    @settings(max_examples=30, deadline=None)
    @given(phase_polynomials(max_degree=2), phase_polynomials(max_degree=2), phase_polynomials(max_degree=2))
    def test_leibniz(self, f, g, h):
        lhs = poisson_bracket(f, g * h)
        rhs = poisson_bracket(f, g) * h + poisson_bracket(f, h) * g
        assert (lhs - rhs).is_zero()

    @settings(max_examples=25, deadline=None)
    @given(phase_polynomials(max_degree=2), phase_polynomials(max_degree=2), phase_polynomials(max_degree=2))
    def test_jacobi_property(self, f, g, h):
        lhs = poisson_bracket(f, poisson_bracket(g, h))
        rhs = poisson_bracket(poisson_bracket(f, g), h) + poisson_bracket(g, poisson_bracket(f, h))
        assert (lhs - rhs).is_zero()


HO = PhasePolynomial(1, {(0, 2): 0.5, (2, 0): 0.5})


class TestHamiltonianFlow:
    def test_free_flight_exact(self):
        h = PhasePolynomial(1, {(0, 2): 0.5})  # p^2/2, m = 1
        traj = hamiltonian_flow(h, PhaseState([0.3], [0.7]), 5.0, 7)
        assert traj[-1].x[0] == pytest.approx(0.3 + 0.7 * 5.0, abs=1e-14)
        assert traj[-1].p[0] == 0.7

    def test_oscillator_period(self):
        traj = hamiltonian_flow(HO, PhaseState([1.0], [0.0]), 2 * math.pi, 10_000)
        assert abs(traj[-1].x[0] - 1.0) < 1e-6
        assert abs(traj[-1].p[0]) < 1e-6

    def test_energy_drift_bounded(self):
        traj = hamiltonian_flow(HO, PhaseState([1.0], [0.0]), 100.0, 100_000)
        energies = np.array([HO(s.x, s.p) for s in traj[:: 1000]])
        assert np.max(np.abs(energies - energies[0])) < 1e-6 * energies[0]

    def test_time_reversible(self):
        fwd = hamiltonian_flow(HO, PhaseState([0.4], [0.6]), 3.0, 300)[-1]
        back = hamiltonian_flow(HO, PhaseState(fwd.x, -fwd.p), 3.0, 300)[-1]
        assert abs(back.x[0] - 0.4) < 1e-10
        assert abs(back.p[0] + 0.6) < 1e-10

    def test_symplectic_jacobian(self):
        # quadratic H gives a linear step, so the FD Jacobian is exact for
        # any displacement; the determinant must be 1 to roundoff
        jac = leapfrog_jacobian(HO, PhaseState([0.4], [0.3]), 0.05, fd_eps=0.5)
        assert abs(np.linalg.det(jac) - 1.0) < 1e-12

    def test_observable_transport_matches_bracket(self):
        # d/dt f = {f, H} along the flow, second-order in the step
        f = PhasePolynomial(1, {(1, 1): 1.0})  # x p
        bracket = poisson_bracket(f, HO)
        errs = []
        for steps in (200, 400):
            dt = 2.0 / steps
            traj = hamiltonian_flow(HO, PhaseState([0.9], [0.2]), 2.0, steps)
            fvals = np.array([f(s.x, s.p) for s in traj])
            dfdt = (fvals[2:] - fvals[:-2]) / (2 * dt)
            bvals = np.array([bracket(s.x, s.p) for s in traj[1:-1]])
            errs.append(np.max(np.abs(dfdt - bvals)))
        assert errs[0] < 0.02
        assert errs[1] < errs[0] / 3.0  # O(dt^2) halving

    def test_non_separable_rejected(self):
        with pytest.raises(NonSeparableError):
            hamiltonian_flow(PhasePolynomial(1, {(1, 1): 1.0}), PhaseState([0.0], [0.0]), 1.0, 2)


class TestLegendre:
    def test_square(self):
        assert legendre_transform(lambda x: x * x, 2.0, (-10, 10)) == pytest.approx(1.0, abs=1e-9)

    def test_half_square(self):
        assert legendre_transform(lambda x: 0.5 * x * x, 3.0, (-10, 10)) == pytest.approx(4.5, abs=1e-9)

    def test_involution(self):
        f = lambda x: x ** 4 + x ** 2

        def lf(p):
            return legendre_transform(f, p, (-30.0, 30.0))

        x0 = 0.7
        assert legendre_transform(lf, x0, (-60.0, 60.0)) == pytest.approx(f(x0), abs=1e-6)

    def test_boundary_hit(self):
        with pytest.raises(BoundaryHitError):
            legendre_transform(lambda x: x * x, 30.0, (-1.0, 1.0))


class TestAction:
    def test_two_node_free(self):
        p = Path([0.0, 2.0], [[0.0], [1.0]])
        assert action(1.0, lambda q: 0.0, p) == pytest.approx(1.0 / 4.0, abs=1e-14)

    def test_constant_path(self):
        p = Path([0.0, 0.5, 1.0], [[0.3], [0.3], [0.3]])
        assert action(2.0, lambda q: 0.0, p) == 0.0

    def test_second_order_convergence(self):
        # sliced action of the exact oscillator orbit x = cos t.  Over a full
        # period every Euler-Maclaurin boundary term of the left-endpoint
        # rule cancels and refinement is plainly O(dt^2); on a generic
        # interval the boundary term makes it O(dt), and one Richardson step
        # (the derivation of the expected rate) restores O(dt^2).
        pot = lambda q: 0.5 * float(q @ q)

        errs = []
        for n in (64, 128, 256):
            ts = np.linspace(0.0, 2 * math.pi, n + 1)
            errs.append(abs(action(1.0, pot, Path(ts, np.cos(ts)))))  # analytic S = 0
        for lo, hi in zip(errs[:-1], errs[1:]):
            assert 1.8 < math.log2(lo / hi) < 2.2

        exact = -0.25 * math.sin(2.0)  # S on [0, 1]
        vals = [action(1.0, pot, Path(np.linspace(0.0, 1.0, n + 1), np.cos(np.linspace(0.0, 1.0, n + 1))))
                for n in (64, 128, 256)]
        rich_errs = [abs(2 * vals[i + 1] - vals[i] - exact) for i in range(2)]
        assert 1.8 < math.log2(rich_errs[0] / rich_errs[1]) < 2.2


class TestEulerLagrange:
    def test_linear_path_zero(self):
        ts = np.arange(11) * 0.125  # binary-exact spacing keeps the
        p = Path(ts, 2.0 * ts - 0.5)  # second difference exactly zero
        res = euler_lagrange_residual(1.0, lambda q: 0.0, lambda q: 0.0 * q, p)
        assert np.max(np.abs(res)) == 0.0

    def test_oscillator_solution_small_residual(self):
        ts = np.arange(0.0, 1.0, 1e-3)
        p = Path(ts, np.cos(ts))
        res = euler_lagrange_residual(1.0, lambda q: 0.5 * q @ q, lambda q: q, p)
        assert np.max(np.abs(res)) < 1e-5

    def test_perturbed_path_larger_residual(self):
        ts = np.arange(0.0, 1.0, 1e-3)
        exact = Path(ts, np.cos(ts))
        gen = np.random.default_rng(3)
        bumped = Path(ts, np.cos(ts) + 0.01 * np.sin(7 * ts) + 0.001 * gen.normal(size=ts.size))
        grad = lambda q: q
        pot = lambda q: 0.5 * q @ q
        r_exact = np.linalg.norm(euler_lagrange_residual(1.0, pot, grad, exact))
        r_bumped = np.linalg.norm(euler_lagrange_residual(1.0, pot, grad, bumped))
        assert r_bumped > 10 * r_exact

    def test_non_uniform_grid_rejected(self):
        p = Path([0.0, 0.1, 0.5], [0.0, 1.0, 2.0])
        with pytest.raises(ValueError):
            euler_lagrange_residual(1.0, lambda q: 0.0, lambda q: 0.0 * q, p)
