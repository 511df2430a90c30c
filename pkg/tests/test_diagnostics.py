import math

import numpy as np
import pytest

from vpshell import (
    DomainError,
    Ensemble,
    ShellParticle,
    build_radial_profile,
    concentration_function,
    concentration_mass,
    conformal_moment,
    cumulative_mass,
    dilation_moment,
    galilean_shift,
    kinetic_energy,
    lq_norm,
    potential_energy,
    statistical_dispersion,
)
from conftest import random_ensemble


def uniform_ball(n, mass=1.0, radius=1.0, circular=False):
    """Deterministic equal-mass sampling of a constant-density ball."""
    frac = (np.arange(n) + 0.5) / n
    r = radius * frac ** (1.0 / 3.0)
    ell = r**2 * math.sqrt(mass / (4.0 * math.pi * radius**3)) if circular else np.zeros(n)
    return Ensemble(0.0, r, np.zeros(n), ell, np.full(n, mass / n))


class TestCumulativeMass:
    def test_all_enclosed(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.0)])
        assert cumulative_mass(e, 2.0) == 1.0

    def test_none_enclosed(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.0)])
        assert cumulative_mass(e, 0.5) == 0.0

    def test_partial_sum(self):
        # independent oracle: direct sum over the particles below the query
        r = np.array([1.0, 2.0, 3.0])
        m = np.array([0.2, 0.3, 0.5])
        e = Ensemble(0.0, r, np.zeros(3), np.zeros(3), m)
        assert cumulative_mass(e, 2.5) == pytest.approx(float(m[r < 2.5].sum()))
        assert cumulative_mass(e, 2.5) == pytest.approx(0.5)

    def test_strict_at_own_radius(self):
        e = Ensemble(0.0, [1.0, 1.0], [0.0, 0.0], [0.0, 0.0], [0.4, 0.6])
        # coincident radii see neither themselves nor each other
        assert cumulative_mass(e, 1.0) == 0.0

    def test_monotone_in_radius(self, rng):
        for _ in range(20):
            e = random_ensemble(rng)
            q = np.sort(rng.uniform(0.0, 12.0, 40))
            vals = cumulative_mass(e, q)
            assert np.all(np.diff(vals) >= 0.0)
            assert vals[-1] <= e.total_mass + 1e-12

    def test_domain_errors(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.0)])
        with pytest.raises(DomainError):
            cumulative_mass(e, float("nan"))
        with pytest.raises(DomainError):
            cumulative_mass(e, -1.0)
        with pytest.raises(DomainError):
            Ensemble(0.0, [], [], [], [])


class TestContainerValidation:
    def test_ensemble_rejects_bad_fields(self):
        with pytest.raises(DomainError):
            Ensemble(0.0, [0.0], [0.0], [0.0], [1.0])  # r must be > 0
        with pytest.raises(DomainError):
            Ensemble(0.0, [1.0], [0.0], [-0.1], [1.0])
        with pytest.raises(DomainError):
            Ensemble(0.0, [1.0], [np.inf], [0.0], [1.0])
        with pytest.raises(DomainError):
            Ensemble(0.0, [1.0, 2.0], [0.0], [0.0], [1.0])
        with pytest.raises(DomainError):
            ShellParticle(1.0, 0.0, 0.0, 0.0)  # massless

    def test_profile_rejects_bad_edges(self):
        from vpshell import RadialDensityProfile

        with pytest.raises(DomainError):
            RadialDensityProfile([0.0, 1.0, 0.5], [1.0, 1.0])
        with pytest.raises(DomainError):
            RadialDensityProfile([0.0, 1.0], [-1.0])

    def test_kurth_state_requires_positive_radius(self):
        from vpshell import KurthState

        with pytest.raises(DomainError):
            KurthState(0.0, 0.0, 1.0)

    def test_ensemble_arrays_read_only(self):
        e = Ensemble(0.0, [1.0], [0.0], [0.0], [1.0])
        with pytest.raises(ValueError):
            e.r[0] = 2.0


class TestPotentialEnergy:
    def test_single_shell(self):
        # only the exterior tail contributes: M^2 / (8 pi r)
        for mass in (1.0, 2.5):
            e = Ensemble(0.0, [1.0], [0.0], [0.0], [mass])
            assert potential_energy(e) == pytest.approx(mass**2 / (8 * math.pi), rel=1e-14)

    def test_two_shells_by_hand(self):
        # (1/8pi) [ (1/2)^2 (1/1 - 1/2) + 1/2 ] = 5 / (64 pi)
        e = Ensemble(0.0, [1.0, 2.0], [0.0, 0.0], [0.0, 0.0], [0.5, 0.5])
        assert potential_energy(e) == pytest.approx(5.0 / (64 * math.pi), rel=1e-14)

    def test_uniform_ball_closed_form(self):
        # integral of M(<r)^2/r^2 for M = r^3 on [0,1] plus the tail = 6/5
        e = uniform_ball(10_000)
        assert potential_energy(e) == pytest.approx(3.0 / (20 * math.pi), rel=1e-2)

    def test_order_invariance(self, rng):
        e = random_ensemble(rng, n_max=30)
        perm = rng.permutation(e.n)
        shuffled = Ensemble(0.0, e.r[perm], e.w[perm], e.ell[perm], e.mass[perm])
        assert potential_energy(shuffled) == pytest.approx(potential_energy(e), rel=1e-13)

    def test_pairwise_oracle(self, rng):
        # independent route: expanding M(<r)^2 into pair terms gives
        # (1/(8 pi)) sum_ij m_i m_j / max(r_i, r_j)
        for _ in range(20):
            e = random_ensemble(rng, n_max=40)
            pair = np.sum(
                np.outer(e.mass, e.mass) / np.maximum.outer(e.r, e.r)
            ) / (8 * math.pi)
            assert potential_energy(e) == pytest.approx(pair, rel=1e-12)


class TestKineticEnergy:
    def test_at_rest(self):
        e = Ensemble(0.0, [1.0, 2.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0])
        assert kinetic_energy(e) == 0.0

    def test_radial_only(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 2.0, 0.0, 1.0)])
        assert kinetic_energy(e) == pytest.approx(2.0)

    def test_circular_ball(self):
        e = uniform_ball(10_000, circular=True)
        assert kinetic_energy(e) == pytest.approx(3.0 / (40 * math.pi), rel=1e-2)


class TestMoments:
    def test_variance_single_shell(self):
        e = Ensemble(0.0, [2.0], [0.0], [0.0], [0.7])
        assert statistical_dispersion(e) == pytest.approx(4.0)

    def test_variance_uniform_ball(self):
        assert statistical_dispersion(uniform_ball(10_000)) == pytest.approx(0.6, rel=1e-2)

    def test_variance_two_shells(self):
        e = Ensemble(0.0, [1.0, 3.0], [0.0, 0.0], [0.0, 0.0], [0.75, 0.25])
        assert statistical_dispersion(e) == pytest.approx(3.0)

    def test_dilation(self):
        e = Ensemble(0.0, [2.0], [3.0], [0.0], [1.0])
        assert dilation_moment(e) == pytest.approx(6.0)
        at_rest = Ensemble(0.0, [1.0, 2.0], [0.0, 0.0], [0.0, 0.0], [1.0, 1.0])
        assert dilation_moment(at_rest) == 0.0

    def test_conformal_reduces_to_spatial_at_t0(self, rng):
        e = random_ensemble(rng)
        expected = statistical_dispersion(e) * e.total_mass
        assert conformal_moment(e, 0.0) == pytest.approx(expected, rel=1e-12)

    def test_conformal_vanishes_when_x_equals_tp(self):
        e = Ensemble(0.0, [1.0], [1.0], [0.0], [1.0])
        assert conformal_moment(e, 1.0) == 0.0

    def test_conformal_by_hand(self):
        # r=2, w=1, ell=2, t=1: 4 - 4 + (1 + 1) = 2
        e = Ensemble(0.0, [2.0], [1.0], [2.0], [1.0])
        assert conformal_moment(e, 1.0) == pytest.approx(2.0, rel=1e-12)

    def test_conformal_nonnegative(self, rng):
        for _ in range(20):
            e = random_ensemble(rng)
            assert conformal_moment(e, rng.uniform(0, 10)) >= 0.0


class TestConcentration:
    def test_ball_contains_shell(self):
        e = Ensemble(0.0, [1.0], [0.0], [0.0], [1.0])
        assert concentration_mass(e, 0.0, 2.0) == 1.0
        assert concentration_mass(e, 0.0, 0.5) == 0.0

    def test_cap_fraction_by_hand(self):
        # mu = (1 + 0.75 - 0.25) / (2 sqrt(0.75)) = sqrt(3)/2
        e = Ensemble(0.0, [1.0], [0.0], [0.0], [1.0])
        expected = (1.0 - math.sqrt(3.0) / 2.0) / 2.0
        assert concentration_mass(e, math.sqrt(0.75), 0.5) == pytest.approx(expected, rel=1e-12)

    def test_cap_against_monte_carlo(self, rng):
        # 1e5 uniform points on each sphere; agreement within 3 standard errors
        for _ in range(25):
            e = random_ensemble(rng, n_max=20)
            R = 10.0 ** rng.uniform(-1.0, 0.7)
            d = rng.uniform(0.0, e.r.max() + R)
            n_pts = 100_000
            total = 0.0
            var = 0.0
            for r_i, m_i in zip(e.r, e.mass):
                xyz = rng.normal(size=(n_pts, 3))
                xyz *= r_i / np.linalg.norm(xyz, axis=1)[:, None]
                xyz[:, 0] -= d
                p_hat = np.mean(np.einsum("ij,ij->i", xyz, xyz) < R * R)
                total += m_i * p_hat
                var += m_i**2 * p_hat * (1 - p_hat) / n_pts
            sigma = math.sqrt(var)
            assert abs(concentration_mass(e, d, R) - total) <= 3.0 * sigma + 1e-12

    def test_sup_not_at_shell_radius(self):
        # the best centre for a thin shell sits at sqrt(r^2 - R^2), not at r
        e = Ensemble(0.0, [1.0], [0.0], [0.0], [1.0])
        expected = (1.0 - math.sqrt(3.0) / 2.0) / 2.0
        val = concentration_function(e, 0.5)
        assert val == pytest.approx(expected, rel=1e-9)
        # dense-scan oracle
        scan = max(concentration_mass(e, d, 0.5) for d in np.linspace(0, 1.5, 20001))
        assert val >= scan - 1e-10

    def test_sup_is_total_mass_for_large_ball(self, rng):
        e = random_ensemble(rng)
        assert concentration_function(e, e.r.max() * 1.5) == pytest.approx(e.total_mass)

    def test_two_separated_shells(self):
        e = Ensemble(0.0, [1.0, 100.0], [0.0, 0.0], [0.0, 0.0], [0.9, 0.1])
        val = concentration_function(e, 2.0)
        scan = max(concentration_mass(e, d, 2.0) for d in np.linspace(0, 102, 40001))
        assert val == pytest.approx(0.9, abs=1e-9)
        assert val >= scan - 1e-9

    def test_monotone_in_radius(self, rng):
        for _ in range(5):
            e = random_ensemble(rng, n_max=20)
            radii = np.sort(10.0 ** rng.uniform(-1, 1, 6))
            vals = [concentration_function(e, R) for R in radii]
            assert all(b >= a - 1e-10 for a, b in zip(vals, vals[1:]))
            assert all(0.0 <= v <= e.total_mass + 1e-12 for v in vals)

    def test_matches_dense_scan(self, rng):
        for _ in range(10):
            e = random_ensemble(rng, n_max=30)
            R = 10.0 ** rng.uniform(-0.7, 0.7)
            val = concentration_function(e, R)
            if R > e.r.max():
                assert val == pytest.approx(e.total_mass)
                continue
            grid = np.linspace(0.0, e.r.max() + R, 20001)
            scan = max(concentration_mass(e, d, R) for d in grid)
            assert val >= scan - 1e-6 * e.total_mass
            assert val <= e.total_mass + 1e-12

    def test_domain_error(self):
        e = Ensemble(0.0, [1.0], [0.0], [0.0], [1.0])
        with pytest.raises(DomainError):
            concentration_mass(e, 0.0, -1.0)
        with pytest.raises(DomainError):
            concentration_function(e, 0.0)


class TestRadialProfile:
    def test_single_particle_single_bin(self):
        e = Ensemble(0.0, [2.0], [0.0], [0.0], [3.0])
        prof = build_radial_profile(e, 1)
        assert prof.bin_density[0] == pytest.approx(3.0 / ((4 * math.pi / 3) * 8.0))

    def test_uniform_ball_density(self):
        prof = build_radial_profile(uniform_ball(100_000), 50)
        # outer bins are well sampled; inner ones are noisier
        assert np.median(prof.bin_density[10:]) == pytest.approx(3 / (4 * math.pi), rel=5e-2)

    def test_mass_closure(self, rng):
        for _ in range(10):
            e = random_ensemble(rng)
            prof = build_radial_profile(e, int(rng.integers(1, 40)))
            assert prof.binned_mass() == pytest.approx(e.total_mass, rel=1e-12)

    def test_empty_bin_zero_density(self):
        e = Ensemble(0.0, [0.1, 10.0], [0, 0], [0, 0], [1.0, 1.0])
        prof = build_radial_profile(e, 20)
        assert np.any(prof.bin_density == 0.0)


class TestLqNorm:
    def test_q1_recovers_mass(self, rng):
        # midpoint rule in radius, so q=1 carries discretisation error
        # dominated by the innermost occupied bins; per bin the midpoint
        # volume element never exceeds the exact one, so the norm is a
        # one-sided estimate of the mass
        for _ in range(5):
            e = random_ensemble(rng)
            prof = build_radial_profile(e, 30)
            val = lq_norm(prof, 1.0)
            assert val == pytest.approx(e.total_mass, rel=0.15)
            assert val <= e.total_mass * (1.0 + 1e-12)
        ball = uniform_ball(50_000)
        prof = build_radial_profile(ball, 200)
        assert lq_norm(prof, 1.0) == pytest.approx(1.0, rel=2e-3)

    def test_uniform_ball_closed_form(self):
        prof = build_radial_profile(uniform_ball(100_000), 50)
        assert lq_norm(prof, 5.0 / 3.0) == pytest.approx(0.5638512613244827, rel=2e-2)

    def test_domain_error(self):
        prof = build_radial_profile(uniform_ball(100), 5)
        with pytest.raises(DomainError):
            lq_norm(prof, 0.5)


class TestGalileanShift:
    def test_identity(self):
        E, Q = galilean_shift(1.3, (0.1, 0.2, 0.3), 2.0, (0.0, 0.0, 0.0))
        assert E == 1.3
        assert np.allclose(Q, (0.1, 0.2, 0.3))

    def test_worked_example(self):
        E, Q = galilean_shift(1.0, (0.0, 0.0, 0.0), 1.0, (2.0, 0.0, 0.0))
        assert E == pytest.approx(3.0)
        assert np.allclose(Q, (-2.0, 0.0, 0.0))
        assert E - np.dot(Q, Q) / 2.0 == pytest.approx(1.0)

    def test_boost_round_trip(self, rng):
        E0, Q0, M = 0.7, rng.normal(size=3), 1.7
        u = rng.normal(size=3)
        E1, Q1 = galilean_shift(E0, Q0, M, u)
        E2, Q2 = galilean_shift(E1, Q1, M, -u)
        assert E2 == pytest.approx(E0, abs=1e-13)
        assert np.allclose(Q2, Q0)

    def test_invariant_random(self, rng):
        # 1e4 random boosts: E - |Q|^2/(2M) preserved to roundoff
        n = 10_000
        E = rng.normal(0, 5, n)
        Q = rng.normal(0, 3, (n, 3))
        M = rng.lognormal(0, 1, n)
        u = rng.normal(0, 3, (n, 3))
        inv0 = E - np.einsum("ij,ij->i", Q, Q) / (2 * M)
        Qp = Q - M[:, None] * u
        Ep = E - np.einsum("ij,ij->i", Q, u) + 0.5 * M * np.einsum("ij,ij->i", u, u)
        inv1 = Ep - np.einsum("ij,ij->i", Qp, Qp) / (2 * M)
        scale = np.abs(E) + np.abs(inv0) + M * np.einsum("ij,ij->i", u, u) + 1.0
        assert np.max(np.abs(inv1 - inv0) / scale) < 1e-12

    def test_mass_domain_error(self):
        with pytest.raises(DomainError):
            galilean_shift(1.0, (0, 0, 0), 0.0, (1, 0, 0))
