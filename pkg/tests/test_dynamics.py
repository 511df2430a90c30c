import math

import numpy as np
import pytest

from vpshell import (
    DomainError,
    Ensemble,
    IntegratorConfig,
    ShellParticle,
    StiffnessError,
    acceleration,
    adaptive_dt,
    step,
)
from vpshell.dynamics import energy_drift, run

FOUR_PI = 4.0 * math.pi


def circular_ell(r, enclosed):
    return math.sqrt(r * enclosed / FOUR_PI)


class TestAcceleration:
    def test_lone_particle_no_self_force(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.0)])
        assert acceleration(e)[0] == 0.0

    def test_outer_particle_feels_interior_mass(self):
        # bound M / (4 pi r^2) attained by a purely radial outer shell
        e = Ensemble(0.0, [0.5, 2.0], [0.0, 0.0], [0.0, 0.0], [3.0, 1e-9])
        assert acceleration(e)[1] == pytest.approx(-3.0 / (FOUR_PI * 4.0), rel=1e-12)

    def test_circular_orbit_balances(self):
        ell = circular_ell(2.0, 3.0)
        e = Ensemble(0.0, [0.5, 2.0], [0.0, 0.0], [0.0, ell], [3.0, 1e-9])
        assert acceleration(e)[1] == pytest.approx(0.0, abs=1e-15)

    def test_coincident_radii_see_only_smaller(self):
        e = Ensemble(0.0, [1.0, 1.0, 0.5], [0, 0, 0], [0, 0, 0], [1.0, 1.0, 2.0])
        acc = acceleration(e)
        expected = -2.0 / (FOUR_PI * 1.0)
        assert acc[0] == pytest.approx(expected)
        assert acc[1] == pytest.approx(expected)


class TestStep:
    def test_free_particle_exact(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.25)])
        out = step(e, 2.0)
        assert out.r[0] == pytest.approx(1.5, rel=1e-15)
        assert out.w[0] == pytest.approx(0.25)
        assert out.time == 2.0

    def test_circular_orbit_is_discrete_fixed_point(self):
        ell = circular_ell(2.0, 3.0)
        e = Ensemble(0.0, [0.5, 2.0], [0.0, 0.0], [0.0, ell], [3.0, 1e-9])
        out = e
        for _ in range(50):
            out = step(out, 0.5)
        assert out.r[1] == 2.0
        # ell^2 is not exactly r^3 M/(4 pi) in floats, so w only holds
        # to accumulated roundoff
        assert abs(out.w[1]) < 1e-15

    def test_angular_momentum_bitwise_conserved(self):
        e = Ensemble(0.0, [1.0, 2.0], [0.1, -0.2], [0.3, 0.7], [1.0, 1.0])
        out = step(e, 0.3)
        assert np.array_equal(out.ell, e.ell)
        assert np.array_equal(out.mass, e.mass)

    def test_time_reversibility(self):
        e = Ensemble(
            0.0, [1.0, 2.0, 3.0], [0.3, -0.2, 0.1], [0.2, 0.0, 0.4], [0.3, 0.3, 0.4]
        )
        fwd = step(e, 0.05)
        back = step(Ensemble(0.0, fwd.r, -fwd.w, fwd.ell, fwd.mass), 0.05)
        assert np.max(np.abs(back.r - e.r)) < 1e-12
        assert np.max(np.abs(-back.w - e.w)) < 1e-12

    def test_radial_reflection_through_centre(self):
        # purely radial infall crosses r = 0 and comes back out
        e = Ensemble(0.0, [0.5], [-2.0], [0.0], [1.0])
        out = step(e, 1.0)
        assert out.r[0] > 0.0
        assert out.w[0] > 0.0

    def test_rejection_subdivides_for_ell_positive(self):
        # with angular momentum the centrifugal wall must not be
        # crossed; a too-large requested step completes via halving
        e = Ensemble(0.0, [0.5], [-2.0], [0.3], [1e-12])
        out = step(e, 1.0)
        assert out.r[0] > 0.0

    def test_adaptive_run_resolves_pericenter(self):
        # accuracy near the wall is the step-size controller's job
        e = Ensemble(0.0, [0.5], [-2.0], [0.3], [1e-12])
        sink = run(e, IntegratorConfig(t_end=2.0, output_cadence=0.05, dt_safety=0.05))
        ekin = sink.series("energy_kinetic")
        assert np.max(np.abs(ekin - ekin[0])) / ekin[0] < 1e-3
        assert min(rec.inner_radius for rec in sink.records) > 0.1

    def test_stiffness_error_when_dt_min_too_large(self):
        e = Ensemble(0.0, [0.5], [-2.0], [0.3], [1e-12])
        with pytest.raises(StiffnessError):
            step(e, 1.0, dt_min=0.5)

    def test_bad_dt(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.0)])
        with pytest.raises(DomainError):
            step(e, 0.0)


class TestAdaptiveDt:
    def test_at_rest_clamps_to_cadence(self):
        ell = circular_ell(2.0, 3.0)
        e = Ensemble(0.0, [0.5, 2.0], [0.0, 0.0], [0.0, ell], [3.0, 1e-9])
        cfg = IntegratorConfig(t_end=1.0, output_cadence=0.25)
        assert adaptive_dt(e, cfg) == 0.25

    def test_linear_in_safety(self):
        e = Ensemble(0.0, [1.0, 2.0], [0.5, -0.1], [0.0, 0.2], [1.0, 1.0])
        lo = adaptive_dt(e, IntegratorConfig(t_end=1.0, output_cadence=100.0, dt_safety=0.05))
        hi = adaptive_dt(e, IntegratorConfig(t_end=1.0, output_cadence=100.0, dt_safety=0.1))
        assert hi == pytest.approx(2.0 * lo, rel=1e-12)

    def test_fast_inner_particle_dominates(self):
        e = Ensemble(0.0, [0.01, 10.0], [5.0, 0.0], [0.0, 0.0], [1.0, 1.0])
        cfg = IntegratorConfig(t_end=1.0, output_cadence=100.0, dt_safety=1.0)
        # r/|w| of the inner particle = 0.002
        assert adaptive_dt(e, cfg) == pytest.approx(0.002, rel=1e-6)


class TestRun:
    def test_zero_horizon_single_record(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.1)])
        sink = run(e, IntegratorConfig(t_end=0.0, output_cadence=1.0))
        assert len(sink.records) == 1
        assert sink.records[0].time == 0.0

    def test_record_times_are_cadence_multiples(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.1)])
        sink = run(e, IntegratorConfig(t_end=2.0, output_cadence=0.5))
        assert np.allclose(sink.times(), [0.0, 0.5, 1.0, 1.5, 2.0])

    def test_final_partial_record(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.1)])
        sink = run(e, IntegratorConfig(t_end=1.3, output_cadence=0.5))
        assert sink.times()[-1] == pytest.approx(1.3)

    def test_snapshots_at_requested_times(self):
        e = Ensemble.from_particles([ShellParticle(1.0, 0.5)])
        sink = run(
            e,
            IntegratorConfig(t_end=2.0, output_cadence=1.0),
            snapshot_times=(0.75, 2.0),
        )
        assert [s.time for s in sink.snapshots] == [0.75, 2.0]
        # free particle: snapshot radius is exact
        assert sink.snapshots[0].r[0] == pytest.approx(1.0 + 0.5 * 0.75, rel=1e-12)

    def test_bound_system_energy_drift(self):
        # light tracer on an eccentric orbit around a heavy shell;
        # fixed step (clamped by cadence) over 1e4 steps
        ell = circular_ell(2.0, 1.0) * 0.9
        e = Ensemble(0.0, [0.5, 2.0], [0.0, 0.0], [0.0, ell], [1.0, 1e-6])
        cfg = IntegratorConfig(t_end=200.0, output_cadence=0.02, dt_safety=1.0)
        sink = run(e, cfg)
        assert len(sink.records) > 10_000
        assert energy_drift(sink) < 1e-6

    def test_mass_exactly_conserved(self):
        e = Ensemble(0.0, [1.0, 2.0], [0.3, -0.3], [0.1, 0.2], [0.25, 0.75])
        sink = run(e, IntegratorConfig(t_end=5.0, output_cadence=1.0))
        masses = sink.series("mass")
        assert np.all(masses == masses[0])

    def test_deterministic_rerun(self):
        import vpshell

        spec = vpshell.ShellSpec(
            mass=1.0, r_inner=1.0, r_outer=1.5, w_min=0.2, w_max=0.4, n=200, seed=9
        )
        cfg = IntegratorConfig(t_end=3.0, output_cadence=0.5)
        outs = []
        for _ in range(2):
            ens, _ = vpshell.build_shell(spec)
            sink = run(ens, cfg, r_grid=(1.0,), q_list=(5 / 3,))
            outs.append(sink.series("variance"))
        assert np.array_equal(outs[0], outs[1])


class TestIdentities:
    def test_dilation_identity_residual(self):
        # d/dt sum(m r w) = E + E_kin, verified by finite differences
        import vpshell

        spec = vpshell.ShellSpec(
            mass=1.0, r_inner=1.0, r_outer=1.25, w_min=0.5, w_max=0.6, n=2000, seed=1
        )
        ens, _ = vpshell.build_shell(spec)
        sink = run(ens, IntegratorConfig(t_end=20.0, output_cadence=0.25, dt_safety=0.05))
        t = sink.times()
        dil = sink.series("dilation_moment")
        ekin = sink.series("energy_kinetic")
        etot = sink.series("energy_total")
        lhs = np.diff(dil) / np.diff(t)
        rhs = etot[0] + 0.5 * (ekin[1:] + ekin[:-1])
        scale = np.abs(etot[0]) + 0.5 * (ekin[1:] + ekin[:-1])
        assert np.max(np.abs(lhs - rhs) / scale) < 0.01

    def test_conformal_identity_residual(self):
        import vpshell

        spec = vpshell.ShellSpec(
            mass=1.0, r_inner=1.0, r_outer=1.25, w_min=0.5, w_max=0.6, n=2000, seed=1
        )
        ens, _ = vpshell.build_shell(spec)
        sink = run(ens, IntegratorConfig(t_end=20.0, output_cadence=0.25, dt_safety=0.05))
        t = sink.times()
        conf = sink.series("conformal_moment")
        epot = sink.series("energy_potential")
        lhs = np.diff(conf) / np.diff(t)
        rhs = np.diff(t**2 * 2.0 * epot) / np.diff(t) - (
            0.5 * (t[1:] + t[:-1]) * (epot[1:] + epot[:-1])
        )
        scale = np.maximum(np.abs(lhs), np.abs(rhs))
        scale = np.maximum(scale, 0.02 * np.max(np.abs(lhs)))
        assert np.max(np.abs(lhs - rhs) / scale) < 0.02
