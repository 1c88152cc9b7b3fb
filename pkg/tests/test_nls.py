import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from displab.fields import Field, gaussian, make_grid
from displab.harness.fitting import fit_loglog
from displab.nls import (
    NlsRun,
    duhamel_N3,
    energy_monitors,
    higher_iterates,
    homogeneity_error,
    identity_residual,
    picard_series,
    solve_v,
    splitstep_solve,
    sup_l2_distance,
    write_monitor_csv,
)
from displab.propagator import evolve_interval


@pytest.fixture
def line():
    return make_grid(1, 512, 64.0)


def _small(line, a=0.25):
    return gaussian(line, 1.5).scale(a)


class TestNlsRun:
    def test_rejects_bad_sign(self, line):
        with pytest.raises(ValueError):
            NlsRun(gaussian(line), sign=0)

    def test_rejects_plane(self):
        g = make_grid(2, 16, 8.0)
        with pytest.raises(ValueError):
            NlsRun(gaussian(g))

    def test_amplitude_guard(self, line):
        with pytest.raises(ValueError, match="amplitude guard"):
            splitstep_solve(NlsRun(gaussian(line).scale(20.0), T=0.1, dt=0.01))

    def test_record_every_must_divide(self, line):
        with pytest.raises(ValueError):
            splitstep_solve(NlsRun(gaussian(line), T=1.0, dt=0.1, record_every=3))


class TestSplitStep:
    def test_zero_coupling_is_free_flow(self, line):
        f = gaussian(line)
        u = splitstep_solve(NlsRun(f, coupling=0.0, T=1.0, dt=0.05))
        free = evolve_interval(f, 0.0, 1.0, u.nt)
        assert sup_l2_distance(u, free) < 1e-12

    def test_mass_and_energy(self, line):
        u = splitstep_solve(NlsRun(gaussian(line, 2.0), T=1.0, dt=1 / 512))
        mon = energy_monitors(u)
        assert np.max(np.abs(mon.mass / mon.mass[0] - 1)) < 1e-8
        assert np.max(np.abs(mon.E / mon.E[0] - 1)) < 1e-6

    def test_focusing_soliton(self):
        g = make_grid(1, 1024, 64.0)
        prof = np.sqrt(2) / np.cosh(g.x1)
        u = splitstep_solve(NlsRun(Field(g, prof), sign=-1, T=1.0, dt=1 / 1024, record_every=64))
        dev = max(np.max(np.abs(np.abs(s.samples) - prof)) for s in u.slices)
        assert dev < 1e-4

    def test_strang_order(self, line):
        f = gaussian(line, 2.0)
        ref = splitstep_solve(NlsRun(f, T=1.0, dt=1 / 2048, record_every=2048))
        steps = [32, 64, 128, 256]
        errs = [sup_l2_distance(splitstep_solve(NlsRun(f, T=1.0, dt=1 / n, record_every=n)), ref) for n in steps]
        assert fit_loglog(steps, errs).slope == pytest.approx(-2.0, abs=0.2)


class TestDuhamel:
    def test_grid_mismatch(self, line):
        a = evolve_interval(gaussian(line), 0, 1, 5)
        b = evolve_interval(gaussian(line), 0, 1, 6)
        with pytest.raises(ValueError):
            duhamel_N3(a, a, b)

    def test_constant_in_time_integrand(self, line):
        # N3 of a stationary zero-frequency profile: -i sign int_0^t U(t - s) F ds
        f = gaussian(line)
        u = evolve_interval(Field(line, np.ones(line.shape) * 0.5), 0.0, 0.5, 257)
        out = duhamel_N3(u, u, u, sign=1)
        # for a constant F = 1/8 the flow is trivial: -i t / 8
        assert np.allclose(out.slices[-1].samples, -1j * 0.5 / 8, atol=1e-12)
        assert f.grid == out.grid

    def test_duhamel_matches_splitstep_first_order(self, line):
        f = _small(line, 0.05)
        u0 = evolve_interval(f, 0.0, 1.0, 401)
        u = splitstep_solve(NlsRun(f, T=1.0, dt=1 / 1600, record_every=4))
        first = u0.array() + duhamel_N3(u0, u0, u0).array()
        rel = sup_l2_distance(u, first) / sup_l2_distance(u, u0.array())
        assert rel < 0.05


class TestPicard:
    def test_even_terms_vanish_and_order(self, line):
        st_ = picard_series(_small(line), 5, 1.0, 201)
        assert sorted(st_.A) == [1, 2, 3, 4, 5]
        assert np.all(st_.A[2].array() == 0) and np.all(st_.A[4].array() == 0)
        assert not st_.flags

    @pytest.mark.parametrize("m", [1, 3, 5])
    def test_homogeneity(self, line, m):
        assert homogeneity_error(_small(line), m, 0.3, 1.0, 101) < 1e-8

    def test_rejects_even_order(self, line):
        with pytest.raises(ValueError):
            picard_series(_small(line), 4, 1.0, 11)

    def test_nonconvergence_flag(self, line):
        st_ = picard_series(gaussian(line, 1.5).scale(3.0), 3, 1.0, 201)
        assert any("non-convergence" in s for s in st_.flags)


class TestIterates:
    def test_identity_residual(self, line):
        stack = higher_iterates(_small(line), 4, 1.0, 201)
        for j in (2, 3, 4):
            assert identity_residual(stack, j) < 1e-6

    def test_identity_index_range(self, line):
        stack = higher_iterates(_small(line), 2, 1.0, 11)
        with pytest.raises(ValueError):
            identity_residual(stack, 3)

    def test_solve_v_recovers_solution(self, line):
        f = _small(line)
        sol, stack = solve_v(f, 3, 1.0, 401)
        assert sol.converged and sol.small_data
        full = sum(s.array() for s in stack.u) + sol.v.array()
        u = splitstep_solve(NlsRun(f, T=1.0, dt=1 / 1600, record_every=4))
        assert sup_l2_distance(u, full) < 1e-4

    def test_large_data_reported(self, line):
        sol, stack = solve_v(gaussian(line, 1.5).scale(4.0), 2, 1.0, 101, max_iter=5)
        assert not sol.converged
        assert any("solve_v" in s for s in stack.flags)


@settings(max_examples=8, deadline=None)
@given(st.floats(0.02, 0.3))
def test_duhamel_cubic_scaling(a):
    g = make_grid(1, 128, 32.0)
    f = gaussian(g, 1.5)
    u1 = evolve_interval(f, 0.0, 0.5, 33)
    ua = evolve_interval(f.scale(a), 0.0, 0.5, 33)
    lhs = duhamel_N3(ua, ua, ua).array()
    rhs = a**3 * duhamel_N3(u1, u1, u1).array()
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(rhs)))


class TestMonitors:
    def test_gronwall_pathwise(self, line):
        f = gaussian(line, 1.5)
        u = splitstep_solve(NlsRun(f, T=1.0, dt=1 / 256))
        w = evolve_interval(f, 0.0, 1.0, u.nt)
        mon = energy_monitors(u, w)
        assert mon.finite
        C = mon.gronwall_constant
        assert np.all(mon.E <= C * (mon.E_tilde + mon.M + 1) + 1e-15)
        assert mon.M[0] < 1e-28

    def test_time_grid_mismatch(self, line):
        f = gaussian(line)
        u = evolve_interval(f, 0, 1, 5)
        with pytest.raises(ValueError):
            energy_monitors(u, evolve_interval(f, 0, 1, 6))

    def test_csv(self, line, tmp_path):
        u = evolve_interval(gaussian(line), 0, 1, 4)
        write_monitor_csv(tmp_path / "m.csv", energy_monitors(u))
        rows = (tmp_path / "m.csv").read_text().strip().splitlines()
        assert len(rows) == 5
