import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from displab.fields import (
    Field,
    SpaceTimeField,
    composite_spacetime_norm,
    gaussian,
    lp_norm,
    make_grid,
    random_wavepackets,
    read_snapshot,
    spacetime_norm,
    write_snapshot,
)
from displab.propagator import evolve_interval


class TestGrid:
    def test_frequency_lattice_unit_spacing(self):
        g = make_grid(1, 8, 2 * np.pi)
        assert np.allclose(np.sort(g.xi1), np.arange(-4, 4))

    def test_two_dimensional_spacing(self):
        g = make_grid(2, 256, 128.0)
        assert g.shape == (256, 256)
        assert g.dxi == pytest.approx(np.pi / 64)

    @pytest.mark.parametrize("args", [(1, 7, 10.0), (3, 8, 1.0), (1, 8, 0.0), (1, 4, 1.0)])
    def test_rejects_bad_parameters(self, args):
        with pytest.raises(ValueError):
            make_grid(*args)

    def test_refine_keeps_box(self):
        g = make_grid(1, 64, 10.0).refine()
        assert (g.n, g.L) == (128, 10.0)


class TestField:
    def test_round_trip(self, grid1d, rng):
        f = random_wavepackets(grid1d, rng)
        back = Field.from_spectrum(grid1d, f.spectrum)
        assert np.max(np.abs(back.samples - f.samples)) <= 1e-12 * np.max(np.abs(f.samples))

    def test_parseval(self, grid1d, rng):
        for _ in range(10):
            f = random_wavepackets(grid1d, rng)
            assert f.l2_spectral() == pytest.approx(lp_norm(f, 2), rel=1e-10)

    def test_from_fourier_inverts_fourier_values(self, grid1d):
        fhat = np.exp(-grid1d.xi1**2)
        f = Field.from_fourier(grid1d, fhat)
        assert np.allclose(f.fourier_values(), fhat, atol=1e-12)

    def test_from_fourier_gaussian_oracle(self):
        g = make_grid(1, 512, 64.0)
        # int e^{-xi^2/2} e^{i x xi} dxi / (2 pi) = e^{-x^2/2} / sqrt(2 pi)
        f = Field.from_fourier(g, np.exp(-g.xi1**2 / 2))
        assert np.allclose(f.samples, np.exp(-g.x1**2 / 2) / np.sqrt(2 * np.pi), atol=1e-12)

    def test_samples_are_read_only(self, grid1d):
        f = Field.zeros(grid1d)
        with pytest.raises(ValueError):
            f.samples[0] = 1.0

    def test_band_limit_guard(self):
        g = make_grid(1, 64, 2 * np.pi)
        noisy = Field(g, np.random.default_rng(0).normal(size=64))
        with pytest.raises(ValueError, match="band-limited"):
            noisy.check_band_limited()

    def test_evaluate_matches_samples(self, grid1d, rng):
        f = random_wavepackets(grid1d, rng, kmax=4.0)
        assert np.allclose(f.evaluate(grid1d.x1[::37]), f.samples[::37], atol=1e-10)

    def test_grid_mismatch(self, grid1d):
        with pytest.raises(ValueError, match="grid mismatch"):
            Field.zeros(grid1d) + Field.zeros(make_grid(1, 512, 64.0))


class TestLpNorm:
    def test_zero_field(self, grid1d):
        assert lp_norm(Field.zeros(grid1d), 3) == 0.0

    def test_constant_field_volume(self):
        g = make_grid(2, 16, 3.0)
        assert lp_norm(Field(g, np.ones(g.shape)), 2) == pytest.approx(3.0)

    def test_gaussian_closed_form(self):
        g = make_grid(1, 2**12, 64.0)
        assert lp_norm(gaussian(g), 2) == pytest.approx(np.pi**0.25, abs=1e-6)

    def test_gaussian_quadrature_oracle(self):
        g = make_grid(1, 2**10, 64.0)
        val, _ = integrate.quad(lambda x: np.exp(-3 * x**2 / 2), -np.inf, np.inf)
        assert lp_norm(gaussian(g), 3) == pytest.approx(val ** (1 / 3), rel=1e-10)

    def test_rejects_small_exponent(self, grid1d):
        with pytest.raises(ValueError):
            lp_norm(Field.zeros(grid1d), 0.5)


class TestSpaceTimeNorm:
    def test_constant_in_time(self, grid1d, rng):
        f = random_wavepackets(grid1d, rng)
        u = SpaceTimeField((f,) * 5, 0.0, 1.0)
        assert spacetime_norm(u, 3, 4) == pytest.approx(lp_norm(f, 4))

    def test_diagonal_case_against_brute_force(self):
        g = make_grid(1, 256, 32.0)
        u = evolve_interval(gaussian(g), -1.0, 1.0, 129)
        a = np.abs(u.array()) ** 4
        w = np.full(u.nt, u.dt)
        w[[0, -1]] *= 0.5
        brute = (np.sum(w[:, None] * a) * g.dx) ** 0.25
        assert spacetime_norm(u, 4, 4) == pytest.approx(brute, rel=1e-12)

    def test_gaussian_against_closed_form_evolution(self):
        g = make_grid(1, 512, 64.0)
        u = evolve_interval(gaussian(g), -1.0, 1.0, 257)
        # |U(t) e^{-x^2/2}|^4 = (1 + 4 t^2)^{-1} e^{-2 x^2 / (1 + 4 t^2)}
        exact, _ = integrate.quad(lambda t: (1 + 4 * t * t) ** -1 * math.sqrt(math.pi * (1 + 4 * t * t) / 2), -1, 1)
        assert spacetime_norm(u, 4, 4) == pytest.approx(exact**0.25, rel=1e-5)

    def test_composite_pieces(self, grid1d):
        f = gaussian(grid1d)
        whole = evolve_interval(f, 0.0, 1.0, 65)
        pieces = [evolve_interval(f, 0.0, 0.5, 33), evolve_interval(f, 0.5, 1.0, 33)]
        assert composite_spacetime_norm(pieces, 4, 4) == pytest.approx(spacetime_norm(whole, 4, 4), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.1, 0.99), st.sampled_from([1.0, 2.0, 4.0, np.inf]))
    def test_monotone_in_integrand(self, c, p):
        g = make_grid(1, 64, 16.0)
        f = gaussian(g)
        u = SpaceTimeField((f, f.scale(0.5)), 0.0, 1.0)
        v = SpaceTimeField((f.scale(c), f.scale(0.5 * c)), 0.0, 1.0)
        assert spacetime_norm(v, p, p) <= spacetime_norm(u, p, p)


def test_snapshot_round_trip(tmp_path, grid1d, rng):
    f = random_wavepackets(grid1d, rng)
    path = tmp_path / "f.bin"
    write_snapshot(path, f, t=0.25)
    g, t = read_snapshot(path)
    assert t == 0.25
    assert g.grid == f.grid
    assert np.array_equal(g.samples, f.samples)


def test_snapshot_layout(tmp_path):
    g = make_grid(1, 8, 1.0)
    f = Field(g, np.arange(8) + 1j)
    write_snapshot(tmp_path / "s.bin", f, 2.0)
    raw = (tmp_path / "s.bin").read_bytes()
    assert len(raw) == 32 + 16 * 8
    vals = np.frombuffer(raw, dtype="<f8", offset=32)
    assert np.array_equal(vals[0::2], np.arange(8.0)) and np.all(vals[1::2] == 1.0)
