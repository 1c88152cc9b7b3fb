import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from displab.fields import Field, gaussian, lp_norm, make_grid, random_wavepackets
from displab.propagator import (
    PARABOLIC,
    DispersionSymbol,
    evolve_free,
    evolve_interval,
    fixed_time_growth,
    fixed_time_probe,
    gaussian_evolved,
    kernel_l1_profile,
    kernel_oracle,
    kernel_samples_1d,
)


def test_time_zero_is_identity(grid1d, rng):
    f = random_wavepackets(grid1d, rng)
    assert evolve_free(f, 0.0) is f


@settings(max_examples=25, deadline=None)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_group_law_and_unitarity(t1, t2):
    g = make_grid(1, 256, 64.0)
    f = random_wavepackets(g, np.random.default_rng(3), kmax=4.0)
    a = evolve_free(evolve_free(f, t1), t2)
    b = evolve_free(f, t1 + t2)
    scale = np.max(np.abs(f.samples))
    assert np.max(np.abs(a.samples - b.samples)) <= 1e-11 * scale
    assert lp_norm(a, 2) == pytest.approx(lp_norm(f, 2), rel=1e-12)


def test_inverse_evolution(grid1d, rng):
    f = random_wavepackets(grid1d, rng)
    back = evolve_free(evolve_free(f, 0.7), -0.7)
    assert np.allclose(back.samples, f.samples, atol=1e-12)


def test_gaussian_oracle():
    g = make_grid(1, 1024, 64.0)
    u = evolve_free(gaussian(g), 1.0)
    assert np.max(np.abs(u.samples - gaussian_evolved(g.x1, 1.0))) < 1e-8


def test_galilean_shift_moduli():
    g = make_grid(1, 1024, 128.0)
    k0 = 16 * g.dxi
    f = gaussian(g)
    boosted = gaussian(g, freq=k0)
    t = 0.75
    a = np.abs(evolve_free(boosted, t).samples)
    b = np.abs(evolve_free(f, t).evaluate(g.x1 - 2 * t * k0))
    assert np.max(np.abs(a - b)) < 1e-10


def test_other_symbols():
    g = make_grid(2, 64, 16.0)
    f = gaussian(g)
    for sym in (DispersionSymbol("fractional", 3.0), DispersionSymbol("signature")):
        assert lp_norm(evolve_free(f, 0.3, sym), 2) == pytest.approx(lp_norm(f, 2), rel=1e-12)
    with pytest.raises(ValueError):
        DispersionSymbol("fractional", 1.0)
    with pytest.raises(ValueError):
        DispersionSymbol("signature").omega(make_grid(1, 8, 1.0))


def test_evolve_interval_slices(grid1d):
    f = gaussian(grid1d)
    u = evolve_interval(f, -1.0, 1.0, 5)
    assert u.nt == 5 and u.dt == pytest.approx(0.5)
    assert np.allclose(u.slices[3].samples, evolve_free(f, 0.5).samples)
    same = evolve_interval(f, 0.2, 0.2, 2)
    assert np.array_equal(same.slices[0].samples, same.slices[1].samples)
    with pytest.raises(ValueError):
        evolve_interval(f, 0, 1, 1)


class TestKernel:
    def test_bound_ratio(self):
        for lam in (8, 16, 32):
            prof = kernel_l1_profile(lam, lam, [0.0, lam**2 / 2, lam**2, 2 * lam**2])
            assert all(s.ratio <= 10 * 2 for s in prof)
            assert all(s.stable for s in prof)

    def test_dense_quadrature_oracle(self):
        lam, t = 32.0, 0.5
        x, K, _ = kernel_samples_1d(lam, lam, t)
        pick = slice(None, None, 97)
        ref = kernel_oracle(lam, lam, t, x[pick], nodes=40001)
        assert np.max(np.abs(K[pick] - ref)) <= 0.01 * np.max(np.abs(K))

    def test_two_dimensional_product(self):
        one = kernel_l1_profile(8, [8.0], [16.0])[0]
        two = kernel_l1_profile(8, [8.0, 8.0], [16.0])[0]
        assert two.l1 == pytest.approx(one.l1**2)
        assert two.bound == pytest.approx(one.bound**2)


class TestFixedTime:
    def test_probe_spectrum_in_unit_ball(self):
        g = make_grid(1, 1024, 256.0)
        p = fixed_time_probe(g)
        assert np.all(np.abs(p.fourier_values())[np.abs(g.xi1) > 1] < 1e-12)

    def test_p2_is_flat(self):
        g = make_grid(1, 4096, 2048.0)
        res = fixed_time_growth(2, 2, 0.0, [4, 8, 16, 32], fixed_time_probe(g))
        assert abs(res.slope) < 0.05

    def test_rejects_small_times(self):
        g = make_grid(1, 256, 64.0)
        with pytest.raises(ValueError):
            fixed_time_growth(4, 2, 0.0, [1, 2, 4, 8], fixed_time_probe(g))

    def test_escape_warning(self):
        g = make_grid(1, 256, 32.0)
        with pytest.warns(RuntimeWarning, match="escapes"):
            fixed_time_growth(4, 2, 0.0, [4, 8, 16, 32], fixed_time_probe(g))


def test_parabolic_default():
    assert PARABOLIC.kind == "parabolic"
    g = make_grid(1, 8, 2 * np.pi)
    assert np.allclose(PARABOLIC.multiplier(g, 1.0), np.exp(-1j * g.xi1**2))
    assert isinstance(evolve_free(Field.zeros(g), 1.0), Field)
