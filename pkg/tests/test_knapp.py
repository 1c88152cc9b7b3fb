import numpy as np
import pytest

from displab.fields import lp_norm
from displab.harness.fitting import fit_loglog
from displab.knapp import (
    KnappSpec,
    aniso_high_grid,
    aniso_unit_grid,
    isotropic_grid,
    make_aniso_high,
    make_aniso_unit,
    make_isotropic,
    make_knapp,
    refocus_lower_bound,
    theta,
    tube_lower_bound,
)
from displab.modspace import ModNormSpec, modulation_norm, sobolev_lp_norm
from displab.propagator import evolve_free

EPS = [2.0**-k for k in range(3, 8)]


class TestSpec:
    @pytest.mark.parametrize("family,scale", [("aniso_unit", 0.75), ("aniso_high", 6), ("isotropic", 2), ("other", 8)])
    def test_rejects(self, family, scale):
        with pytest.raises(ValueError):
            KnappSpec(family, scale)

    def test_theta_profile(self):
        r = np.array([0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 5.0])
        assert np.allclose(theta(r), [0, 0, 1, 1, 1, 0, 0])


class TestAnisoUnit:
    def test_l2_slope(self):
        vals = [lp_norm(make_aniso_unit(e, aniso_unit_grid(e)), 2) for e in EPS]
        assert fit_loglog(EPS, vals).slope == pytest.approx(0.5, abs=0.05)

    def test_sinc_oracle(self):
        eps = 2.0**-4
        g = aniso_unit_grid(eps)
        f = make_aniso_unit(eps, g)
        # int_{1-eps}^{1+eps} e^{i x xi} dxi = 2 sin(eps x) / x e^{i x}
        x = g.x1[np.abs(g.x1) < 40]
        with np.errstate(invalid="ignore", divide="ignore"):
            ref = np.where(x == 0, 2 * eps, 2 * np.sin(eps * x) / x) * np.exp(1j * x)
        got = f.evaluate(x)
        assert np.max(np.abs(got - ref)) < 0.02 * 2 * eps
        assert abs(f.evaluate(np.array([0.0]))[0]) == pytest.approx(2 * eps, rel=0.02)

    def test_modulation_slope(self):
        vals = [modulation_norm(make_aniso_unit(e, aniso_unit_grid(e)), ModNormSpec(0, 4, 2)) for e in EPS]
        assert fit_loglog(EPS, vals).slope == pytest.approx(0.75, abs=0.1)

    def test_q_independence(self):
        f = make_aniso_unit(2.0**-4, aniso_unit_grid(2.0**-4))
        vals = [modulation_norm(f, ModNormSpec(0, 4, q)) for q in (1, 2, np.inf)]
        assert max(vals) / min(vals) <= 2

    def test_resolution_rejected(self):
        from displab.fields import make_grid

        with pytest.raises(ValueError):
            make_aniso_unit(2.0**-4, make_grid(1, 256, 32.0))

    def test_tube_window_warning(self):
        eps = 2.0**-3
        g = aniso_unit_grid(eps)
        with pytest.warns(RuntimeWarning, match="tube"):
            tube_lower_bound(eps, g, 4, 4, (-200.0, 200.0), steps=5)


class TestAnisoHigh:
    def test_rescaling_identity(self):
        lam = 16
        gh = aniso_high_grid(lam)
        fh = make_aniso_high(lam, gh)
        gu = aniso_unit_grid(1 / lam)
        fu = make_aniso_unit(1 / lam, gu)
        x = np.linspace(-3, 3, 41)
        assert np.max(np.abs(fh.evaluate(x) - lam * fu.evaluate(lam * x))) < 1e-8

    def test_modulation_flat_in_lambda(self):
        lams = [16, 32, 64, 128, 256]
        vals = [modulation_norm(make_aniso_high(l, aniso_high_grid(l)), ModNormSpec(0, 4, 2)) for l in lams]
        assert max(vals) / min(vals) <= 2

    @pytest.mark.parametrize("s", [0.5, 1.0])
    def test_sobolev_slope(self, s):
        lams = [16, 32, 64, 128, 256]
        vals = [sobolev_lp_norm(make_aniso_high(l, aniso_high_grid(l)), s, 4) for l in lams]
        assert fit_loglog(lams, vals).slope == pytest.approx(s, abs=0.05)


class TestIsotropic:
    def test_bounded_and_decaying(self):
        lam = 16
        g = isotropic_grid(lam)
        f = make_isotropic(lam, g)
        a = np.abs(f.samples)
        assert a.max() < 1.5
        # the annulus reaches |eta| = 4 lam, so the chirp spreads over |x| <= 8 lam
        assert np.max(a[np.abs(g.x1) > 9 * lam]) < 1e-4 * a.max()

    def test_refocuses_at_one(self):
        lam = 16
        g = isotropic_grid(lam)
        f = make_isotropic(lam, g)
        peaks = [np.max(np.abs(evolve_free(f, t).samples)) for t in (0.0, 0.5, 1.0)]
        assert peaks[2] > 4 * peaks[0] and peaks[2] > peaks[1]

    def test_refocus_slope(self):
        lams = [8, 16, 32, 64]
        vals = [refocus_lower_bound(l, isotropic_grid(l), 4, 4) for l in lams]
        assert fit_loglog(lams, vals).slope == pytest.approx(0.25, abs=0.15)

    def test_refocus_needs_slices(self):
        with pytest.raises(ValueError):
            refocus_lower_bound(8, isotropic_grid(8), 4, 4, steps=8)


def test_make_knapp_dispatch():
    f = make_knapp(KnappSpec("aniso_high", 16), aniso_high_grid(16))
    assert np.allclose(f.samples, make_aniso_high(16, aniso_high_grid(16)).samples)
