"""
Tests for drive-detuning spectra and the Lorentzian / cosine fits
Run: python test_spectra.py  (or pytest)
"""
import math
import sys

import numpy as np
import pytest

from errors import FitError, FitPreconditionError, PreconditionError
from models import ArrayGeometry, CavityParams, DriveParams, LevelScheme, McConfig, SpectrumCurve
from spectra import (
    default_grid, empty_cavity_spectrum, half_period_cosine_fit, lorentzian, lorentzian_fit,
    sweep_spectrum,
)
from steadystate import predicted_dressed_center

SCHEME = LevelScheme.rb87_d2()
DRV = DriveParams()
WL = 780.0
G0_SQUARED = 3.1 ** 2
UNIFORM = np.full(5, 0.2)


def _curve(grid, values) -> SpectrumCurve:
    return SpectrumCurve.from_arrays(np.asarray(grid), np.asarray(values))


def test_default_grid():
    assert default_grid(0.0, 7, 3.0).tolist() == [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    assert default_grid(-4.0).size == 41
    with pytest.raises(PreconditionError):
        default_grid(0.0, 6)


def test_fit_recovers_exact_lorentzian():
    grid = default_grid(-0.3, 41, 3.0)
    fit = lorentzian_fit(_curve(grid, lorentzian(grid, 2.0, -0.3, 0.55)))
    assert fit.amplitude == pytest.approx(2.0, abs=1e-8)
    assert fit.center == pytest.approx(-0.3, abs=1e-8)
    assert fit.hwhm == pytest.approx(0.55, abs=1e-8)
    assert fit.residual < 1e-8
    assert fit.iterations >= 1


def test_fit_tolerates_noise():
    grid = default_grid(0.0, 41, 3.0)
    rng = np.random.default_rng(17)
    values = lorentzian(grid, 2.0, -0.3, 0.55) * (1.0 + 0.01 * rng.standard_normal(grid.size))
    fit = lorentzian_fit(_curve(grid, values))
    assert fit.amplitude == pytest.approx(2.0, rel=0.05)
    assert abs(fit.center + 0.3) < 0.05 * 0.55
    assert fit.hwhm == pytest.approx(0.55, rel=0.05)


def test_fit_rejects_curves_without_interior_peak():
    grid = default_grid(0.0, 9, 2.0)
    with pytest.raises(FitPreconditionError) as info:
        lorentzian_fit(_curve(grid, np.exp(grid)))
    assert info.value.diagnostics['peak_index'] == 8
    with pytest.raises(FitPreconditionError):
        lorentzian_fit(_curve(grid, np.zeros(9)))


def test_fit_reports_non_convergence():
    grid = default_grid(0.0, 41, 3.0)
    with pytest.raises(FitError) as info:
        lorentzian_fit(_curve(grid, lorentzian(grid, 1.0, 0.2, 0.5)), max_iterations=1)
    assert 'hwhm' in info.value.diagnostics


def test_empty_cavity_spectrum():
    cav = CavityParams()
    curve = empty_cavity_spectrum(default_grid(), cav)
    assert curve.n_mean.max() == pytest.approx(1.0)
    fit = lorentzian_fit(curve)
    assert fit.center == pytest.approx(0.0, abs=1e-8)
    assert fit.hwhm == pytest.approx(cav.kappa, abs=1e-8)


def test_single_atom_dressed_resonance():
    cav = CavityParams(delta_ca=-38.0)
    geom = ArrayGeometry(n_atoms=1, sigma_nm=0.0)
    curve = sweep_spectrum(default_grid(-0.25), geom, cav, DRV, SCHEME, McConfig(n_samples=100), 'two_level')
    fit = lorentzian_fit(curve)
    assert fit.center == pytest.approx(-0.252895, abs=1e-5)
    assert fit.hwhm == pytest.approx(0.549966, abs=1e-5)


def test_shift_scales_with_atom_number_and_sign_of_detuning():
    geom = ArrayGeometry(n_atoms=8, spacing_nm=5 * WL, sigma_nm=0.0)
    mc = McConfig(n_samples=100)
    expected = 8 * G0_SQUARED / 19.0
    for delta_ca, sign in ((-19.0, -1.0), (19.0, 1.0)):
        curve = sweep_spectrum(default_grid(sign * expected), geom, CavityParams(delta_ca=delta_ca),
                               DRV, SCHEME, mc, 'two_level')
        fit = lorentzian_fit(curve)
        assert fit.center == pytest.approx(sign * expected, rel=0.02)


def test_resonance_grows_linearly_with_atom_number():
    cav = CavityParams(delta_ca=-38.0)
    counts = (1, 2, 4, 8)
    shift = G0_SQUARED / cav.delta_ca
    broadening = SCHEME.gamma_mhz * G0_SQUARED / cav.delta_ca ** 2
    for n_atoms in counts:
        geom = ArrayGeometry(n_atoms=n_atoms, spacing_nm=5 * WL, sigma_nm=0.0)
        fit = lorentzian_fit(sweep_spectrum(default_grid(n_atoms * shift), geom, cav, DRV, SCHEME,
                                            McConfig(n_samples=100), 'two_level'))
        assert fit.center == pytest.approx(n_atoms * shift, abs=1e-5)
        assert fit.hwhm == pytest.approx(cav.kappa + n_atoms * broadening, abs=1e-5)

    centers, widths = [], []
    mc = McConfig(n_samples=2000)
    for n_atoms in counts:
        geom = ArrayGeometry(n_atoms=n_atoms, spacing_nm=5 * WL, sigma_nm=100.0)
        expected = predicted_dressed_center(geom, cav, SCHEME, UNIFORM)
        fit = lorentzian_fit(sweep_spectrum(default_grid(expected), geom, cav, DRV, SCHEME, mc))
        centers.append(fit.center)
        widths.append(fit.hwhm)
    assert np.all(np.diff(centers) < 0)
    assert np.all(np.diff(widths) > 0)
    slope, intercept = np.polyfit(counts, centers, 1)
    residual = np.abs(np.asarray(centers) - (slope * np.asarray(counts) + intercept)).max()
    assert residual < 0.05 * (max(centers) - min(centers))


def test_shift_independent_of_interference():
    cav = CavityParams(delta_ca=-38.0)
    mc = McConfig(n_samples=100)
    grid = default_grid(-0.76)
    centers = []
    for spacing in (5 * WL, 5.5 * WL):
        geom = ArrayGeometry(n_atoms=3, spacing_nm=spacing, sigma_nm=0.0)
        centers.append(lorentzian_fit(sweep_spectrum(grid, geom, cav, DRV, SCHEME, mc, 'two_level')).center)
    assert centers[0] == pytest.approx(centers[1], abs=1e-6)
    assert centers[0] == pytest.approx(3 * G0_SQUARED / -38.0, abs=1e-5)


def test_node_layout_shift_is_reduced():
    cav = CavityParams(delta_ca=-38.0)
    mc = McConfig(n_samples=2000)
    grid = default_grid(-0.5)
    antinode = ArrayGeometry(n_atoms=3, spacing_nm=5 * WL, sigma_nm=100.0)
    node = antinode.model_copy(update={'offset_nm': WL / 4})
    at_antinode = lorentzian_fit(sweep_spectrum(grid, antinode, cav, DRV, SCHEME, mc, 'two_level'))
    at_node = lorentzian_fit(sweep_spectrum(grid, node, cav, DRV, SCHEME, mc, 'two_level'))
    assert at_antinode.center < at_node.center < 0.0


def test_sweep_validates_grid():
    geom = ArrayGeometry(sigma_nm=0.0)
    mc = McConfig(n_samples=100)
    with pytest.raises(PreconditionError):
        sweep_spectrum(np.linspace(-1, 1, 6), geom, CavityParams(), DRV, SCHEME, mc)
    with pytest.raises(PreconditionError):
        sweep_spectrum([0, 1, 2, 2, 3, 4, 5], geom, CavityParams(), DRV, SCHEME, mc)


def test_sweep_independent_of_thread_count():
    geom = ArrayGeometry(n_atoms=2, spacing_nm=5 * WL)
    cav = CavityParams(delta_ca=-38.0)
    grid = default_grid(-0.5, 9)
    one = sweep_spectrum(grid, geom, cav, DRV, SCHEME, McConfig(n_samples=5000, threads=1))
    many = sweep_spectrum(grid, geom, cav, DRV, SCHEME, McConfig(n_samples=5000, threads=6))
    assert one == many


def test_half_period_cosine_fit():
    offsets = np.linspace(0.0, WL / 2, 11)
    phase = 4 * math.pi * offsets / WL
    fit = half_period_cosine_fit(offsets, 2.0 + 0.5 * np.cos(phase) - 0.2 * np.sin(phase), WL)
    assert fit.mean == pytest.approx(2.0)
    assert fit.cos_coefficient == pytest.approx(0.5)
    assert fit.sin_coefficient == pytest.approx(-0.2)
    assert fit.amplitude == pytest.approx(math.hypot(0.5, 0.2))
    assert fit.residual < 1e-12
    with pytest.raises(FitPreconditionError):
        half_period_cosine_fit([0.0, 1.0], [1.0, 2.0], WL)


def main():
    print("=" * 60)
    print("🧪 Spectrum tests")
    print("=" * 60)
    tests = [
        test_default_grid, test_fit_recovers_exact_lorentzian, test_fit_tolerates_noise,
        test_fit_rejects_curves_without_interior_peak, test_fit_reports_non_convergence,
        test_empty_cavity_spectrum, test_single_atom_dressed_resonance,
        test_shift_scales_with_atom_number_and_sign_of_detuning, test_resonance_grows_linearly_with_atom_number,
        test_shift_independent_of_interference,
        test_node_layout_shift_is_reduced, test_sweep_validates_grid, test_sweep_independent_of_thread_count,
        test_half_period_cosine_fit,
    ]
    failed = 0
    for test in tests:
        try:
            test()
            print(f"✅ {test.__name__}")
        except Exception as e:
            failed += 1
            print(f"❌ {test.__name__}: {e!r}")
    print("=" * 60)
    print("✅ All tests passed!" if not failed else f"❌ {failed} test(s) failed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
