"""
Tests for the z/y decomposition of the cavity output and polarizer transmission
Run: python test_polarization.py  (or pytest)
"""
import math
import sys

import pytest

from errors import PreconditionError
from models import ArrayGeometry, CavityParams, DriveParams, LevelScheme, McConfig
from polarization import polarization_decompose, transmission_curve

SCHEME = LevelScheme.rb87_d2()
DRV = DriveParams()
WL = 780.0
CONSTRUCTIVE = 5.0 * WL
DESTRUCTIVE = 5.5 * WL


def test_transmission_identities():
    points = transmission_curve(3.0, 1.0, [0.0, 45.0, 90.0, 180.0], y_fraction_stderr=0.02)
    assert [p.theta_deg for p in points] == [0.0, 45.0, 90.0, 180.0]
    assert [p.transmission for p in points] == pytest.approx([0.75, 0.5, 0.25, 0.75])
    assert [p.stderr for p in points] == pytest.approx([0.02, 0.0, 0.02, 0.02], abs=1e-15)

    pure_z = transmission_curve(1.0, 0.0, [0.0, 30.0, 60.0, 90.0])
    assert [p.transmission for p in pure_z] == pytest.approx([math.cos(math.radians(t)) ** 2 for t in (0, 30, 60, 90)])

    with pytest.raises(PreconditionError):
        transmission_curve(0.0, 0.0)


def test_two_level_mode_has_no_raman():
    geom = ArrayGeometry(n_atoms=1)
    result = polarization_decompose(geom, CavityParams(delta_ca=-38.0), DRV, SCHEME,
                                    McConfig(n_samples=1000), mode='two_level')
    assert result.i_y == 0.0
    assert result.i_z > 0.0
    for point in result.transmission_curve:
        assert point.transmission == pytest.approx(math.cos(math.radians(point.theta_deg)) ** 2, abs=1e-12)


def test_magic_detuning_output_is_z_polarized():
    cav = CavityParams(delta_ca=-507.0)
    mc = McConfig(n_samples=5000)
    for n_atoms, spacing in ((1, CONSTRUCTIVE), (8, CONSTRUCTIVE), (8, DESTRUCTIVE)):
        geom = ArrayGeometry(n_atoms=n_atoms, spacing_nm=spacing)
        result = polarization_decompose(geom, cav, DRV, SCHEME, mc)
        assert result.y_fraction < 0.05
        assert len(result.transmission_curve) == 13


def test_interference_reorders_polarization_at_small_detuning():
    cav = CavityParams(delta_ca=-38.0)
    mc = McConfig(n_samples=5000)
    single = polarization_decompose(ArrayGeometry(n_atoms=1), cav, DRV, SCHEME, mc)
    constructive = polarization_decompose(ArrayGeometry(n_atoms=8, spacing_nm=CONSTRUCTIVE), cav, DRV, SCHEME, mc)
    destructive = polarization_decompose(ArrayGeometry(n_atoms=8, spacing_nm=DESTRUCTIVE), cav, DRV, SCHEME, mc)

    assert single.y_fraction > 0.05
    assert destructive.y_fraction > constructive.y_fraction > 0.0
    assert 1.0 - constructive.y_fraction > 1.0 - single.y_fraction
    assert destructive.y_fraction > single.y_fraction


def test_subradiant_array_emits_only_raman_light():
    geom = ArrayGeometry(n_atoms=4, spacing_nm=DESTRUCTIVE, sigma_nm=0.0)
    result = polarization_decompose(geom, CavityParams(delta_ca=-38.0), DRV, SCHEME, McConfig(n_samples=100, mF=1))
    assert result.i_y > 0.0
    assert result.i_z < 1e-12 * result.i_y
    assert result.y_fraction == pytest.approx(1.0)


def test_rayleigh_is_collective_and_raman_is_not():
    cav = CavityParams(delta_ca=-38.0, atom_modification=False)
    mc = McConfig(n_samples=100, mF=1)
    one = polarization_decompose(ArrayGeometry(n_atoms=1, sigma_nm=0.0), cav, DRV, SCHEME, mc)
    for n_atoms in (2, 5):
        many = polarization_decompose(
            ArrayGeometry(n_atoms=n_atoms, spacing_nm=CONSTRUCTIVE, sigma_nm=0.0), cav, DRV, SCHEME, mc
        )
        assert many.i_z == pytest.approx(n_atoms ** 2 * one.i_z)
        assert many.i_y == pytest.approx(n_atoms * one.i_y)


def main():
    print("=" * 60)
    print("🧪 Polarization tests")
    print("=" * 60)
    tests = [
        test_transmission_identities, test_two_level_mode_has_no_raman,
        test_magic_detuning_output_is_z_polarized, test_interference_reorders_polarization_at_small_detuning,
        test_subradiant_array_emits_only_raman_light, test_rayleigh_is_collective_and_raman_is_not,
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
