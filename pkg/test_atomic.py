"""
Tests for angular-momentum algebra, channel amplitudes and the magic-detuning solver
Run: python test_atomic.py  (or pytest)

sympy.physics.wigner serves as the independent reference for 3-j and 6-j values.
"""
import itertools
import math
import sys

import numpy as np
import pytest
from sympy import Rational
from sympy.physics.wigner import wigner_3j, wigner_6j

from atomic import (
    absorption_weights, channel_amplitudes, channel_table, dipole_weight, dispersion_weights,
    find_magic_detuning, golden_section_search, raman_rayleigh_ratio, rayleigh_spread, scheme_for_mode,
    wigner3j, wigner6j,
)
from errors import NoSolutionError, PreconditionError, SingularityError
from models import ExcitedManifold, LevelScheme

HALVES = [0, 1, 2, 3, 4]  # twice j


def _r(twice: int) -> Rational:
    return Rational(twice, 2)


def test_wigner3j_known_values():
    assert wigner3j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / math.sqrt(3))
    assert wigner3j(2, 1, 3, 2, 1, -3) == pytest.approx(1 / math.sqrt(7))
    assert wigner3j(0.5, 0.5, 1, 0.5, -0.5, 0) == pytest.approx(1 / math.sqrt(6))


def test_wigner3j_selection_rules():
    assert wigner3j(1, 1, 1, 1, 1, 0) == 0.0  # m sum
    assert wigner3j(1, 1, 3, 0, 0, 0) == 0.0  # triangle
    assert wigner3j(1, 1, 1, 0, 0, 0) == 0.0  # odd j sum with all m = 0
    assert wigner3j(1, 1, 1, 2, -1, -1) == 0.0  # |m| > j
    with pytest.raises(ValueError):
        wigner3j(-1, 1, 1, 0, 0, 0)
    with pytest.raises(ValueError):
        wigner3j(0.3, 1, 1, 0, 0, 0)


def test_wigner3j_matches_sympy():
    checked = 0
    for tj1, tj2 in itertools.product(HALVES, HALVES):
        for tj3 in range(abs(tj1 - tj2), tj1 + tj2 + 1, 2):
            for tm1 in range(-tj1, tj1 + 1, 2):
                for tm2 in range(-tj2, tj2 + 1, 2):
                    tm3 = -tm1 - tm2
                    if abs(tm3) > tj3:
                        continue
                    expected = float(wigner_3j(_r(tj1), _r(tj2), _r(tj3), _r(tm1), _r(tm2), _r(tm3)))
                    got = wigner3j(tj1 / 2, tj2 / 2, tj3 / 2, tm1 / 2, tm2 / 2, tm3 / 2)
                    assert got == pytest.approx(expected, abs=1e-12), (tj1, tj2, tj3, tm1, tm2)
                    checked += 1
    assert checked > 100


def test_wigner3j_orthogonality():
    j1, j2 = 1.0, 1.5
    ms = [(m1, m2) for m1 in (-1, 0, 1) for m2 in (-1.5, -0.5, 0.5, 1.5)]
    for (m1, m2), (n1, n2) in itertools.product(ms, ms):
        if m1 + m2 != n1 + n2:
            continue
        total = 0.0
        for j3 in (0.5, 1.5, 2.5):
            m3 = -(m1 + m2)
            if abs(m3) > j3:
                continue
            total += (2 * j3 + 1) * wigner3j(j1, j2, j3, m1, m2, m3) * wigner3j(j1, j2, j3, n1, n2, m3)
        assert total == pytest.approx(1.0 if (m1, m2) == (n1, n2) else 0.0, abs=1e-12)


def test_wigner6j_known_values():
    assert wigner6j(1, 1, 1, 1, 1, 1) == pytest.approx(1 / 6)
    assert wigner6j(1, 1, 3, 1, 1, 1) == 0.0  # triangle
    with pytest.raises(ValueError):
        wigner6j(1, 1, 1, 1, 1, -1)


def _integer_triads(*tj) -> bool:
    a, b, c, d, e, f = tj
    return all((x + y + z) % 2 == 0 for x, y, z in ((a, b, c), (a, e, f), (d, b, f), (d, e, c)))


def test_wigner6j_matches_sympy():
    checked = 0
    for tj in itertools.product([0, 1, 2, 3], repeat=6):
        if not _integer_triads(*tj):
            continue
        expected = float(wigner_6j(*(_r(t) for t in tj)))
        got = wigner6j(*(t / 2 for t in tj))
        assert got == pytest.approx(expected, abs=1e-12), tj
        checked += 1
    assert checked > 100


def test_wigner6j_orthogonality():
    for f, g in itertools.product((0, 1, 2), repeat=2):
        total = sum(
            (2 * x + 1) * (2 * f + 1) * wigner6j(1, 1, x, 1, 1, f) * wigner6j(1, 1, x, 1, 1, g)
            for x in (0, 1, 2)
        )
        assert total == pytest.approx(1.0 if f == g else 0.0, abs=1e-12)


def test_dipole_weights():
    assert abs(dipole_weight(2, 2, 3, 1)) == pytest.approx(1.0)
    assert dipole_weight(2, 0, 3, 0) ** 2 == pytest.approx(3 / 5)
    assert dipole_weight(2, 1, 2, 0) ** 2 == pytest.approx(1 / 12)
    assert dipole_weight(2, 0, 1, 0) ** 2 == pytest.approx(4 / 60)
    assert dipole_weight(2, 0, 2, 0) == pytest.approx(0.0, abs=1e-14)
    assert dipole_weight(2, 2, 1, 0) == 0.0
    assert dipole_weight(2, 2, 1, 1) == 0.0
    with pytest.raises(ValueError):
        dipole_weight(2, 0, 3, 2)


def test_dipole_sum_rules():
    for m in range(-2, 3):
        pi_total = sum(dipole_weight(2, m, fp, 0) ** 2 for fp in (1, 2, 3))
        total = sum(dipole_weight(2, m, fp, q) ** 2 for fp in (1, 2, 3) for q in (-1, 0, 1))
        assert pi_total == pytest.approx(2 / 3)
        assert total == pytest.approx(2.0)


def test_channel_amplitudes_structure():
    scheme = LevelScheme.rb87_d2()
    amplitudes = channel_amplitudes(scheme, 0, -38.0)
    assert [a.delta_m for a in amplitudes] == [-1, 0, 1]
    assert [a.emit_polarization for a in amplitudes] == ['y', 'z', 'y']
    assert all(a.m_initial == 0 for a in amplitudes)
    # No m=3 final state
    assert channel_amplitudes(scheme, 2, -38.0)[2].value == 0
    with pytest.raises(PreconditionError):
        channel_amplitudes(scheme, 3, -38.0)


def test_two_level_limit():
    two_level = LevelScheme.two_level_scheme()
    table = channel_table(two_level, -38.0)
    assert table[:, 1] == pytest.approx([-1 / 38.0] * 5)
    assert np.all(table[:, [0, 2]] == 0.0)
    assert dispersion_weights(two_level, -38.0) == pytest.approx([-1 / 38.0] * 5)
    assert absorption_weights(two_level, -38.0) == pytest.approx([1 / 38.0 ** 2] * 5)

    forced = scheme_for_mode(LevelScheme.rb87_d2(), 'two_level')
    assert forced.two_level
    assert forced.gamma_mhz == LevelScheme.rb87_d2().gamma_mhz
    with pytest.raises(PreconditionError):
        scheme_for_mode(LevelScheme.rb87_d2(), 'three_level')


def test_large_detuning_matches_two_level():
    delta = -1e6
    rayleigh = channel_table(LevelScheme.rb87_d2(), delta)[:, 1] * delta
    assert rayleigh == pytest.approx([1.0] * 5, abs=1e-3)
    absorption = absorption_weights(LevelScheme.rb87_d2(), delta) * delta ** 2
    assert absorption == pytest.approx([1.0] * 5, abs=1e-3)


def test_pole_raises_singularity():
    with pytest.raises(SingularityError) as info:
        channel_table(LevelScheme.rb87_d2(), -266.65)
    assert info.value.pole == pytest.approx(-266.65)


def test_spread_and_raman_ratio():
    scheme = LevelScheme.rb87_d2()
    assert rayleigh_spread(scheme, -507.0) < 0.05
    assert rayleigh_spread(scheme, -38.0) > 0.05
    assert raman_rayleigh_ratio(scheme, -38.0) > 10 * raman_rayleigh_ratio(scheme, -507.0)
    assert rayleigh_spread(LevelScheme.two_level_scheme(), -38.0) == 0.0


def test_golden_section_search():
    calls = []

    def bowl(x: float) -> float:
        calls.append(x)
        return (x - 1.3) ** 2 + 0.5

    x, value = golden_section_search(bowl, 3.0, 0.0, tol=1e-6)
    assert x == pytest.approx(1.3, abs=1e-6)
    assert value == pytest.approx(0.5, abs=1e-11)
    # One new evaluation per step plus the two initial points and the final one
    assert len(calls) == 3 + math.ceil(math.log(1e-6 / 3.0) / math.log((math.sqrt(5) - 1) / 2))

    # Minimum on the bracket edge still converges onto the edge
    x, _ = golden_section_search(lambda v: v, -2.0, 5.0, tol=1e-4)
    assert x == pytest.approx(-2.0, abs=1e-4)

    x, value = golden_section_search(abs, -0.001, 0.001, tol=0.01)
    assert x == 0.0
    assert value == 0.0


def test_magic_detuning():
    scheme = LevelScheme.rb87_d2()
    magic = find_magic_detuning(scheme)
    assert abs(magic.delta_ca + 507.0) <= 20.0
    assert magic.spread < 0.05
    assert magic.spread == rayleigh_spread(scheme, magic.delta_ca)
    assert raman_rayleigh_ratio(scheme, -38.0) >= 10 * magic.raman_rayleigh_ratio
    assert magic.search_interval == (-1000.0, -450.0)


def test_magic_detuning_failures():
    degenerate = LevelScheme(manifolds=[ExcitedManifold(Fprime=f, offset_MHz=0.0) for f in (3, 2, 1)])
    with pytest.raises(NoSolutionError) as info:
        find_magic_detuning(degenerate)
    assert info.value.reason == 'degenerate'

    with pytest.raises(NoSolutionError) as info:
        find_magic_detuning(LevelScheme.two_level_scheme())
    assert info.value.reason == 'degenerate'

    with pytest.raises(NoSolutionError) as info:
        find_magic_detuning(LevelScheme.rb87_d2(), (-480.0, -440.0))
    assert info.value.reason == 'boundary'

    with pytest.raises(PreconditionError):
        find_magic_detuning(LevelScheme.rb87_d2(), (-450.0, -300.0))


def main():
    print("=" * 60)
    print("🧪 Atomic structure tests")
    print("=" * 60)
    tests = [
        test_wigner3j_known_values, test_wigner3j_selection_rules, test_wigner3j_matches_sympy,
        test_wigner3j_orthogonality, test_wigner6j_known_values, test_wigner6j_matches_sympy,
        test_wigner6j_orthogonality, test_dipole_weights, test_dipole_sum_rules,
        test_channel_amplitudes_structure, test_two_level_limit, test_large_detuning_matches_two_level,
        test_pole_raises_singularity, test_spread_and_raman_ratio, test_golden_section_search,
        test_magic_detuning, test_magic_detuning_failures,
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
