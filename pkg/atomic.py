"""
Hyperfine/Zeeman structure of the scatterer and its two-photon scattering channels

Angular-momentum coefficients are evaluated exactly with the Racah sums (rational
arithmetic on integer factorials); only the final square root is taken in floating
point. Channel amplitudes are in MHz⁻¹ and normalized to the isotropic line strength,
so the Rayleigh (Δm=0) amplitude times Δca tends to 1 at large detuning.
"""
import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Callable, List, Tuple

import numpy as np
from scipy.special import factorial

import config
from errors import NoSolutionError, PreconditionError, SingularityError
from models import ChannelAmplitude, LevelScheme, MagicDetuning

logger = logging.getLogger(__name__)

DELTA_M_CHANNELS = (-1, 0, 1)
# y = (σ₋ - σ₊)/√2: Δm=+1 is σ₋ emission, Δm=-1 is σ₊ emission
_Y_PROJECTION = {-1: -1.0 / math.sqrt(2.0), 0: 1.0, 1: 1.0 / math.sqrt(2.0)}

GOLDEN_RATIO_INVERSE = (math.sqrt(5.0) - 1.0) / 2.0


def _twice(value: float, name: str) -> int:
    """Return 2*value as an int, rejecting anything that is not a half-integer"""
    doubled = 2 * float(value)
    rounded = round(doubled)
    if abs(doubled - rounded) > 1e-9:
        raise ValueError(f"{name}={value} is not an integer or half-integer")
    return int(rounded)


def _fact(n: int) -> int:
    return int(factorial(n, exact=True))


def _sign(exponent: int) -> int:
    return -1 if exponent % 2 else 1


def _signed_sqrt(total: Fraction, square_prefactor: Fraction) -> float:
    """sign(total)·sqrt(total²·prefactor) with a single rounding step"""
    if total == 0:
        return 0.0
    magnitude = math.sqrt(total * total * square_prefactor)
    return magnitude if total > 0 else -magnitude


@lru_cache(maxsize=65536)
def _wigner3j_twice(tj1: int, tj2: int, tj3: int, tm1: int, tm2: int, tm3: int) -> float:
    if tm1 + tm2 + tm3 != 0:
        return 0.0
    for tj, tm in ((tj1, tm1), (tj2, tm2), (tj3, tm3)):
        if abs(tm) > tj or (tj + tm) % 2:
            return 0.0
    if tj3 > tj1 + tj2 or tj3 < abs(tj1 - tj2) or (tj1 + tj2 + tj3) % 2:
        return 0.0

    t1 = (tj2 - tm1 - tj3) // 2
    t2 = (tj1 + tm2 - tj3) // 2
    t3 = (tj1 + tj2 - tj3) // 2
    t4 = (tj1 - tm1) // 2
    t5 = (tj2 + tm2) // 2

    total = Fraction(0)
    for t in range(max(0, t1, t2), min(t3, t4, t5) + 1):
        denominator = (
            _fact(t) * _fact(t - t1) * _fact(t - t2)
            * _fact(t3 - t) * _fact(t4 - t) * _fact(t5 - t)
        )
        total += Fraction(_sign(t), denominator)

    square_prefactor = Fraction(
        _fact((tj1 + tj2 - tj3) // 2) * _fact((tj1 - tj2 + tj3) // 2) * _fact((-tj1 + tj2 + tj3) // 2),
        _fact((tj1 + tj2 + tj3) // 2 + 1),
    ) * (
        _fact((tj1 + tm1) // 2) * _fact((tj1 - tm1) // 2)
        * _fact((tj2 + tm2) // 2) * _fact((tj2 - tm2) // 2)
        * _fact((tj3 + tm3) // 2) * _fact((tj3 - tm3) // 2)
    )
    phase = _sign((tj1 - tj2 - tm3) // 2)
    return phase * _signed_sqrt(total, square_prefactor)


def wigner3j(j1: float, j2: float, j3: float, m1: float, m2: float, m3: float) -> float:
    """
    Wigner 3-j symbol (j1 j2 j3; m1 m2 m3) from the Racah formula

    Violated triangle, projection-sum or |m| ≤ j conditions give 0.

    Raises:
        ValueError: non-half-integer arguments or negative j
    """
    tj = [_twice(j, name) for j, name in ((j1, 'j1'), (j2, 'j2'), (j3, 'j3'))]
    tm = [_twice(m, name) for m, name in ((m1, 'm1'), (m2, 'm2'), (m3, 'm3'))]
    if any(v < 0 for v in tj):
        raise ValueError(f"angular momenta must be non-negative: {(j1, j2, j3)}")
    return _wigner3j_twice(*tj, *tm)


def _triangle_square(ta: int, tb: int, tc: int) -> Fraction:
    return Fraction(
        _fact((ta + tb - tc) // 2) * _fact((ta - tb + tc) // 2) * _fact((-ta + tb + tc) // 2),
        _fact((ta + tb + tc) // 2 + 1),
    )


def _is_triad(ta: int, tb: int, tc: int) -> bool:
    return (ta + tb + tc) % 2 == 0 and abs(ta - tb) <= tc <= ta + tb


@lru_cache(maxsize=65536)
def _wigner6j_twice(tj1: int, tj2: int, tj3: int, tj4: int, tj5: int, tj6: int) -> float:
    triads = ((tj1, tj2, tj3), (tj1, tj5, tj6), (tj4, tj2, tj6), (tj4, tj5, tj3))
    if not all(_is_triad(*triad) for triad in triads):
        return 0.0

    a1, a2, a3, a4 = (sum(triad) // 2 for triad in triads)
    b1 = (tj1 + tj2 + tj4 + tj5) // 2
    b2 = (tj2 + tj3 + tj5 + tj6) // 2
    b3 = (tj3 + tj1 + tj6 + tj4) // 2

    total = Fraction(0)
    for t in range(max(a1, a2, a3, a4), min(b1, b2, b3) + 1):
        denominator = (
            _fact(t - a1) * _fact(t - a2) * _fact(t - a3) * _fact(t - a4)
            * _fact(b1 - t) * _fact(b2 - t) * _fact(b3 - t)
        )
        total += Fraction(_sign(t) * _fact(t + 1), denominator)

    square_prefactor = Fraction(1)
    for triad in triads:
        square_prefactor *= _triangle_square(*triad)
    return _signed_sqrt(total, square_prefactor)


def wigner6j(j1: float, j2: float, j3: float, j4: float, j5: float, j6: float) -> float:
    """
    Wigner 6-j symbol {j1 j2 j3; j4 j5 j6} from the Racah formula

    Any triad violating the triangle rule gives 0.

    Raises:
        ValueError: non-half-integer arguments or negative j
    """
    names = ('j1', 'j2', 'j3', 'j4', 'j5', 'j6')
    tj = [_twice(j, name) for j, name in zip((j1, j2, j3, j4, j5, j6), names)]
    if any(v < 0 for v in tj):
        raise ValueError(f"angular momenta must be non-negative: {(j1, j2, j3, j4, j5, j6)}")
    return _wigner6j_twice(*tj)


def _raw_dipole(F: int, m: int, f_prime: int, q: int,
                nuclear_spin: float, ground_j: float, excited_j: float) -> float:
    """<F' m+q| d_q |F m> in units of the fine-structure reduced element (Condon-Shortley)"""
    m_excited = m + q
    if abs(m) > F or abs(m_excited) > f_prime:
        return 0.0
    reduced = (
        _sign(_twice(excited_j + nuclear_spin + F + 1, 'phase') // 2)
        * math.sqrt((2 * F + 1) * (2 * f_prime + 1))
        * wigner6j(excited_j, f_prime, nuclear_spin, F, ground_j, 1)
    )
    projection = _sign(f_prime - m_excited) * wigner3j(f_prime, 1, F, -m_excited, q, m)
    return reduced * projection


@lru_cache(maxsize=64)
def _cycling_norm(nuclear_spin: float, ground_j: float, excited_j: float) -> float:
    f_max = int(round(nuclear_spin + ground_j))
    f_prime_max = int(round(nuclear_spin + excited_j))
    return abs(_raw_dipole(f_max, f_max, f_prime_max, 1, nuclear_spin, ground_j, excited_j))


def dipole_weight(F: int, m: int, f_prime: int, q: int,
                  nuclear_spin: float = config.NUCLEAR_SPIN,
                  ground_j: float = config.GROUND_J,
                  excited_j: float = config.EXCITED_J) -> float:
    """
    Relative dipole matrix element for F,m → F',m+q with polarization q

    Normalized so the cycling transition F=I+J, m=F → F'=I+J', q=+1 has magnitude 1.
    Selection-rule violations return 0.

    Args:
        F: Ground hyperfine quantum number
        m: Ground Zeeman index
        f_prime: Excited hyperfine quantum number
        q: Spherical polarization component (-1, 0, +1)
    """
    if q not in (-1, 0, 1):
        raise ValueError(f"q must be -1, 0 or +1, got {q}")
    raw = _raw_dipole(F, m, f_prime, q, nuclear_spin, ground_j, excited_j)
    return raw / _cycling_norm(nuclear_spin, ground_j, excited_j)


@lru_cache(maxsize=256)
def _channel_numerators(scheme: LevelScheme) -> Tuple[np.ndarray, np.ndarray]:
    """
    Per-manifold numerators of the channel sums

    Returns:
        (channels, absorption): channels has shape (n_manifolds, 2F+1, 3) holding
        d_emit·d_abs for Δm = -1, 0, +1 (y-projected); absorption has shape
        (n_manifolds, 2F+1) holding d_abs². Both are divided by the isotropic line strength.
    """
    F = scheme.ground_f
    n_m = 2 * F + 1
    n_manifolds = len(scheme.manifolds)
    channels = np.zeros((n_manifolds, n_m, 3))
    absorption = np.zeros((n_manifolds, n_m))

    if scheme.two_level:
        channels[0, :, 1] = 1.0
        absorption[0, :] = 1.0
        return channels, absorption

    def weight(m: int, f_prime: int, q: int) -> float:
        return dipole_weight(F, m, f_prime, q, scheme.nuclear_spin, scheme.ground_j, scheme.excited_j)

    # π line strength summed over F' is the same for every m (sum rule); take m=0
    line_strength = sum(weight(0, mf.f_prime, 0) ** 2 for mf in scheme.manifolds)
    for k, manifold in enumerate(scheme.manifolds):
        for i, m in enumerate(scheme.m_values):
            d_abs = weight(m, manifold.f_prime, 0)
            absorption[k, i] = d_abs ** 2 / line_strength
            for c, delta_m in enumerate(DELTA_M_CHANNELS):
                m_final = m + delta_m
                if abs(m_final) > F:
                    continue
                d_emit = weight(m_final, manifold.f_prime, -delta_m)
                channels[k, i, c] = _Y_PROJECTION[delta_m] * d_emit * d_abs / line_strength
    return channels, absorption


def scheme_for_mode(scheme: LevelScheme, mode: str) -> LevelScheme:
    """Scheme used for a scattering mode; two-level mode keeps γ and the m range"""
    if mode == 'multilevel' or scheme.two_level:
        return scheme
    if mode != 'two_level':
        raise PreconditionError(f"unknown scattering mode {mode!r}")
    return scheme.model_copy(update={
        'manifolds': (scheme.manifolds[0].model_copy(update={'offset_mhz': 0.0}),),
        'two_level': True,
    })


def _inverse_detunings(scheme: LevelScheme, delta_ca: float) -> np.ndarray:
    offsets = np.asarray(scheme.offsets)
    gaps = delta_ca - offsets
    near = np.abs(gaps) < config.POLE_TOLERANCE_MHZ
    if near.any():
        raise SingularityError(delta_ca, float(offsets[np.argmax(near)]))
    return 1.0 / gaps


def channel_table(scheme: LevelScheme, delta_ca: float) -> np.ndarray:
    """Amplitudes (MHz⁻¹) for every m (rows -F..F) and channel (columns Δm = -1, 0, +1)"""
    channels, _ = _channel_numerators(scheme)
    return np.einsum('kmc,k->mc', channels, _inverse_detunings(scheme, delta_ca))


def dispersion_weights(scheme: LevelScheme, delta_ca: float) -> np.ndarray:
    """Per-m dispersive weight; reduces to 1/Δca for a two-level atom"""
    return channel_table(scheme, delta_ca)[:, 1]


def absorption_weights(scheme: LevelScheme, delta_ca: float) -> np.ndarray:
    """Per-m absorptive weight (multiplies γ g²); reduces to 1/Δca² for a two-level atom"""
    _, absorption = _channel_numerators(scheme)
    return absorption.T @ (_inverse_detunings(scheme, delta_ca) ** 2)


def channel_amplitudes(scheme: LevelScheme, m: int, delta_ca: float) -> List[ChannelAmplitude]:
    """
    Two-photon amplitudes for a z-polarized drive from ground state m

    Returns exactly three channels, Δm = -1, 0, +1. The Δm=0 channel emits into the
    z cavity mode (Rayleigh); Δm=±1 are the σ components of the y mode (Raman).

    Raises:
        SingularityError: Δca within tolerance of an excited-state offset
    """
    if abs(m) > scheme.ground_f:
        raise PreconditionError(f"m={m} outside -{scheme.ground_f}..{scheme.ground_f}")
    row = channel_table(scheme, delta_ca)[m + scheme.ground_f]
    return [
        ChannelAmplitude(
            value=complex(row[c]),
            delta_m=delta_m,
            emit_polarization='z' if delta_m == 0 else 'y',
            m_initial=m,
        )
        for c, delta_m in enumerate(DELTA_M_CHANNELS)
    ]


def rayleigh_spread(scheme: LevelScheme, delta_ca: float) -> float:
    """(max - min) over m of the Δm=0 amplitude divided by its mean magnitude"""
    rayleigh = channel_table(scheme, delta_ca)[:, 1]
    mean_magnitude = np.abs(rayleigh).mean()
    if mean_magnitude == 0.0:
        return 0.0
    return float((rayleigh.max() - rayleigh.min()) / mean_magnitude)


def raman_rayleigh_ratio(scheme: LevelScheme, delta_ca: float) -> float:
    """m-averaged Raman (y) intensity over m-averaged Rayleigh (z) intensity"""
    table = channel_table(scheme, delta_ca)
    raman = (table[:, 0] ** 2 + table[:, 2] ** 2).mean()
    rayleigh = (table[:, 1] ** 2).mean()
    return float(raman / rayleigh) if rayleigh > 0 else math.inf


def golden_section_search(f: Callable[[float], float], low: float, high: float,
                          tol: float = config.MAGIC_TOLERANCE_MHZ) -> Tuple[float, float]:
    """Minimizer of a unimodal f on [low, high] to within tol, and f there"""
    low, high = min(low, high), max(low, high)
    left = high - GOLDEN_RATIO_INVERSE * (high - low)
    right = low + GOLDEN_RATIO_INVERSE * (high - low)
    f_left, f_right = f(left), f(right)

    # Each step keeps one interior point and shrinks the bracket by 1/φ
    while high - low > tol:
        if f_left <= f_right:
            high, right, f_right = right, left, f_left
            left = high - GOLDEN_RATIO_INVERSE * (high - low)
            f_left = f(left)
        else:
            low, left, f_left = left, right, f_right
            right = low + GOLDEN_RATIO_INVERSE * (high - low)
            f_right = f(right)

    x = 0.5 * (low + high)
    return x, f(x)


def find_magic_detuning(scheme: LevelScheme,
                        search_interval: Tuple[float, float] = config.MAGIC_SEARCH_INTERVAL_MHZ,
                        step: float = config.MAGIC_SCAN_STEP_MHZ,
                        tol: float = config.MAGIC_TOLERANCE_MHZ) -> MagicDetuning:
    """
    Detuning where the Rayleigh amplitude is most nearly independent of m

    Scans the interval on a `step` grid, then refines the best interior grid point with
    a golden-section search down to `tol`.

    Raises:
        PreconditionError: interval contains an excited-state pole
        NoSolutionError: flat objective (reason "degenerate") or minimum on the
            interval boundary (reason "boundary")
    """
    low, high = sorted(search_interval)
    for offset in scheme.offsets:
        if low <= offset <= high:
            raise PreconditionError(f"search interval ({low}, {high}) contains the pole at {offset} MHz")

    count = int(round((high - low) / step)) + 1
    grid = np.linspace(low, high, count)
    spread = np.array([rayleigh_spread(scheme, d) for d in grid])
    logger.debug(f"Magic scan over {count} points: spread in [{spread.min():.3g}, {spread.max():.3g}]")

    if spread.max() - spread.min() <= config.MAGIC_FLAT_TOLERANCE * max(1.0, spread.max()):
        raise NoSolutionError(
            f"no interior minimum in ({low}, {high}) MHz: objective is flat (degenerate scheme)",
            reason='degenerate',
        )
    best = int(np.argmin(spread))
    if best == 0 or best == count - 1:
        raise NoSolutionError(
            f"no interior minimum in ({low}, {high}) MHz: best point {grid[best]:.2f} MHz is on the boundary",
            reason='boundary',
        )

    magic, spread_at_magic = golden_section_search(
        lambda d: rayleigh_spread(scheme, d), grid[best - 1], grid[best + 1], tol
    )
    result = MagicDetuning(
        delta_ca=magic,
        spread=spread_at_magic,
        raman_rayleigh_ratio=raman_rayleigh_ratio(scheme, magic),
        search_interval=(low, high),
    )
    logger.info(
        f"✅ Magic detuning {result.delta_ca:.2f} MHz "
        f"(spread {result.spread:.2e}, Raman/Rayleigh {result.raman_rayleigh_ratio:.2e})"
    )
    return result
