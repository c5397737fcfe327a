"""
Thermal Monte Carlo estimators and their analytic Gaussian counterparts

Each sample draws every atom's x and y independently from Gaussians around the
nominal trap positions and its Zeeman state from the configured population. Samples
are generated in fixed-size blocks; block b uses the counter-based Philox stream
keyed by (seed, stream, b), so sample i is fixed by (seed, i) alone.
"""
import asyncio
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

import config
from errors import PreconditionError
from geometry import mean_cos, mean_cos_squared
from models import (
    ArrayGeometry, AtomSample, CavityParams, DriveParams, LevelScheme, McConfig,
    McEstimate, ScatteringMode,
)
from runner import BlockRunner, block_slices
from steadystate import FieldBatch, check_regime, field_batch
from units import is_multiple_of

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class McObservables:
    """Ensemble estimates of everything one steady-state evaluation yields"""
    n: McEstimate  # z + y photon number
    i_z: McEstimate
    i_y: McEstimate
    shift: McEstimate
    broadening: McEstimate
    # Delta-method standard error of i_y/(i_z + i_y)
    y_share_stderr: float = 0.0

    @classmethod
    def from_batches(cls, batches: List[FieldBatch]) -> 'McObservables':
        """Concatenate per-block arrays in block order, then reduce"""
        n_z = np.concatenate([b.n for b in batches])
        n_y = np.concatenate([b.raman for b in batches])
        shift = np.concatenate([b.shift for b in batches])
        broadening = np.concatenate([b.broadening for b in batches])
        return cls(
            n=McEstimate.from_samples(n_z + n_y),
            i_z=McEstimate.from_samples(n_z),
            i_y=McEstimate.from_samples(n_y),
            shift=McEstimate.from_samples(shift),
            broadening=McEstimate.from_samples(broadening),
            y_share_stderr=_ratio_stderr(n_y, n_z + n_y),
        )


def _ratio_stderr(numerator: np.ndarray, denominator: np.ndarray) -> float:
    """Standard error of mean(numerator)/mean(denominator) by the delta method"""
    size = numerator.size
    mean_den = denominator.mean()
    if size < 2 or mean_den == 0.0:
        return 0.0
    ratio = numerator.mean() / mean_den
    residual = (numerator - ratio * denominator) / mean_den
    return float(residual.std(ddof=1) / np.sqrt(size))


def block_generator(seed: int, block: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one block of one stream"""
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, block))
    return np.random.Generator(np.random.Philox(sequence))


def sample_batch(geom: ArrayGeometry, scheme: LevelScheme, mc: McConfig,
                 rng: np.random.Generator, size: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Draw `size` samples of the array

    Returns:
        (x, y, m), each of shape (size, n_atoms)
    """
    shape = (size, geom.n_atoms)
    x = geom.nominal_x() + geom.sigma_nm * rng.standard_normal(shape)
    y = geom.nominal_y() + geom.sigma_nm * rng.standard_normal(shape)
    m = rng.choice(np.asarray(scheme.m_values), size=shape, p=mc.m_weights(scheme.ground_f))
    return x, y, m


def sample_atoms(geom: ArrayGeometry, scheme: LevelScheme, mc: McConfig,
                 sample_index: int, stream: int = 0) -> AtomSample:
    """
    The sample_index-th sample the estimators use for this (seed, stream)

    Examples:
        σ=0 with a fixed m gives the nominal geometry for every index.
    """
    if not 0 <= sample_index < mc.n_samples:
        raise PreconditionError(f"sample index {sample_index} outside 0..{mc.n_samples - 1}")
    block = sample_index // config.MC_BLOCK_SIZE
    start, size = block_slices(mc.n_samples)[block]
    x, y, m = sample_batch(geom, scheme, mc, block_generator(mc.seed, block, stream), size)
    row = sample_index - start
    return AtomSample(
        x=tuple(float(v) for v in x[row]),
        y=tuple(float(v) for v in y[row]),
        m=tuple(int(v) for v in m[row]),
    )


async def estimate_observables(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                               scheme: LevelScheme, mc: McConfig,
                               mode: ScatteringMode = 'multilevel',
                               runner: Optional[BlockRunner] = None,
                               stream: int = 0) -> McObservables:
    """
    Evaluate every block concurrently and reduce in block order

    Pass a shared runner to bound the threads of several estimates run together.
    """
    runner = runner or BlockRunner(mc.threads)
    blocks = block_slices(mc.n_samples)

    def evaluate(index: int) -> FieldBatch:
        _, size = blocks[index]
        x, y, m = sample_batch(geom, scheme, mc, block_generator(mc.seed, index, stream), size)
        return field_batch(x, y, m, cav, drv, scheme, mode)

    batches = await runner.map(evaluate, len(blocks))
    return McObservables.from_batches(batches)


def mc_observables(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                   scheme: LevelScheme, mc: McConfig,
                   mode: ScatteringMode = 'multilevel', stream: int = 0) -> McObservables:
    """Blocking wrapper around estimate_observables()"""
    check_regime(cav, drv, scheme)
    observables = asyncio.run(estimate_observables(geom, cav, drv, scheme, mc, mode, stream=stream))
    logger.debug(
        f"📊 N={geom.n_atoms} Δca={cav.delta_ca} MHz Δpc={drv.delta_pc} MHz: "
        f"n={observables.n.mean:.6g} ± {observables.n.stderr:.2g}"
    )
    return observables


def mc_photon_number(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                     scheme: LevelScheme, mc: McConfig,
                     mode: ScatteringMode = 'multilevel') -> McEstimate:
    """
    Mean and standard error of the cavity photon number (coherent z plus incoherent y)

    Args:
        geom: Nominal array and thermal spread
        cav, drv: Cavity and drive parameters
        scheme: Atomic level scheme
        mc: Sample count, seed and Zeeman population
        mode: 'two_level' (position fluctuations only) or 'multilevel'

    Returns:
        McEstimate over mc.n_samples samples
    """
    return mc_observables(geom, cav, drv, scheme, mc, mode).n


def offset_curve(geom: ArrayGeometry, offsets_nm: Sequence[float], cav: CavityParams,
                 drv: DriveParams, scheme: LevelScheme, mc: McConfig,
                 mode: ScatteringMode = 'two_level') -> List[McEstimate]:
    """Photon number as the whole array is displaced by each Δx along the cavity axis"""
    return [
        mc_photon_number(
            geom.model_copy(update={'offset_nm': geom.offset_nm + float(dx)}), cav, drv, scheme, mc, mode
        )
        for dx in offsets_nm
    ]


def single_atom_offset_curve(geom: ArrayGeometry, offsets_nm: Sequence[float], cav: CavityParams,
                             drv: DriveParams, scheme: LevelScheme, mc: McConfig,
                             mode: ScatteringMode = 'two_level') -> List[McEstimate]:
    """Single-atom photon number versus displacement"""
    return offset_curve(geom.model_copy(update={'n_atoms': 1}), offsets_nm, cav, drv, scheme, mc, mode)


def sigma_from_contrast(contrast: float, k: float) -> float:
    """
    Thermal spread from a single atom's node/antinode photon-number ratio

    Inverts r = (1 - e^{-2k²σ²})/(1 + e^{-2k²σ²}).

    Examples:
        >>> sigma_from_contrast(0.0, 0.008)
        0.0
    """
    if not 0.0 <= contrast < 1.0:
        raise PreconditionError(f"node/antinode contrast must lie in [0, 1), got {contrast}")
    suppression = (1.0 - contrast) / (1.0 + contrast)
    return math.sqrt(max(0.0, -math.log(suppression)) / 2.0) / k


def calibrate_sigma(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                    scheme: LevelScheme, mc: McConfig,
                    mode: ScatteringMode = 'two_level') -> Tuple[McEstimate, float]:
    """
    Node/antinode contrast of one atom and the σ it implies

    The atom starts at geom's offset, which must be an antinode; the node reading is
    taken a quarter wavelength further along the cavity axis.
    """
    antinode, node = single_atom_offset_curve(
        geom, [0.0, 0.25 * cav.wavelength_nm], cav, drv, scheme, mc, mode
    )
    contrast = node.ratio(antinode)
    sigma = sigma_from_contrast(contrast.mean, cav.k)
    logger.info(f"📊 Node/antinode contrast {contrast.mean:.4f} ± {contrast.stderr:.1g} → σ = {sigma:.1f} nm")
    return contrast, sigma


# Analytic Gaussian averages (two-level amplitudes, atom-induced modifications neglected)

def debye_waller(sigma: float, k: float) -> float:
    """
    D = |⟨η⟩|²/⟨|η|²⟩ for an antinode-centred atom with rms spread sigma on x and y

    Examples:
        >>> debye_waller(0.0, 0.008)
        1.0
    """
    if sigma < 0:
        raise PreconditionError(f"sigma must be non-negative, got {sigma}")
    first = float(mean_cos(0.0, sigma, k))
    second = float(mean_cos_squared(0.0, sigma, k))
    return (first ** 2 / second) ** 2


def analytic_photon_number(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams) -> float:
    """
    Gaussian-averaged photon number for arbitrary nominal positions

        n = [Σᵢ(⟨ηᵢ²⟩ - ⟨ηᵢ⟩²) + |Σᵢ ⟨ηᵢ⟩|²] / (Δpc² + κ²)

    with η = g(x)Ω(y)/(2Δca) and independent Gaussian x, y fluctuations.
    """
    if geom.sigma_nm < 0:
        raise PreconditionError(f"sigma must be non-negative, got {geom.sigma_nm}")
    scale = cav.g0 * drv.omega0 / (2.0 * cav.delta_ca)
    x0, y0 = geom.nominal_x(), geom.nominal_y()
    first = scale * mean_cos(x0, geom.sigma_nm, cav.k) * mean_cos(y0, geom.sigma_nm, cav.k)
    second = scale ** 2 * mean_cos_squared(x0, geom.sigma_nm, cav.k) * mean_cos_squared(y0, geom.sigma_nm, cav.k)
    incoherent = float((second - first ** 2).sum())
    coherent = float(first.sum() ** 2)
    return (incoherent + coherent) / (drv.delta_pc ** 2 + cav.kappa ** 2)


def _check_analytic_preconditions(n_atoms: int, geom: ArrayGeometry, cav: CavityParams,
                                  drv: DriveParams) -> ArrayGeometry:
    if not 1 <= n_atoms <= config.MAX_ATOMS:
        raise PreconditionError(f"N must be in 1..{config.MAX_ATOMS}, got {n_atoms}")
    half = 0.5 * cav.wavelength_nm
    if not (is_multiple_of(geom.offset_nm, half) and is_multiple_of(geom.y_offset_nm, half)):
        raise PreconditionError(
            f"first atom at ({geom.offset_nm}, {geom.y_offset_nm}) nm is not on an antinode"
        )
    if drv.delta_pc != 0.0:
        raise PreconditionError(f"closed forms assume Δpc = 0, got {drv.delta_pc} MHz")
    return geom.model_copy(update={'n_atoms': n_atoms})


def analytic_constructive(n_atoms: int, geom: ArrayGeometry, cav: CavityParams,
                          drv: DriveParams) -> float:
    """
    n_N = [N(⟨|η|²⟩ - |⟨η⟩|²) + N²|⟨η⟩|²]/κ² for an integer-wavelength array

    Raises:
        PreconditionError: spacing not a multiple of λ, array off the antinodes or Δpc ≠ 0
    """
    if not is_multiple_of(geom.spacing_nm, cav.wavelength_nm):
        raise PreconditionError(f"spacing {geom.spacing_nm} nm is not a multiple of λ={cav.wavelength_nm} nm")
    return analytic_photon_number(_check_analytic_preconditions(n_atoms, geom, cav, drv), cav, drv)


def analytic_destructive(n_atoms: int, geom: ArrayGeometry, cav: CavityParams,
                         drv: DriveParams) -> float:
    """
    n_N = [N(⟨|η|²⟩ - |⟨η⟩|²) + ((1 - (-1)^N)/2)|⟨η⟩|²]/κ² for a half-integer-wavelength array

    Raises:
        PreconditionError: spacing not (m + ½)λ, array off the antinodes or Δpc ≠ 0
    """
    if not is_multiple_of(geom.spacing_nm - 0.5 * cav.wavelength_nm, cav.wavelength_nm):
        raise PreconditionError(f"spacing {geom.spacing_nm} nm is not (m + ½)λ for λ={cav.wavelength_nm} nm")
    return analytic_photon_number(_check_analytic_preconditions(n_atoms, geom, cav, drv), cav, drv)
