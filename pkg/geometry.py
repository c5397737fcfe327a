"""
Standing-wave mode functions and the per-atom scattering amplitude η

x runs along the cavity axis, y along the drive axis; the origin is a shared
cavity/drive antinode. The transverse cavity envelope is taken as 1.
"""
import logging
from typing import Union

import numpy as np

from atomic import channel_table, scheme_for_mode
from models import AtomSample, CavityParams, DriveParams, LevelScheme, ScatteringMode

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


def mode_coupling(x: ArrayLike, cav: CavityParams) -> ArrayLike:
    """g(x) = g0 cos kx (MHz)"""
    return cav.g0 * np.cos(cav.k * np.asarray(x, dtype=float))


def drive_rabi(y: ArrayLike, drv: DriveParams, cav: CavityParams) -> ArrayLike:
    """Ω(y) = Ω0 cos ky (MHz)"""
    return drv.omega0 * np.cos(cav.k * np.asarray(y, dtype=float))


def mean_cos(x0: ArrayLike, sigma: float, k: float) -> ArrayLike:
    """⟨cos k(x0+δ)⟩ for Gaussian δ with rms sigma"""
    return np.cos(k * np.asarray(x0, dtype=float)) * np.exp(-0.5 * (k * sigma) ** 2)


def mean_cos_squared(x0: ArrayLike, sigma: float, k: float) -> ArrayLike:
    """⟨cos² k(x0+δ)⟩ for Gaussian δ with rms sigma"""
    return 0.5 * (1.0 + np.cos(2.0 * k * np.asarray(x0, dtype=float)) * np.exp(-2.0 * (k * sigma) ** 2))


def eta_channels(x: np.ndarray, y: np.ndarray, m: np.ndarray,
                 cav: CavityParams, drv: DriveParams, scheme: LevelScheme,
                 mode: ScatteringMode = 'multilevel') -> np.ndarray:
    """
    Vectorized scattering amplitudes

    Args:
        x, y: Positions in nm, any matching shape
        m: Zeeman indices, same shape as x

    Returns:
        Array of shape x.shape + (3,) with η for Δm = -1, 0, +1 (MHz)
    """
    effective = scheme_for_mode(scheme, mode)
    table = channel_table(effective, cav.delta_ca)
    prefactor = np.asarray(0.5 * mode_coupling(x, cav) * drive_rabi(y, drv, cav))
    index = np.asarray(m, dtype=int) + effective.ground_f
    return (prefactor[..., None] * table[index]).astype(complex)


def eta(atom: AtomSample, cav: CavityParams, drv: DriveParams, scheme: LevelScheme,
        mode: ScatteringMode = 'multilevel') -> np.ndarray:
    """
    Scattering amplitudes of every atom in a sample

    Two-level mode gives η = g(x)Ω(y)/(2Δca) in the Δm=0 channel only; multilevel mode
    gives g(x)Ω(y)/2 times the channel amplitudes of the atom's Zeeman state.

    Returns:
        Array of shape (n_atoms, 3)
    """
    return eta_channels(
        np.asarray(atom.x), np.asarray(atom.y), np.asarray(atom.m), cav, drv, scheme, mode
    )
