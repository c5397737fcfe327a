"""
Polarization content of the cavity output

Rayleigh light (Δm=0) is z-polarized and interferes between atoms; Raman light
(Δm=±1) lands in the y mode and adds incoherently. Both modes share κ and the
atom-modified denominator.
"""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

import config
from errors import PreconditionError
from models import (
    ArrayGeometry, CavityParams, DriveParams, LevelScheme, McConfig, PolarizationResult,
    ScatteringMode, TransmissionPoint,
)
from montecarlo import mc_observables

logger = logging.getLogger(__name__)


def transmission_curve(i_z: float, i_y: float,
                       theta_deg: Sequence[float] = config.THETA_GRID_DEG,
                       y_fraction_stderr: float = 0.0) -> Tuple[TransmissionPoint, ...]:
    """
    Relative transmission through a linear polarizer at angle θ from z

        T(θ) = (I_z cos²θ + I_y sin²θ)/(I_z + I_y)

    Raises:
        PreconditionError: no light in either mode
    """
    total = i_z + i_y
    if total <= 0:
        raise PreconditionError('transmission undefined: cavity emits no light')
    y_fraction = i_y / total
    theta = np.radians(np.asarray(theta_deg, dtype=float))
    transmission = np.clip(np.cos(theta) ** 2 - y_fraction * np.cos(2.0 * theta), 0.0, 1.0)
    stderr = np.abs(np.cos(2.0 * theta)) * y_fraction_stderr
    return tuple(
        TransmissionPoint(theta_deg=float(t), transmission=float(v), stderr=float(s))
        for t, v, s in zip(theta_deg, transmission, stderr)
    )


def polarization_decompose(geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                           scheme: LevelScheme, mc: McConfig,
                           mode: ScatteringMode = 'multilevel',
                           theta_deg: Optional[Sequence[float]] = None) -> PolarizationResult:
    """
    Monte Carlo means of the z (Rayleigh) and y (Raman) cavity intensities

    I_z averages |Σᵢ η_z,i|²/|denominator|²; I_y averages Σᵢ Σ_{Δm=±1} |η_Δm,i|²/|denominator|².
    Two-level mode has no Raman channel and returns I_y = 0.
    """
    if mode == 'two_level':
        logger.warning("⚠️  Two-level mode has no Raman channel; I_y will be 0")
    observables = mc_observables(geom, cav, drv, scheme, mc, mode)
    i_z = observables.i_z.mean
    i_y = observables.i_y.mean
    theta = config.THETA_GRID_DEG if theta_deg is None else theta_deg
    result = PolarizationResult(
        i_z=i_z,
        i_y=i_y,
        y_fraction_stderr=observables.y_share_stderr,
        transmission_curve=transmission_curve(i_z, i_y, theta, observables.y_share_stderr),
    )
    logger.info(
        f"📊 N={geom.n_atoms} Δca={cav.delta_ca} MHz: y-fraction {result.y_fraction:.4f} "
        f"± {result.y_fraction_stderr:.1g}"
    )
    return result
