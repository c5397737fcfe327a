"""
Steady-state cavity field in the dispersive regime

The coherent z field follows

    ā = Σᵢ ηᵢ / [(Δpc - Σᵢ gᵢ² Dᵢ) + i(κ + γ Σᵢ gᵢ² Aᵢ)]

with the per-atom dispersive/absorptive weights D, A of the atom's Zeeman state
(1/Δca and 1/Δca² for a two-level atom). Raman light shares the same denominator but
adds incoherently atom by atom.
"""
import logging
from dataclasses import dataclass

import numpy as np

import config
from atomic import absorption_weights, dispersion_weights, scheme_for_mode
from errors import PreconditionError
from geometry import drive_rabi, eta_channels, mean_cos_squared, mode_coupling
from models import (
    ArrayGeometry, AtomSample, CavityField, CavityParams, DriveParams, LevelScheme,
    ScatteringMode,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FieldBatch:
    """Cavity response for a batch of samples (leading axis = sample)"""
    abar: np.ndarray
    n: np.ndarray
    shift: np.ndarray
    broadening: np.ndarray
    raman: np.ndarray

    @property
    def total(self) -> np.ndarray:
        """Photon number in both polarization modes"""
        return self.n + self.raman


def check_regime(cav: CavityParams, drv: DriveParams, scheme: LevelScheme) -> bool:
    """Log a warning when outside the dispersive, low-saturation regime; True if inside"""
    ok = True
    scale = max(drv.omega0, cav.g0, scheme.gamma_mhz)
    if abs(cav.delta_ca) < config.DISPERSIVE_FACTOR * scale:
        logger.warning(
            f"⚠️  |Δca|={abs(cav.delta_ca):.1f} MHz is not ≫ max(Ω0, g0, γ)={scale:.2f} MHz; "
            f"dispersive approximation is marginal"
        )
        ok = False
    if not drv.is_low_saturation(cav.delta_ca, scheme.gamma_mhz):
        logger.warning(
            f"⚠️  Drive saturation {drv.saturation_parameter(cav.delta_ca, scheme.gamma_mhz):.3f} "
            f"exceeds the low-saturation limit {config.LOW_SATURATION_LIMIT}"
        )
        ok = False
    return ok


def field_batch(x: np.ndarray, y: np.ndarray, m: np.ndarray,
                cav: CavityParams, drv: DriveParams, scheme: LevelScheme,
                mode: ScatteringMode = 'multilevel') -> FieldBatch:
    """
    Vectorized steady state for arrays of shape (samples, atoms)
    """
    effective = scheme_for_mode(scheme, mode)
    index = np.asarray(m, dtype=int) + effective.ground_f
    eta = eta_channels(x, y, m, cav, drv, effective, mode)
    g_squared = mode_coupling(x, cav) ** 2

    shift = (g_squared * dispersion_weights(effective, cav.delta_ca)[index]).sum(axis=-1)
    broadening = effective.gamma_mhz * (
        g_squared * absorption_weights(effective, cav.delta_ca)[index]
    ).sum(axis=-1)

    if cav.atom_modification:
        denominator = (drv.delta_pc - shift) + 1j * (cav.kappa + broadening)
    else:
        denominator = np.full(shift.shape, drv.delta_pc + 1j * cav.kappa)

    abar = eta[..., 1].sum(axis=-1) / denominator
    raman = (np.abs(eta[..., 0]) ** 2 + np.abs(eta[..., 2]) ** 2).sum(axis=-1) / np.abs(denominator) ** 2
    return FieldBatch(abar=abar, n=np.abs(abar) ** 2, shift=shift, broadening=broadening, raman=raman)


def cavity_field(sample: AtomSample, cav: CavityParams, drv: DriveParams,
                 scheme: LevelScheme, mode: ScatteringMode = 'multilevel') -> CavityField:
    """
    Steady-state cavity field for one atom configuration

    Returns the coherent z field ā with n = |ā|², the dispersive shift and absorptive
    broadening sums, and the incoherently summed Raman (y) intensity.
    """
    check_regime(cav, drv, scheme)
    batch = field_batch(
        np.asarray(sample.x, dtype=float)[None, :],
        np.asarray(sample.y, dtype=float)[None, :],
        np.asarray(sample.m, dtype=int)[None, :],
        cav, drv, scheme, mode,
    )
    return CavityField(
        abar=complex(batch.abar[0]),
        n=float(batch.n[0]),
        shift=float(batch.shift[0]),
        broadening=float(batch.broadening[0]),
        raman_intensity=float(batch.raman[0]),
    )


def exact_linear_response(sample: AtomSample, cav: CavityParams, drv: DriveParams,
                          gamma: float = config.GAMMA_MHZ) -> CavityField:
    """
    Two-level steady state without adiabatic elimination of the excited state

    Solves the coupled linear equations for the atomic coherences and the field:

        ā = [Σᵢ gᵢΩᵢ/2 · χ] / [Δpc + iκ - Σᵢ gᵢ² χ],   χ = 1/(Δpa + iγ),  Δpa = Δpc + Δca

    To first order in γ/Δca and zeroth order in Δpc/Δca this is the dispersive result.
    """
    if gamma <= 0:
        raise PreconditionError(f"gamma must be positive, got {gamma}")
    x = np.asarray(sample.x, dtype=float)
    y = np.asarray(sample.y, dtype=float)
    g = mode_coupling(x, cav)
    omega = drive_rabi(y, drv, cav)

    chi = 1.0 / (drv.delta_pc + cav.delta_ca + 1j * gamma)
    source = (0.5 * g * omega).sum() * chi
    self_energy = (g ** 2).sum() * chi
    abar = source / (drv.delta_pc + 1j * cav.kappa - self_energy)
    return CavityField(
        abar=complex(abar),
        n=float(abs(abar) ** 2),
        shift=float(self_energy.real),
        broadening=float(-self_energy.imag),
    )


def predicted_dressed_center(geom: ArrayGeometry, cav: CavityParams, scheme: LevelScheme,
                             m_weights: np.ndarray, mode: ScatteringMode = 'multilevel') -> float:
    """Position- and m-averaged atom-induced shift ⟨Σ g² D⟩ (MHz)"""
    if not cav.atom_modification:
        return 0.0
    effective = scheme_for_mode(scheme, mode)
    g_squared = cav.g0 ** 2 * mean_cos_squared(geom.nominal_x(), geom.sigma_nm, cav.k).sum()
    return float(g_squared * (m_weights @ dispersion_weights(effective, cav.delta_ca)))


def predicted_linewidth(geom: ArrayGeometry, cav: CavityParams, scheme: LevelScheme,
                        m_weights: np.ndarray, mode: ScatteringMode = 'multilevel') -> float:
    """Position- and m-averaged half-width κ + γ⟨Σ g² A⟩ (MHz)"""
    if not cav.atom_modification:
        return cav.kappa
    effective = scheme_for_mode(scheme, mode)
    g_squared = cav.g0 ** 2 * mean_cos_squared(geom.nominal_x(), geom.sigma_nm, cav.k).sum()
    return float(cav.kappa + effective.gamma_mhz * g_squared * (m_weights @ absorption_weights(effective, cav.delta_ca)))
