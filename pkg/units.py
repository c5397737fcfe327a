"""
Unit helpers for lengths and frequencies.
Spacings may be written in nanometres or as multiples of the wavelength ("5.5λ").
"""

import logging
import math
import re
from typing import Union

logger = logging.getLogger(__name__)

_WAVELENGTH_PATTERN = re.compile(
    r'^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*\*?\s*(λ|lambda|lam|wl)\s*$'
)
_NM_PATTERN = re.compile(r'^\s*([-+]?\d*\.?\d+(?:[eE][-+]?\d+)?)\s*(nm)?\s*$')


def wavenumber(wavelength_nm: float) -> float:
    """
    Angular wavenumber k = 2π/λ in nm⁻¹.

    Examples:
        >>> round(wavenumber(780.0), 6)
        0.008055
    """
    return 2.0 * math.pi / wavelength_nm


def resolve_length(value: Union[str, float, int], wavelength_nm: float) -> float:
    """
    Resolve a length given in nm or as a multiple of the wavelength.

    Args:
        value: Number (nm), "390 nm", "5.5λ", "5.5 lambda" or "0.25*λ"
        wavelength_nm: Wavelength used for λ multiples

    Returns:
        Length in nm

    Examples:
        >>> resolve_length("5.5λ", 780.0)
        4290.0
        >>> resolve_length("0.25 lambda", 780.0)
        195.0
        >>> resolve_length(100, 780.0)
        100.0
    """
    if isinstance(value, bool):
        raise ValueError(f"Not a length: {value!r}")
    if isinstance(value, (int, float)):
        return float(value)

    text = str(value)
    match = _WAVELENGTH_PATTERN.match(text)
    if match:
        nm = float(match.group(1)) * wavelength_nm
        logger.debug(f"Resolved {text!r} to {nm:.3f} nm")
        return nm

    match = _NM_PATTERN.match(text)
    if match:
        return float(match.group(1))

    raise ValueError(f"Cannot parse length {text!r} (use nm or a multiple of λ)")


def in_wavelengths(length_nm: float, wavelength_nm: float) -> float:
    """
    Express a length in units of the wavelength.

    Examples:
        >>> in_wavelengths(4290.0, 780.0)
        5.5
    """
    return length_nm / wavelength_nm


def is_multiple_of(length_nm: float, period_nm: float, tol: float = 1e-6) -> bool:
    """
    Check whether a length is an integer multiple of a period (relative tolerance).

    Examples:
        >>> is_multiple_of(3900.0, 780.0)
        True
        >>> is_multiple_of(4290.0, 780.0)
        False
    """
    ratio = length_nm / period_nm
    return abs(ratio - round(ratio)) <= tol * max(1.0, abs(ratio))
