"""
Drive-detuning spectra and Lorentzian extraction of the atom-induced shift and width
"""
import asyncio
import logging
from typing import Optional, Sequence

import numpy as np
import scipy.linalg as la

import config
from errors import FitError, FitPreconditionError, PreconditionError
from models import (
    ArrayGeometry, CavityParams, CosineFit, DriveParams, LevelScheme, LorentzianFit,
    McConfig, ScatteringMode, SpectrumCurve,
)
from montecarlo import estimate_observables
from runner import BlockRunner
from steadystate import check_regime

logger = logging.getLogger(__name__)


def default_grid(center: float = 0.0, points: int = config.SPECTRUM_POINTS,
                 half_span: float = config.SPECTRUM_HALF_SPAN_MHZ) -> np.ndarray:
    """
    Evenly spaced Δpc grid around a center (MHz)

    Examples:
        >>> default_grid(0.0, 7, 3.0).tolist()
        [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0]
    """
    if points < config.SPECTRUM_MIN_POINTS:
        raise PreconditionError(f"a spectrum needs at least {config.SPECTRUM_MIN_POINTS} points, got {points}")
    return np.linspace(center - half_span, center + half_span, points)


def _check_span(grid: np.ndarray, center: float, kappa: float) -> None:
    if grid.min() > center - 3.0 * kappa or grid.max() < center + 3.0 * kappa:
        logger.warning(
            f"⚠️  Grid [{grid.min():.3f}, {grid.max():.3f}] MHz does not span ±3κ "
            f"around the expected resonance at {center:.3f} MHz"
        )


async def _sweep(grid: np.ndarray, geom: ArrayGeometry, cav: CavityParams, drv: DriveParams,
                 scheme: LevelScheme, mc: McConfig, mode: ScatteringMode):
    runner = BlockRunner(mc.threads)
    tasks = [
        estimate_observables(
            geom, cav, drv.model_copy(update={'delta_pc': float(delta_pc)}), scheme, mc, mode,
            runner=runner,
        )
        for delta_pc in grid
    ]
    return await asyncio.gather(*tasks)


def sweep_spectrum(grid: Sequence[float], geom: ArrayGeometry, cav: CavityParams,
                   drv: DriveParams, scheme: LevelScheme, mc: McConfig,
                   mode: ScatteringMode = 'multilevel',
                   expected_center: Optional[float] = None) -> SpectrumCurve:
    """
    Photon number on a Δpc grid

    Every grid point uses the same base seed, so all points see the same atom samples
    and the curve is smooth even at modest sample counts.

    Args:
        grid: Strictly increasing Δpc values (MHz), at least 7 of them
        expected_center: Dressed resonance used for the span check (defaults to the grid centre)
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size < config.SPECTRUM_MIN_POINTS or np.any(np.diff(grid) <= 0):
        raise PreconditionError(
            f"Δpc grid must be strictly increasing with at least {config.SPECTRUM_MIN_POINTS} points"
        )
    center = 0.5 * (grid[0] + grid[-1]) if expected_center is None else expected_center
    _check_span(grid, center, cav.kappa)
    check_regime(cav, drv, scheme)

    results = asyncio.run(_sweep(grid, geom, cav, drv, scheme, mc, mode))
    logger.info(f"📊 Spectrum of {grid.size} points for N={geom.n_atoms}, Δca={cav.delta_ca} MHz")
    return SpectrumCurve.from_arrays(
        grid,
        np.array([r.n.mean for r in results]),
        np.array([r.n.stderr for r in results]),
        n_samples=mc.n_samples,
    )


def empty_cavity_spectrum(grid: Sequence[float], cav: CavityParams) -> SpectrumCurve:
    """Bare-cavity response κ²/(Δpc² + κ²) to a unit source, the N=0 reference"""
    grid = np.asarray(grid, dtype=float)
    return SpectrumCurve.from_arrays(grid, cav.kappa ** 2 / (grid ** 2 + cav.kappa ** 2))


def lorentzian(x: np.ndarray, amplitude: float, center: float, hwhm: float) -> np.ndarray:
    """A/(1+((x-x0)/w)²)"""
    return amplitude / (1.0 + ((x - center) / hwhm) ** 2)


def _initial_guess(x: np.ndarray, y: np.ndarray, peak: int) -> np.ndarray:
    """Peak point plus the interpolated half-maximum crossings"""
    amplitude = y[peak]
    half = 0.5 * amplitude
    widths = []

    below = np.nonzero(y[:peak] < half)[0]
    if below.size:
        i = below[-1]
        xc = x[i] + (half - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i])
        widths.append(x[peak] - xc)
    above = np.nonzero(y[peak + 1:] < half)[0]
    if above.size:
        i = peak + 1 + above[0]
        xc = x[i - 1] + (half - y[i - 1]) * (x[i] - x[i - 1]) / (y[i] - y[i - 1])
        widths.append(xc - x[peak])

    hwhm = float(np.mean(widths)) if widths else 0.25 * (x[-1] - x[0])
    return np.array([amplitude, x[peak], hwhm])


def _jacobian(x: np.ndarray, estimate: np.ndarray) -> np.ndarray:
    amplitude, center, hwhm = estimate
    u = (x - center) / hwhm
    shape = 1.0 / (1.0 + u ** 2)
    jg = np.empty((x.size, 3))
    jg[:, 0] = shape
    jg[:, 1] = amplitude * 2.0 * u * shape ** 2 / hwhm
    jg[:, 2] = amplitude * 2.0 * u ** 2 * shape ** 2 / hwhm
    return jg


def lorentzian_fit(curve: SpectrumCurve,
                   max_iterations: int = config.FIT_MAX_ITERATIONS,
                   tolerance: float = config.FIT_RELATIVE_TOLERANCE) -> LorentzianFit:
    """
    Least-squares Lorentzian fit by damped Gauss-Newton iterations

    Starts from the peak point and half-maximum crossings; each step solves the
    linearized problem with scipy.linalg.lstsq and is halved until the cost drops.
    Stops when every parameter changes by less than `tolerance` relative to its scale.

    Raises:
        FitPreconditionError: the curve has no interior maximum
        FitError: no convergence within max_iterations, or a non-physical result
    """
    x = curve.delta_pc
    y = curve.n_mean
    peak = int(np.argmax(y))
    if peak == 0 or peak == x.size - 1 or y[peak] <= 0:
        raise FitPreconditionError(
            f"curve has no interior maximum (peak at index {peak} of {x.size})",
            diagnostics={'peak_index': peak, 'peak_value': float(y[peak])},
        )

    estimate = _initial_guess(x, y, peak)
    cost = float(np.sum((lorentzian(x, *estimate) - y) ** 2))
    logger.debug(f"Lorentzian fit start: A={estimate[0]:.4g} x0={estimate[1]:.4g} w={estimate[2]:.4g}")

    for iteration in range(1, max_iterations + 1):
        diff = lorentzian(x, *estimate) - y
        dlambda, _, _, _ = la.lstsq(_jacobian(x, estimate), diff)

        scale = np.array([abs(estimate[0]), abs(estimate[2]), abs(estimate[2])])
        if np.all(np.abs(dlambda) <= tolerance * scale):
            estimate = estimate - dlambda
            break

        step = 1.0
        for _ in range(40):
            trial = estimate - step * dlambda
            if trial[2] > 0:
                trial_cost = float(np.sum((lorentzian(x, *trial) - y) ** 2))
                if trial_cost <= cost:
                    break
            step *= 0.5
        else:
            # No descent direction left: already at the least-squares minimum
            logger.debug(f"Lorentzian fit stalled at iteration {iteration}")
            break

        estimate, cost = trial, trial_cost
    else:
        raise FitError(
            f"Lorentzian fit did not converge in {max_iterations} iterations",
            diagnostics={
                'amplitude': float(estimate[0]),
                'center': float(estimate[1]),
                'hwhm': float(estimate[2]),
                'cost': cost,
            },
        )

    amplitude, center, hwhm = (float(v) for v in estimate)
    hwhm = abs(hwhm)
    if amplitude <= 0 or hwhm <= 0 or not np.isfinite([amplitude, center, hwhm]).all():
        raise FitError(
            'Lorentzian fit produced non-physical parameters',
            diagnostics={'amplitude': amplitude, 'center': center, 'hwhm': hwhm},
        )
    residual = float(np.sqrt(np.mean((lorentzian(x, amplitude, center, hwhm) - y) ** 2)))
    return LorentzianFit(
        amplitude=amplitude, center=center, hwhm=hwhm, residual=residual, iterations=iteration,
    )


def half_period_cosine_fit(offsets_nm: Sequence[float], values: Sequence[float],
                           wavelength_nm: float) -> CosineFit:
    """
    Linear least squares of a + b·cos(4πΔx/λ) + c·sin(4πΔx/λ)

    The period is fixed to λ/2, the periodicity of |cos kx|².
    """
    offsets = np.asarray(offsets_nm, dtype=float)
    values = np.asarray(values, dtype=float)
    if offsets.size < 3:
        raise FitPreconditionError(f"a cosine fit needs at least 3 points, got {offsets.size}")
    phase = 4.0 * np.pi * offsets / wavelength_nm
    design = np.column_stack([np.ones_like(phase), np.cos(phase), np.sin(phase)])
    coefficients, _, _, _ = la.lstsq(design, values)
    residual = float(np.sqrt(np.mean((design @ coefficients - values) ** 2)))
    return CosineFit(
        mean=float(coefficients[0]),
        cos_coefficient=float(coefficients[1]),
        sin_coefficient=float(coefficients[2]),
        residual=residual,
    )
