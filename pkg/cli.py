"""
Command-line entry point

    python cli.py <command> [--config FILE] [--seed N] [--samples N] [--threads N]
                            [--output PATH] [--format csv|json] [--delta-ca MHZ]
                            [--sigma-nm LEN] [--log-level LEVEL]

Commands: two-atom-fringe, offset-sweep, scaling, polarization, spectrum, magic.
Flags override values from the config file; the config file defaults to
$CAVITY_ARRAY_CONFIG. Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
import argparse
import logging
import sys
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

import config
from atomic import find_magic_detuning, raman_rayleigh_ratio, rayleigh_spread
from errors import CavityArrayError, ConfigError, PreconditionError
from models import ArrayGeometry, CavityParams, McEstimate, RunConfig, ScatteringMode
from montecarlo import (
    analytic_constructive, analytic_destructive, analytic_photon_number, calibrate_sigma,
    debye_waller, mc_photon_number, offset_curve,
)
from output import load_embedded_config, write_output
from polarization import polarization_decompose
from spectra import (
    default_grid, empty_cavity_spectrum, half_period_cosine_fit, lorentzian_fit, sweep_spectrum,
)
from steadystate import predicted_dressed_center, predicted_linewidth
from units import in_wavelengths

logger = logging.getLogger(__name__)

Table = Tuple[List[str], List[Tuple[Any, ...]], Dict[str, Any]]


def _grid(start: float, stop: float, step: float) -> np.ndarray:
    """Inclusive start..stop grid; the count is rounded so float steps hit the end point"""
    count = int(round((stop - start) / step)) + 1
    if count < 1:
        raise ConfigError(f"empty grid from {start} to {stop} in steps of {step}")
    return start + step * np.arange(count)


def _array(cfg: RunConfig, **update: Any) -> ArrayGeometry:
    try:
        return ArrayGeometry.model_validate({**cfg.array.model_dump(), **update})
    except ValidationError as e:
        raise ConfigError(f"invalid array for {update}: {e}") from e


def _photon_number(cfg: RunConfig, geom: ArrayGeometry, cav: CavityParams,
                   mode: ScatteringMode, peak: bool) -> McEstimate:
    """MC photon number at the configured Δpc, or on the array's own dressed resonance"""
    drive = cfg.drive
    if peak:
        weights = cfg.mc.m_weights(cfg.scheme.ground_f)
        center = predicted_dressed_center(geom, cav, cfg.scheme, weights, mode)
        drive = drive.model_copy(update={'delta_pc': center})
    return mc_photon_number(geom, cav, drive, cfg.scheme, cfg.mc, mode)


def _cavity_summary(cfg: RunConfig, cav: CavityParams) -> Dict[str, Any]:
    return {
        'cooperativity': cav.cooperativity(cfg.scheme.gamma_mhz),
        'debye_waller': debye_waller(cfg.array.sigma_nm, cav.k),
    }


# Commands

def cmd_two_atom_fringe(cfg: RunConfig) -> Table:
    """n₂/n₁ versus interatomic distance, one atom fixed on an antinode"""
    sweep = cfg.sweep.fringe
    cav, drv = cfg.cavity, cfg.drive
    single = _array(cfg, n_atoms=1)
    n1 = _photon_number(cfg, single, cav, sweep.mode, sweep.peak)
    n1_analytic = analytic_photon_number(single, cav, drv)

    rows = []
    for d in _grid(sweep.d_start_nm, sweep.d_stop_nm, sweep.d_step_nm):
        pair = _array(cfg, n_atoms=2, spacing_nm=float(d))
        ratio = _photon_number(cfg, pair, cav, sweep.mode, sweep.peak).ratio(n1)
        rows.append((
            float(d),
            in_wavelengths(float(d), cav.wavelength_nm),
            ratio.mean,
            ratio.stderr,
            float((1.0 + np.cos(cav.k * d)) ** 2),
            analytic_photon_number(pair, cav, drv) / n1_analytic,
        ))
    logger.info(f"📊 Two-atom fringe: {len(rows)} distances")
    summary = {**_cavity_summary(cfg, cav), 'n1': n1.mean}
    columns = ['d_nm', 'd_lambda', 'ratio_mean', 'ratio_stderr', 'analytic_sigma0', 'analytic']
    return columns, rows, summary


def cmd_offset_sweep(cfg: RunConfig) -> Table:
    """n_N/(N·n₁) versus whole-array displacement, with a λ/2-periodic cosine fit"""
    sweep = cfg.sweep.offset
    cav, drv, scheme, mc = cfg.cavity, cfg.drive, cfg.scheme, cfg.mc
    offsets = _grid(sweep.offset_start_nm, sweep.offset_stop_nm, sweep.offset_step_nm)
    n1 = mc_photon_number(_array(cfg, n_atoms=1), cav, drv, scheme, mc, sweep.mode)
    n1_analytic = analytic_photon_number(_array(cfg, n_atoms=1), cav, drv)

    rows, fits = [], []
    for spacing in sweep.spacings_nm:
        for n_atoms in sweep.n_values:
            base = _array(cfg, n_atoms=n_atoms, spacing_nm=spacing)
            curve = offset_curve(base, offsets, cav, drv, scheme, mc, sweep.mode)
            normalized = [estimate.ratio(n1).scaled(1.0 / n_atoms) for estimate in curve]
            for dx, value in zip(offsets, normalized):
                shifted = base.model_copy(update={'offset_nm': base.offset_nm + float(dx)})
                analytic = analytic_photon_number(shifted, cav, drv) / (n_atoms * n1_analytic)
                rows.append((float(spacing), n_atoms, float(dx), value.mean, value.stderr, analytic))
            fit = half_period_cosine_fit(offsets, [v.mean for v in normalized], cav.wavelength_nm)
            fits.append({
                'spacing_nm': float(spacing),
                'n_atoms': n_atoms,
                'mean': fit.mean,
                'cos_coefficient': fit.cos_coefficient,
                'sin_coefficient': fit.sin_coefficient,
                'amplitude': fit.amplitude,
                'residual': fit.residual,
            })
    summary = {'cosine_fits': fits, 'sigma_calibration': _sigma_calibration(cfg, sweep.mode)}
    columns = ['spacing_nm', 'n_atoms', 'offset_nm', 'ratio_mean', 'ratio_stderr', 'analytic']
    return columns, rows, summary


def _sigma_calibration(cfg: RunConfig, mode: ScatteringMode) -> Dict[str, Any]:
    """σ recovered from one atom on an antinode and on the neighbouring node"""
    single = _array(cfg, n_atoms=1, offset_nm=0.0)
    contrast, sigma = None, None
    try:
        contrast, sigma = calibrate_sigma(single, cfg.cavity, cfg.drive, cfg.scheme, cfg.mc, mode)
    except PreconditionError as e:
        logger.warning(f"⚠️  No σ calibration: {e}")
    return {
        'contrast': contrast.mean if contrast is not None else None,
        'contrast_stderr': contrast.stderr if contrast is not None else None,
        'sigma_nm': sigma,
        'configured_sigma_nm': cfg.array.sigma_nm,
    }


def cmd_scaling(cfg: RunConfig) -> Table:
    """n_N/n₁ for N = 1..n_max in constructive and destructive arrays"""
    sweep = cfg.sweep.scaling
    on_resonance = cfg.drive.model_copy(update={'delta_pc': 0.0})
    arrangements = [
        ('constructive', sweep.constructive_spacing_nm, analytic_constructive),
        ('destructive', sweep.destructive_spacing_nm, analytic_destructive),
    ]

    rows = []
    for setting in sweep.detunings:
        cav = cfg.cavity.model_copy(update={'delta_ca': setting.delta_ca})
        single = _array(cfg, n_atoms=1, spacing_nm=sweep.constructive_spacing_nm)
        n1 = _photon_number(cfg, single, cav, setting.mode, sweep.peak)
        n1_analytic = analytic_constructive(1, single, cav, on_resonance)
        for name, spacing, closed_form in arrangements:
            for n_atoms in range(1, sweep.n_max + 1):
                geom = _array(cfg, n_atoms=n_atoms, spacing_nm=spacing)
                estimate = _photon_number(cfg, geom, cav, setting.mode, sweep.peak)
                ratio = estimate.ratio(n1)
                # Thermal positions only; Zeeman-state fluctuations are in the MC columns alone
                position_only = closed_form(n_atoms, geom, cav, on_resonance) / n1_analytic
                rows.append((
                    setting.delta_ca, setting.mode, name, n_atoms,
                    estimate.mean, estimate.stderr, ratio.mean, ratio.stderr, position_only,
                ))
        logger.info(f"📊 Scaling at Δca={setting.delta_ca} MHz ({setting.mode}) done")
    columns = [
        'delta_ca_MHz', 'mode', 'arrangement', 'n_atoms',
        'n_mean', 'n_stderr', 'ratio_mean', 'ratio_stderr', 'analytic_ratio_position_only',
    ]
    return columns, rows, _cavity_summary(cfg, cfg.cavity)


def cmd_polarization(cfg: RunConfig) -> Table:
    """Polarizer transmission T(θ) for single atoms and constructive/destructive arrays"""
    sweep = cfg.sweep.polarization
    drv, scheme, mc = cfg.drive, cfg.scheme, cfg.mc

    cases = []
    for n_atoms in sweep.n_values:
        if n_atoms == 1:
            cases.append(('single', 1, sweep.constructive_spacing_nm))
        else:
            cases.append(('constructive', n_atoms, sweep.constructive_spacing_nm))
            cases.append(('destructive', n_atoms, sweep.destructive_spacing_nm))

    rows, decompositions = [], []
    for delta_ca in sweep.delta_ca_values:
        cav = cfg.cavity.model_copy(update={'delta_ca': delta_ca})
        for name, n_atoms, spacing in cases:
            geom = _array(cfg, n_atoms=n_atoms, spacing_nm=spacing)
            result = polarization_decompose(geom, cav, drv, scheme, mc, theta_deg=sweep.theta_deg)
            for point in result.transmission_curve:
                rows.append((delta_ca, name, n_atoms, point.theta_deg, point.transmission, point.stderr))
            decompositions.append({
                'delta_ca_MHz': delta_ca,
                'arrangement': name,
                'n_atoms': n_atoms,
                'I_z': result.i_z,
                'I_y': result.i_y,
                'y_fraction': result.y_fraction,
                'y_fraction_stderr': result.y_fraction_stderr,
            })
    columns = ['delta_ca_MHz', 'arrangement', 'n_atoms', 'theta_deg', 'T', 'T_stderr']
    return columns, rows, {'decompositions': decompositions}


def cmd_spectrum(cfg: RunConfig) -> Table:
    """Δpc spectra and Lorentzian center/width per detuning, arrangement and N"""
    sweep = cfg.sweep.spectrum
    drv, scheme, mc = cfg.drive, cfg.scheme, cfg.mc
    weights = mc.m_weights(scheme.ground_f)
    wavelength = cfg.cavity.wavelength_nm
    layouts = {
        'integer': {'spacing_nm': sweep.spacing_nm},
        'half_integer': {'spacing_nm': sweep.spacing_nm + 0.5 * wavelength},
        'node': {'spacing_nm': sweep.spacing_nm, 'offset_nm': cfg.array.offset_nm + 0.25 * wavelength},
    }

    rows, fits = [], []
    for delta_ca in sweep.delta_ca_values:
        cav = cfg.cavity.model_copy(update={'delta_ca': delta_ca})
        for arrangement in sweep.arrangements:
            for n_atoms in sweep.n_values:
                if n_atoms == 0:
                    grid = default_grid(0.0, sweep.points, sweep.half_span_mhz)
                    curve = empty_cavity_spectrum(grid, cav)
                    predicted = (0.0, cav.kappa)
                else:
                    geom = _array(cfg, n_atoms=n_atoms, **layouts[arrangement])
                    center = predicted_dressed_center(geom, cav, scheme, weights, sweep.mode)
                    grid = default_grid(center, sweep.points, sweep.half_span_mhz)
                    curve = sweep_spectrum(grid, geom, cav, drv, scheme, mc, sweep.mode, expected_center=center)
                    predicted = (center, predicted_linewidth(geom, cav, scheme, weights, sweep.mode))
                fit = lorentzian_fit(curve)
                for point in curve.points:
                    rows.append((delta_ca, arrangement, n_atoms, point.delta_pc, point.n.mean, point.n.stderr))
                fits.append({
                    'delta_ca_MHz': delta_ca,
                    'arrangement': arrangement,
                    'n_atoms': n_atoms,
                    'center_MHz': fit.center,
                    'hwhm_MHz': fit.hwhm,
                    'amplitude': fit.amplitude,
                    'residual': fit.residual,
                    'predicted_center_MHz': predicted[0],
                    'predicted_hwhm_MHz': predicted[1],
                })
                logger.info(
                    f"📊 Δca={delta_ca} MHz {arrangement} N={n_atoms}: "
                    f"center {fit.center:.4f} MHz, hwhm {fit.hwhm:.4f} MHz"
                )
    columns = ['delta_ca_MHz', 'arrangement', 'n_atoms', 'delta_pc_MHz', 'n_mean', 'n_stderr']
    return columns, rows, {'fits': fits}


def cmd_magic(cfg: RunConfig) -> Table:
    """Magic detuning search plus the scan it refines"""
    search = cfg.sweep.magic
    scheme = cfg.scheme
    result = find_magic_detuning(scheme, search.interval_mhz, search.step_mhz, search.tolerance_mhz)

    low, high = sorted(search.interval_mhz)
    rows = [
        (float(d), rayleigh_spread(scheme, float(d)), raman_rayleigh_ratio(scheme, float(d)))
        for d in _grid(low, high, search.step_mhz)
    ]
    reference = raman_rayleigh_ratio(scheme, config.SMALL_DELTA_CA_MHZ)
    summary = {
        'magic_delta_ca_MHz': result.delta_ca,
        'rayleigh_spread': result.spread,
        'raman_rayleigh_ratio': result.raman_rayleigh_ratio,
        'reference_delta_ca_MHz': config.SMALL_DELTA_CA_MHZ,
        'reference_raman_rayleigh_ratio': reference,
    }
    columns = ['delta_ca_MHz', 'rayleigh_spread', 'raman_rayleigh_ratio']
    return columns, rows, summary


COMMANDS: Dict[str, Callable[[RunConfig], Table]] = {
    'two-atom-fringe': cmd_two_atom_fringe,
    'offset-sweep': cmd_offset_sweep,
    'scaling': cmd_scaling,
    'polarization': cmd_polarization,
    'spectrum': cmd_spectrum,
    'magic': cmd_magic,
}


# Configuration

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='cli.py',
        description='Collective light scattering by atom arrays in a cavity',
    )
    parser.add_argument('command', choices=sorted(COMMANDS), help='what to compute')
    parser.add_argument('--config', help='JSON config or a previous output file ($CAVITY_ARRAY_CONFIG)')
    parser.add_argument('--seed', type=int, help='Monte Carlo seed')
    parser.add_argument('--samples', type=int, help='Monte Carlo samples per estimate')
    parser.add_argument('--threads', type=int, help='worker thread cap (results do not depend on it)')
    parser.add_argument('--output', help='output path (stdout when omitted)')
    parser.add_argument('--format', choices=['csv', 'json'], help='output format')
    parser.add_argument('--delta-ca', type=float, help='cavity-atom detuning in MHz (fringe and offset sweeps)')
    parser.add_argument('--sigma-nm', help='thermal rms spread, nm or a multiple of λ')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR ($CAVITY_ARRAY_LOG_LEVEL)')
    return parser


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    section = data.get(name)
    if section is None:
        section = data[name] = {}
    if not isinstance(section, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return section


def load_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Merge file values, flag overrides and defaults into a validated RunConfig

    Raises:
        ConfigError: unreadable file or invalid values
    """
    path = args.config or config.get_default_config_path()
    data: Dict[str, Any] = load_embedded_config(path) if path else {}
    if path:
        logger.info(f"🔧 Loaded config from {path}")

    if args.seed is not None:
        _section(data, 'mc')['seed'] = args.seed
    if args.samples is not None:
        _section(data, 'mc')['n_samples'] = args.samples
    if args.threads is not None:
        _section(data, 'mc')['threads'] = args.threads
    if args.output is not None:
        _section(data, 'output')['path'] = args.output
    if args.format is not None:
        _section(data, 'output')['format'] = args.format
    if args.delta_ca is not None:
        _section(data, 'cavity')['delta_ca'] = args.delta_ca
    if args.sigma_nm is not None:
        _section(data, 'array')['sigma_nm'] = args.sigma_nm

    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def run(command: str, cfg: RunConfig) -> str:
    """Execute a command and emit its table; returns the rendered text"""
    columns, rows, summary = COMMANDS[command](cfg)
    return write_output(
        columns, rows, cfg.resolved(), command,
        path=cfg.output.path, fmt=cfg.output.format, summary=summary,
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    level = config.get_log_level()
    if args.log_level:
        level = getattr(logging, args.log_level.upper(), level)
    logging.basicConfig(
        level=level,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S',
    )

    try:
        cfg = load_run_config(args)
        logger.info(f"🔧 Running {args.command} (seed {cfg.mc.seed}, {cfg.mc.n_samples} samples)")
        run(args.command, cfg)
    except CavityArrayError as e:
        logger.error(f"❌ {e}")
        return e.exit_code
    logger.info(f"✅ {args.command} finished")
    return 0


if __name__ == "__main__":
    sys.exit(main())
