"""
Configuration for the cavity array scattering simulator
"""
import os
import logging
from typing import Optional

# Load environment variables from .env file if it exists
try:
    from dotenv import load_dotenv
    # Load .env file from project root
    env_path = os.path.join(os.path.dirname(os.path.abspath(__file__)), '.env')
    load_dotenv(env_path)
except ImportError:
    # python-dotenv not installed, skip loading .env file
    pass

# Cavity - all frequencies are ordinary frequencies in MHz (the quoted ω/2π values)
G0_MHZ = 3.1  # Coupling on the cycling transition
KAPPA_MHZ = 0.53  # Cavity half-linewidth
WAVELENGTH_NM = 780.0  # Rb D2 line
DELTA_CA_MHZ = -507.0  # Cavity-atom detuning (the magic value)
SMALL_DELTA_CA_MHZ = -38.0  # Small detuning used for the internal-state comparisons

# Atom
GAMMA_MHZ = 3.0  # Excited-state half-linewidth
GROUND_F = 2
NUCLEAR_SPIN = 1.5
GROUND_J = 0.5
EXCITED_J = 1.5

# 87Rb 5P3/2 hyperfine offsets relative to F'=3 (MHz)
# F'=3 <-> F'=2: 266.65 MHz, F'=2 <-> F'=1: 156.95 MHz
EXCITED_MANIFOLDS = [
    (3, 0.0),
    (2, -266.65),
    (1, -266.65 - 156.95),
]

# Drive
OMEGA0_MHZ = 1.0  # Only ratios are compared, so the absolute scale is arbitrary
DELTA_PC_MHZ = 0.0
LOW_SATURATION_LIMIT = 0.05  # Ω0²/(4(Δca²+γ²)) below this is low saturation

# Array
N_ATOMS = 1
MAX_ATOMS = 64
SPACING_NM = 5.0 * WAVELENGTH_NM
OFFSET_NM = 0.0
Y_OFFSET_NM = 0.0
SIGMA_NM = 100.0  # rms thermal spread per axis

# Dispersive regime: warn if |Δca| < DISPERSIVE_FACTOR * max(Ω0, g0, γ)
DISPERSIVE_FACTOR = 10.0

# Singularity guard around the excited-state poles (MHz)
POLE_TOLERANCE_MHZ = 1e-6

# Monte Carlo
MC_SAMPLES = 100_000
MC_MIN_SAMPLES = 100
MC_SEED = 20230127
MC_BLOCK_SIZE = 4096  # Samples per RNG stream block, independent of the worker count
MAX_WORKER_THREADS = 4

# Magic detuning solver
MAGIC_SEARCH_INTERVAL_MHZ = (-1000.0, -450.0)
MAGIC_SCAN_STEP_MHZ = 1.0
MAGIC_TOLERANCE_MHZ = 0.01
MAGIC_FLAT_TOLERANCE = 1e-9  # Objective range below this counts as flat

# Spectra
SPECTRUM_POINTS = 41
SPECTRUM_HALF_SPAN_MHZ = 3.0
SPECTRUM_MIN_POINTS = 7
FIT_MAX_ITERATIONS = 200
FIT_RELATIVE_TOLERANCE = 1e-9

# Polarization analysis
THETA_GRID_DEG = [15.0 * i for i in range(13)]  # 0..180 in 15 degree steps

# Output
CSV_FLOAT_FORMAT = "{:.10g}"
VERSION = "1.0.0"


def get_default_config_path() -> Optional[str]:
    """Get default run-config path from environment"""
    return os.getenv('CAVITY_ARRAY_CONFIG')


def get_worker_threads() -> int:
    """
    Get worker thread cap from environment

    Results never depend on this value, only wall time does.
    """
    value = os.getenv('CAVITY_ARRAY_THREADS')
    if not value:
        return MAX_WORKER_THREADS
    try:
        return max(1, int(value))
    except ValueError:
        return MAX_WORKER_THREADS


def get_log_level() -> int:
    """Get log level from environment (name such as DEBUG or INFO)"""
    name = os.getenv('CAVITY_ARRAY_LOG_LEVEL', 'INFO').upper()
    return getattr(logging, name, logging.INFO)
