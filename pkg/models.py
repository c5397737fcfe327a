"""
Pydantic models for the cavity array scattering simulator

Frequencies are ordinary frequencies in MHz, lengths are in nm.
"""

import math
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

import config
from errors import PreconditionError
from units import resolve_length, wavenumber


class FrozenModel(BaseModel):
    """Base class for all immutable models"""
    model_config = ConfigDict(frozen=True, extra='forbid', populate_by_name=True)


# Atomic structure

class ExcitedManifold(FrozenModel):
    """One excited hyperfine manifold F' and its offset from the F'=F+1 resonance"""
    f_prime: int = Field(alias='Fprime', ge=0)
    offset_mhz: float = Field(alias='offset_MHz')


class LevelScheme(FrozenModel):
    """
    Ground hyperfine manifold F plus the excited manifolds of the D2 line

    Offsets are measured from the highest F' (which therefore sits at 0) and must not
    increase as F' decreases. The standard scheme has strictly negative lower offsets;
    equal offsets are accepted for degenerate test schemes.
    """
    ground_f: int = Field(default=config.GROUND_F, alias='ground_F', ge=1)
    manifolds: Tuple[ExcitedManifold, ...] = Field(
        default_factory=lambda: tuple(
            ExcitedManifold(Fprime=f, offset_MHz=off) for f, off in config.EXCITED_MANIFOLDS
        )
    )
    gamma_mhz: float = Field(default=config.GAMMA_MHZ, alias='gamma_MHz', gt=0)
    nuclear_spin: float = Field(default=config.NUCLEAR_SPIN, ge=0)
    ground_j: float = Field(default=config.GROUND_J, gt=0)
    excited_j: float = Field(default=config.EXCITED_J, gt=0)
    two_level: bool = False

    @field_validator('manifolds')
    @classmethod
    def _sort_manifolds(cls, manifolds: Tuple[ExcitedManifold, ...]) -> Tuple[ExcitedManifold, ...]:
        if not manifolds:
            raise ValueError('at least one excited manifold is required')
        ordered = tuple(sorted(manifolds, key=lambda mf: -mf.f_prime))
        if ordered[0].offset_mhz != 0.0:
            raise ValueError(f"offset of the highest manifold F'={ordered[0].f_prime} must be 0")
        for upper, lower in zip(ordered, ordered[1:]):
            if lower.offset_mhz > upper.offset_mhz:
                raise ValueError(
                    f"offset of F'={lower.f_prime} must not lie above that of F'={upper.f_prime}"
                )
        return ordered

    @model_validator(mode='after')
    def _check_two_level(self) -> 'LevelScheme':
        if self.two_level and len(self.manifolds) != 1:
            raise ValueError('a two-level scheme has exactly one excited manifold')
        return self

    @classmethod
    def rb87_d2(cls) -> 'LevelScheme':
        """Default ⁸⁷Rb F=2 → 5P3/2 scheme"""
        return cls()

    @classmethod
    def two_level_scheme(cls) -> 'LevelScheme':
        """Single excited manifold with unit weight for every m and no Raman channels"""
        return cls(
            manifolds=(ExcitedManifold(Fprime=config.GROUND_F + 1, offset_MHz=0.0),),
            two_level=True,
        )

    @property
    def offsets(self) -> Tuple[float, ...]:
        return tuple(mf.offset_mhz for mf in self.manifolds)

    @property
    def m_values(self) -> Tuple[int, ...]:
        return tuple(range(-self.ground_f, self.ground_f + 1))


class ChannelAmplitude(FrozenModel):
    """Two-photon amplitude (MHz⁻¹) for a z-polarized drive into one emission channel"""
    value: complex
    delta_m: Literal[-1, 0, 1]
    emit_polarization: Literal['z', 'y']
    m_initial: int

    @model_validator(mode='after')
    def _check_polarization(self) -> 'ChannelAmplitude':
        expected = 'z' if self.delta_m == 0 else 'y'
        if self.emit_polarization != expected:
            raise ValueError(f"Δm={self.delta_m} emits {expected}-polarized light")
        return self


class MagicDetuning(FrozenModel):
    """Solution of the magic-detuning search"""
    delta_ca: float
    spread: float
    raman_rayleigh_ratio: float
    search_interval: Tuple[float, float]


# Cavity, drive and array

class CavityParams(FrozenModel):
    """Cavity coupling g0, half-linewidth kappa, wavelength and cavity-atom detuning"""
    g0: float = Field(default=config.G0_MHZ, gt=0)
    kappa: float = Field(default=config.KAPPA_MHZ, gt=0)
    wavelength_nm: float = Field(default=config.WAVELENGTH_NM, gt=0)
    delta_ca: float = config.DELTA_CA_MHZ
    # Off: drop the atom-induced shift/broadening sums (large-|Δca| limit)
    atom_modification: bool = True

    @property
    def k(self) -> float:
        """Wavenumber in nm⁻¹"""
        return wavenumber(self.wavelength_nm)

    def cooperativity(self, gamma: float) -> float:
        """Single-atom cooperativity C = g0²/(2κγ)"""
        return self.g0 ** 2 / (2.0 * self.kappa * gamma)


class DriveParams(FrozenModel):
    """Transverse drive: Rabi amplitude Ω0 and drive-cavity detuning Δpc"""
    omega0: float = Field(default=config.OMEGA0_MHZ, ge=0)
    delta_pc: float = config.DELTA_PC_MHZ

    def saturation_parameter(self, delta_ca: float, gamma: float) -> float:
        return self.omega0 ** 2 / (4.0 * (delta_ca ** 2 + gamma ** 2))

    def is_low_saturation(self, delta_ca: float, gamma: float) -> bool:
        return self.saturation_parameter(delta_ca, gamma) < config.LOW_SATURATION_LIMIT


class ArrayGeometry(FrozenModel):
    """
    One-dimensional tweezer array along the cavity axis

    Atom i sits nominally at (offset + i·spacing, y_offset).
    """
    n_atoms: int = Field(default=config.N_ATOMS, ge=1, le=config.MAX_ATOMS)
    spacing_nm: float = config.SPACING_NM
    offset_nm: float = config.OFFSET_NM
    y_offset_nm: float = config.Y_OFFSET_NM
    sigma_nm: float = Field(default=config.SIGMA_NM, ge=0)

    def nominal_x(self) -> np.ndarray:
        return self.offset_nm + self.spacing_nm * np.arange(self.n_atoms)

    def nominal_y(self) -> np.ndarray:
        return np.full(self.n_atoms, self.y_offset_nm)


class AtomSample(FrozenModel):
    """One Monte Carlo realization: positions (nm) and Zeeman index per atom"""
    x: Tuple[float, ...]
    y: Tuple[float, ...]
    m: Tuple[int, ...]

    @model_validator(mode='after')
    def _check_lengths(self) -> 'AtomSample':
        if not (len(self.x) == len(self.y) == len(self.m)):
            raise ValueError('x, y and m must have one entry per atom')
        return self

    @property
    def n_atoms(self) -> int:
        return len(self.x)

    @classmethod
    def at_rest(cls, geom: ArrayGeometry, m: int = 0) -> 'AtomSample':
        """Sample with every atom at its nominal position"""
        return cls(
            x=tuple(float(v) for v in geom.nominal_x()),
            y=tuple(float(v) for v in geom.nominal_y()),
            m=(m,) * geom.n_atoms,
        )


# Monte Carlo

class McConfig(FrozenModel):
    """Sample count, seed and Zeeman population used by the estimators"""
    n_samples: int = Field(default=config.MC_SAMPLES, ge=config.MC_MIN_SAMPLES)
    seed: int = Field(default=config.MC_SEED, ge=0, lt=2 ** 64)
    mf: Union[Literal['uniform'], int, List[float]] = Field(default='uniform', alias='mF')
    # Worker cap only changes wall time, so it is kept out of dumped configs
    threads: int = Field(default_factory=config.get_worker_threads, ge=1, exclude=True)

    @field_validator('mf')
    @classmethod
    def _check_weights(cls, value: Any) -> Any:
        if isinstance(value, list):
            if any(w < 0 for w in value) or sum(value) <= 0:
                raise ValueError('mF weights must be non-negative with a positive sum')
        return value

    def m_weights(self, ground_f: int) -> np.ndarray:
        """Normalized population of m = -F..F"""
        size = 2 * ground_f + 1
        if self.mf == 'uniform':
            return np.full(size, 1.0 / size)
        if isinstance(self.mf, int):
            if abs(self.mf) > ground_f:
                raise PreconditionError(f"fixed m={self.mf} outside -{ground_f}..{ground_f}")
            weights = np.zeros(size)
            weights[self.mf + ground_f] = 1.0
            return weights
        weights = np.asarray(self.mf, dtype=float)
        if weights.size != size:
            raise PreconditionError(f"expected {size} mF weights for F={ground_f}, got {weights.size}")
        return weights / weights.sum()


class McEstimate(FrozenModel):
    """Mean and standard error of a scalar observable"""
    mean: float
    stderr: float = Field(ge=0)
    n_samples: int = Field(ge=1)

    @classmethod
    def from_samples(cls, values: np.ndarray) -> 'McEstimate':
        values = np.asarray(values, dtype=float)
        n = values.size
        stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return cls(mean=float(values.mean()), stderr=stderr, n_samples=n)

    def ratio(self, other: 'McEstimate') -> 'McEstimate':
        """self/other with first-order error propagation"""
        if other.mean == 0.0:
            raise PreconditionError('ratio to an estimate with zero mean')
        value = self.mean / other.mean
        rel = math.hypot(
            self.stderr / self.mean if self.mean else 0.0,
            other.stderr / other.mean,
        )
        stderr = abs(value) * rel if self.mean else self.stderr / abs(other.mean)
        return McEstimate(mean=value, stderr=stderr, n_samples=min(self.n_samples, other.n_samples))

    def scaled(self, factor: float) -> 'McEstimate':
        return McEstimate(mean=self.mean * factor, stderr=self.stderr * abs(factor), n_samples=self.n_samples)


# Steady state

class CavityField(FrozenModel):
    """Steady-state cavity field and the atom-induced shift/broadening"""
    abar: complex
    n: float = Field(ge=0)
    shift: float
    broadening: float = Field(ge=0)
    raman_intensity: float = Field(default=0.0, ge=0)


# Spectra

class SpectrumPoint(FrozenModel):
    delta_pc: float
    n: McEstimate


class SpectrumCurve(FrozenModel):
    """Cavity photon number versus drive-cavity detuning"""
    points: Tuple[SpectrumPoint, ...]

    @field_validator('points')
    @classmethod
    def _check_grid(cls, points: Tuple[SpectrumPoint, ...]) -> Tuple[SpectrumPoint, ...]:
        if len(points) < config.SPECTRUM_MIN_POINTS:
            raise ValueError(f"a spectrum needs at least {config.SPECTRUM_MIN_POINTS} points")
        grid = [p.delta_pc for p in points]
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError('Δpc grid must be strictly increasing')
        return points

    @classmethod
    def from_arrays(cls, grid: np.ndarray, values: np.ndarray,
                    stderr: Optional[np.ndarray] = None, n_samples: int = 1) -> 'SpectrumCurve':
        if stderr is None:
            stderr = np.zeros_like(values)
        return cls(points=tuple(
            SpectrumPoint(delta_pc=float(x), n=McEstimate(mean=float(v), stderr=float(s), n_samples=n_samples))
            for x, v, s in zip(grid, values, stderr)
        ))

    @property
    def delta_pc(self) -> np.ndarray:
        return np.array([p.delta_pc for p in self.points])

    @property
    def n_mean(self) -> np.ndarray:
        return np.array([p.n.mean for p in self.points])

    @property
    def n_stderr(self) -> np.ndarray:
        return np.array([p.n.stderr for p in self.points])


class LorentzianFit(FrozenModel):
    """A/(1+((x-x0)/w)²) fit result"""
    amplitude: float = Field(gt=0)
    center: float
    hwhm: float = Field(gt=0)
    residual: float
    iterations: int = 0


# Polarization

class TransmissionPoint(FrozenModel):
    theta_deg: float
    transmission: float = Field(ge=0, le=1)
    stderr: float = Field(default=0.0, ge=0)


class PolarizationResult(FrozenModel):
    """Coherent z (Rayleigh) and incoherent y (Raman) cavity output"""
    i_z: float = Field(ge=0)
    i_y: float = Field(ge=0)
    y_fraction_stderr: float = Field(default=0.0, ge=0)
    transmission_curve: Tuple[TransmissionPoint, ...] = ()

    @property
    def y_fraction(self) -> float:
        total = self.i_z + self.i_y
        return self.i_y / total if total > 0 else 0.0


# Run configuration

ScatteringMode = Literal['two_level', 'multilevel']


class DetuningSetting(FrozenModel):
    delta_ca: float
    mode: ScatteringMode = 'multilevel'


class FringeSweep(FrozenModel):
    """Two-atom distance sweep"""
    d_start_nm: float = 1.0 * config.WAVELENGTH_NM
    d_stop_nm: float = 2.0 * config.WAVELENGTH_NM
    d_step_nm: float = Field(default=0.025 * config.WAVELENGTH_NM, gt=0)
    mode: ScatteringMode = 'two_level'
    # Evaluate each array on its own dressed resonance rather than at Δpc
    peak: bool = True


class OffsetSweep(FrozenModel):
    """Whole-array displacement sweep"""
    n_values: List[int] = Field(default_factory=lambda: [1, 2, 3])
    spacings_nm: List[float] = Field(
        default_factory=lambda: [4.0 * config.WAVELENGTH_NM, 3.5 * config.WAVELENGTH_NM]
    )
    offset_start_nm: float = 0.0
    offset_stop_nm: float = 0.5 * config.WAVELENGTH_NM
    offset_step_nm: float = Field(default=0.025 * config.WAVELENGTH_NM, gt=0)
    mode: ScatteringMode = 'two_level'


class ScalingSweep(FrozenModel):
    """Photon number versus N for constructive and destructive arrays"""
    n_max: int = Field(default=8, ge=1, le=config.MAX_ATOMS)
    constructive_spacing_nm: float = 5.0 * config.WAVELENGTH_NM
    destructive_spacing_nm: float = 5.5 * config.WAVELENGTH_NM
    detunings: List[DetuningSetting] = Field(default_factory=lambda: [
        DetuningSetting(delta_ca=config.DELTA_CA_MHZ, mode='two_level'),
        DetuningSetting(delta_ca=config.SMALL_DELTA_CA_MHZ, mode='multilevel'),
    ])
    # Evaluate each N on its own dressed resonance rather than at Δpc
    peak: bool = True


class PolarizationSweep(FrozenModel):
    """Polarizer-angle analysis for single atoms and N-atom arrays"""
    n_values: List[int] = Field(default_factory=lambda: [1, 8])
    delta_ca_values: List[float] = Field(
        default_factory=lambda: [config.SMALL_DELTA_CA_MHZ, config.DELTA_CA_MHZ]
    )
    constructive_spacing_nm: float = 5.0 * config.WAVELENGTH_NM
    destructive_spacing_nm: float = 5.5 * config.WAVELENGTH_NM
    theta_deg: List[float] = Field(default_factory=lambda: list(config.THETA_GRID_DEG))


class SpectrumSweep(FrozenModel):
    """Drive-detuning sweeps and Lorentzian extraction"""
    n_values: List[int] = Field(default_factory=lambda: [1, 3, 8])
    delta_ca_values: List[float] = Field(
        default_factory=lambda: [config.DELTA_CA_MHZ, config.SMALL_DELTA_CA_MHZ, -19.0, 19.0]
    )
    arrangements: List[Literal['integer', 'half_integer', 'node']] = Field(
        default_factory=lambda: ['integer']
    )
    spacing_nm: float = 5.0 * config.WAVELENGTH_NM
    points: int = Field(default=config.SPECTRUM_POINTS, ge=config.SPECTRUM_MIN_POINTS)
    half_span_mhz: float = Field(default=config.SPECTRUM_HALF_SPAN_MHZ, gt=0)
    mode: ScatteringMode = 'multilevel'


class MagicSearch(FrozenModel):
    interval_mhz: Tuple[float, float] = config.MAGIC_SEARCH_INTERVAL_MHZ
    step_mhz: float = Field(default=config.MAGIC_SCAN_STEP_MHZ, gt=0)
    tolerance_mhz: float = Field(default=config.MAGIC_TOLERANCE_MHZ, gt=0)


class SweepSection(FrozenModel):
    fringe: FringeSweep = Field(default_factory=FringeSweep)
    offset: OffsetSweep = Field(default_factory=OffsetSweep)
    scaling: ScalingSweep = Field(default_factory=ScalingSweep)
    polarization: PolarizationSweep = Field(default_factory=PolarizationSweep)
    spectrum: SpectrumSweep = Field(default_factory=SpectrumSweep)
    magic: MagicSearch = Field(default_factory=MagicSearch)


class OutputConfig(FrozenModel):
    # Where a file is written does not change its contents
    path: Optional[str] = Field(default=None, exclude=True)
    format: Literal['csv', 'json'] = 'csv'


def _resolve_lengths(node: Any, wavelength_nm: float) -> Any:
    """Resolve every *_nm entry that is written as a multiple of λ"""
    if isinstance(node, dict):
        resolved = {}
        for key, value in node.items():
            if isinstance(key, str) and key.endswith('_nm') and key != 'wavelength_nm':
                if isinstance(value, list):
                    value = [resolve_length(v, wavelength_nm) for v in value]
                elif value is not None:
                    value = resolve_length(value, wavelength_nm)
            else:
                value = _resolve_lengths(value, wavelength_nm)
            resolved[key] = value
        return resolved
    if isinstance(node, list):
        return [_resolve_lengths(v, wavelength_nm) for v in node]
    return node


class RunConfig(FrozenModel):
    """Full, defaults-merged configuration of one CLI run"""
    cavity: CavityParams = Field(default_factory=CavityParams)
    drive: DriveParams = Field(default_factory=DriveParams)
    array: ArrayGeometry = Field(default_factory=ArrayGeometry)
    scheme: LevelScheme = Field(default_factory=LevelScheme)
    mc: McConfig = Field(default_factory=McConfig)
    sweep: SweepSection = Field(default_factory=SweepSection)
    output: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode='before')
    @classmethod
    def _resolve_wavelength_multiples(cls, data: Any) -> Any:
        if not isinstance(data, dict):
            return data
        cavity = data.get('cavity') or {}
        if isinstance(cavity, CavityParams):
            wavelength = cavity.wavelength_nm
        else:
            wavelength = float(cavity.get('wavelength_nm', config.WAVELENGTH_NM))
        try:
            return _resolve_lengths(data, wavelength)
        except ValueError as e:
            raise ValueError(str(e)) from e

    def resolved(self) -> Dict[str, Any]:
        """JSON-ready dump that reproduces this run when loaded again"""
        return self.model_dump(mode='json', by_alias=True)


class CosineFit(FrozenModel):
    """a + b·cos(4πΔx/λ) + c·sin(4πΔx/λ), period fixed to λ/2"""
    mean: float
    cos_coefficient: float
    sin_coefficient: float
    residual: float

    @property
    def amplitude(self) -> float:
        return math.hypot(self.cos_coefficient, self.sin_coefficient)
