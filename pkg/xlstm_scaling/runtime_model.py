"""
Roofline runtime model for inference.

Prefill (time to first token) is treated as compute bound and fitted with an
effective FLOP rate; generation (step time) is memory bound and fitted with an
effective bandwidth. Both fits carry a constant overhead epsilon.
"""

from dataclasses import asdict, dataclass
from enum import Enum
import json
import logging
import os

import numpy as np

from xlstm_scaling.errors import (
    DataError,
    InsufficientDataError,
    InvalidConfigError,
    ModeMismatchError,
    NegativeRateError,
    UndefinedIntensityError,
)
from xlstm_scaling.flop_counting import (
    DEFAULT_FACTORS,
    Workload,
    WorkloadMode,
    flops_model_forward,
)
from xlstm_scaling.memop_counting import DEFAULT_WIDTHS, bytes_model

logger = logging.getLogger(__name__)

ACCELERATOR_FILE = os.path.join(os.path.dirname(__file__), 'data', 'accelerators.json')


class Regime(str, Enum):
    COMPUTE_BOUND = 'compute_bound'
    MEMORY_BOUND = 'memory_bound'


class Metric(str, Enum):
    TTFT = 'ttft'
    STEP_TIME = 'step_time'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).replace('-', '_'))

    @property
    def regime(self):
        return Regime.COMPUTE_BOUND if self is Metric.TTFT else Regime.MEMORY_BOUND


@dataclass(frozen=True)
class AcceleratorSpec:
    """Peak rates of one device: FLOPs/s, memory bytes/s and link bytes/s."""

    name: str
    alpha_acc: float
    beta_acc: float
    gamma_comm: float
    year: int | None = None
    aliases: tuple = ()
    listed_intensity: float | None = None

    def __post_init__(self):
        bad = [n for n in ('alpha_acc', 'beta_acc', 'gamma_comm') if not getattr(self, n) > 0]
        if bad:
            raise InvalidConfigError([f'accelerator {self.name}: {n} must be > 0' for n in bad])

    @property
    def intensity(self):
        """Ridge point of the roofline in FLOPs per byte, alpha_acc / beta_acc."""
        return self.alpha_acc / self.beta_acc

    @property
    def reported_intensity(self):
        """
        Intensity as listed by the vendor table, falling back to the ridge point.

        Only reported, never used to classify: the listed A100 value (161)
        differs from its ridge point (153).
        """
        if self.listed_intensity is not None:
            return self.listed_intensity
        return self.intensity

    def to_dict(self):
        data = asdict(self)
        data['aliases'] = list(self.aliases)
        return data


def load_accelerators(path=None, registry=None):
    """
    Read accelerator specs into a case-insensitive registry.

    Args:
        path: JSON file with an ``accelerators`` list; the built-in table when None.
        registry: existing registry to extend.

    Returns:
        Dict from lower-cased name or alias to AcceleratorSpec.
    """
    registry = {} if registry is None else dict(registry)
    path = ACCELERATOR_FILE if path is None else path
    try:
        with open(path) as f:
            entries = json.load(f)['accelerators']
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f'cannot read accelerator file {path}: {exc}')
    for number, entry in enumerate(entries, start=1):
        try:
            spec = AcceleratorSpec(
                name=entry['name'], alpha_acc=float(entry['alpha_acc']),
                beta_acc=float(entry['beta_acc']), gamma_comm=float(entry['gamma_comm']),
                year=entry.get('year'), aliases=tuple(entry.get('aliases', ())),
                listed_intensity=entry.get('intensity'))
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f'{path}: accelerator {number}: missing or invalid {exc}')
        for key in (spec.name, *spec.aliases):
            registry[key.lower()] = spec
    return registry


def get_accelerator(name, registry=None):
    registry = load_accelerators() if registry is None else registry
    try:
        return registry[name.lower()]
    except KeyError:
        known = sorted({spec.name for spec in registry.values()})
        raise InvalidConfigError(f'unknown accelerator {name!r}; known: {", ".join(known)}')


def _check_rate(rate):
    if not rate > 0:
        raise InvalidConfigError(f'rate must be > 0, got {rate!r}')


def time_flops(flops, rate_eff, epsilon=0.0):
    """Compute time in seconds at an effective FLOP rate plus overhead."""
    _check_rate(rate_eff)
    return flops / rate_eff + epsilon


def time_mem(n_bytes, rate_eff, epsilon=0.0):
    """Memory time in seconds at an effective bandwidth plus overhead."""
    _check_rate(rate_eff)
    return n_bytes / rate_eff + epsilon


def time_comm(n_bytes, gamma_comm):
    """Communication time in seconds at a link bandwidth (never fitted)."""
    _check_rate(gamma_comm)
    return n_bytes / gamma_comm


def arithmetic_intensity(flops, n_bytes):
    if n_bytes == 0:
        raise UndefinedIntensityError('arithmetic intensity is undefined for zero bytes')
    return flops / n_bytes


def classify_regime(intensity, accel):
    """Compute bound at or above the accelerator's ridge intensity."""
    return Regime.COMPUTE_BOUND if intensity >= accel.intensity else Regime.MEMORY_BOUND


def runtime_bounds(t_flops, t_mem):
    """(lower, upper) runtime for full and for no compute/memory overlap."""
    return max(t_flops, t_mem), t_flops + t_mem


def roofline_report(flops, n_bytes, accel):
    """Per-operation roofline diagnostic at the accelerator's peak rates."""
    intensity = arithmetic_intensity(flops, n_bytes)
    t_flops = time_flops(flops, accel.alpha_acc)
    t_mem = time_mem(n_bytes, accel.beta_acc)
    lower, upper = runtime_bounds(t_flops, t_mem)
    return {
        'accelerator': accel.name,
        'flops': flops,
        'bytes': n_bytes,
        'intensity': intensity,
        'ridge_intensity': accel.intensity,
        'listed_intensity': accel.reported_intensity,
        'regime': classify_regime(intensity, accel).value,
        'time_flops': t_flops,
        'time_mem': t_mem,
        'runtime_lower': lower,
        'runtime_upper': upper,
        'attainable_flops_per_s': min(accel.alpha_acc, accel.beta_acc * intensity),
    }


@dataclass(frozen=True)
class LatencyMeasurement:
    """One pre-averaged latency measurement of a configuration."""

    config_id: str
    metric: Metric
    B: int
    T_p: int
    seconds: float

    def __post_init__(self):
        object.__setattr__(self, 'metric', Metric.parse(self.metric))
        if not self.seconds > 0:
            raise DataError(f'latency must be > 0 seconds, got {self.seconds!r}')


@dataclass(frozen=True)
class RuntimeFit:
    """t = cost / rate_eff + epsilon (+ batch_const * B)."""

    mode: Regime
    rate_eff: float
    epsilon: float
    batch_const: float | None = None
    residual_rms: float = 0.0
    n_points: int = 0
    epsilon_clamped: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'mode', Regime(self.mode))

    def predict(self, cost, B=1):
        return cost / self.rate_eff + self.epsilon + (self.batch_const or 0.0) * B

    def to_dict(self):
        data = asdict(self)
        data['mode'] = self.mode.value
        return data

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


def _solve(cost, batch, seconds, with_batch, with_epsilon):
    # columns scaled to unit max
    columns = [cost]
    if with_epsilon:
        columns.append(np.ones_like(cost))
    if with_batch:
        columns.append(batch)
    design = np.column_stack(columns)
    scale = np.abs(design).max(axis=0)
    scale[scale == 0] = 1.0
    coef, _, rank, _ = np.linalg.lstsq(design / scale, seconds, rcond=None)
    if rank < design.shape[1]:
        raise InsufficientDataError('runtime measurements do not determine the fit '
                                    '(rank deficient design)')
    coef = coef / scale
    residuals = seconds - design @ coef
    values = list(coef)
    slope = values.pop(0)
    epsilon = values.pop(0) if with_epsilon else 0.0
    batch_const = values.pop(0) if with_batch else None
    return slope, epsilon, batch_const, float(np.sqrt(np.mean(residuals ** 2)))


def fit_runtime(measurements, cost_fn, mode, batch_const=False):
    """
    Fit an effective rate and overhead to latency measurements.

    Args:
        measurements: LatencyMeasurements of one stage.
        cost_fn: maps a measurement to its FLOPs (compute bound) or bytes
            (memory bound).
        mode: Regime of the fit.
        batch_const: add a per-sequence constant, for Transformer step times.

    Returns:
        RuntimeFit. A negative overhead is clamped to zero and the remaining
        terms refitted.
    """
    mode = Regime(mode)
    measurements = list(measurements)
    cost = np.array([float(cost_fn(m)) for m in measurements])
    if len(measurements) < 3 or len(np.unique(cost)) < 2:
        raise InsufficientDataError('runtime fit needs at least 3 measurements spanning 2 '
                                    'distinct cost values')
    batch = np.array([float(m.B) for m in measurements])
    seconds = np.array([float(m.seconds) for m in measurements])
    slope, epsilon, const, rms = _solve(cost, batch, seconds, batch_const, True)
    clamped = False
    if epsilon < 0:
        logger.warning(f'Fitted overhead {epsilon:.3e} s is negative; clamping to 0')
        slope, epsilon, const, rms = _solve(cost, batch, seconds, batch_const, False)
        clamped = True
    if not slope > 0:
        raise NegativeRateError(f'fitted time per unit cost {slope:.3e} is not positive')
    fit = RuntimeFit(mode=mode, rate_eff=float(1.0 / slope), epsilon=float(epsilon),
                     batch_const=None if const is None else float(const), residual_rms=rms,
                     n_points=len(measurements), epsilon_clamped=clamped)
    logger.info(f'Runtime fit ({mode.value}): rate {fit.rate_eff:.4g}, '
                f'epsilon {fit.epsilon:.4g} s, rms {rms:.3g} s')
    return fit


def prefill_flops(config, B, T_p, factors=DEFAULT_FACTORS):
    """FLOPs of prefilling B prompts of length T_p."""
    return flops_model_forward(config, Workload(B=B, T_p=T_p, mode=WorkloadMode.PREFILL),
                               factors).total


def step_bytes(config, B, T_p, widths=DEFAULT_WIDTHS, weight_reload_per_batch=0):
    """Bytes of the first generation step after a prompt of length T_p."""
    workload = Workload(B=B, T_p=T_p, T_g=1, t_g=1, mode=WorkloadMode.GEN_STEP)
    return bytes_model(config, workload, widths, weight_reload_per_batch).total


def ttft_cost_fn(configs, factors=DEFAULT_FACTORS):
    """Cost function for TTFT fits; ``configs`` maps config_id to ArchConfig."""
    def cost(measurement):
        return prefill_flops(_lookup(configs, measurement), measurement.B, measurement.T_p,
                             factors)
    return cost


def step_time_cost_fn(configs, widths=DEFAULT_WIDTHS):
    """Cost function for step-time fits; ``configs`` maps config_id to ArchConfig."""
    def cost(measurement):
        return step_bytes(_lookup(configs, measurement), measurement.B, measurement.T_p,
                          widths)
    return cost


def _lookup(configs, measurement):
    try:
        return configs[measurement.config_id]
    except KeyError:
        raise DataError(f'no architecture config for config_id {measurement.config_id!r}')


def predict_ttft(config, B, T_p, fit, factors=DEFAULT_FACTORS):
    if fit.mode is not Regime.COMPUTE_BOUND:
        raise ModeMismatchError('TTFT prediction needs a compute-bound runtime fit')
    return fit.predict(prefill_flops(config, B, T_p, factors), B=B)


def predict_step_time(config, B, T_p, fit, widths=DEFAULT_WIDTHS):
    if fit.mode is not Regime.MEMORY_BOUND:
        raise ModeMismatchError('step time prediction needs a memory-bound runtime fit')
    return fit.predict(step_bytes(config, B, T_p, widths), B=B)


def hardware_utilization(fit, accel):
    """Return the fitted effective rate as a fraction of the accelerator peak."""
    peak = accel.alpha_acc if fit.mode is Regime.COMPUTE_BOUND else accel.beta_acc
    utilization = fit.rate_eff / peak
    if utilization > 1:
        logger.warning(f'Effective rate {fit.rate_eff:.4g} exceeds the {accel.name} peak '
                       f'{peak:.4g} (utilization {utilization:.2f})')
    return utilization
