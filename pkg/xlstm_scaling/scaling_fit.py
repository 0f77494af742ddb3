"""
Scaling-law fits over training-run records.

Covers the parametric loss surface L(N, D) = E + (A N^-alpha + B D^-beta)^gamma
fitted with a Huber objective on log residuals, IsoFLOP parabolas, log-log
power laws, per-ratio overtraining laws and the loss/compute Pareto frontier.
"""

from dataclasses import asdict, dataclass
from functools import partial
from itertools import product
import logging
import multiprocessing
import os

import numpy as np
from scipy.optimize import minimize

from xlstm_scaling.arch_accounting import ArchKind
from xlstm_scaling.errors import (
    DataError,
    DegenerateFitError,
    InsufficientDataError,
    NoConvergenceError,
)

logger = logging.getLogger(__name__)

DEFAULT_HUBER_DELTA = 1e-3
DEFAULT_M_TOLERANCE = 0.02
MIN_SURFACE_RUNS = 8

# (lower, upper) per parameter, in optimizer order
FIT_BOUNDS = {
    'log_a': (-5.0, 30.0),
    'log_b': (-5.0, 30.0),
    'log_e': (-2.0, 2.0),
    'alpha': (0.0, 2.0),
    'beta': (0.0, 2.0),
    'gamma': (0.01, 3.0),
}
OPTIMIZER_OPTIONS = {'ftol': 1e-12, 'gtol': 1e-9, 'maxiter': 10000}


@dataclass(frozen=True)
class RunRecord:
    """One training run; ``M`` is derived as D / N."""

    N: float
    D: float
    T_ctx: int
    C: float
    loss: float
    kind: ArchKind
    m_reported: float | None = None

    def __post_init__(self):
        if not isinstance(self.kind, ArchKind):
            try:
                object.__setattr__(self, 'kind', ArchKind(self.kind))
            except ValueError:
                raise DataError(f'unknown model kind {self.kind!r}')

    @property
    def M(self):
        return self.D / self.N

    def violations(self):
        found = [f'{name} must be > 0, got {getattr(self, name)!r}'
                 for name in ('N', 'D', 'C', 'loss')
                 if not getattr(self, name) > 0]
        if self.T_ctx is not None and not self.T_ctx > 0:
            found.append(f'T_ctx must be > 0, got {self.T_ctx!r}')
        if not found and self.m_reported is not None:
            if abs(self.m_reported - self.M) > 1e-9 * abs(self.M):
                found.append(f'M={self.m_reported!r} inconsistent with D/N={self.M!r}')
        return found

    def to_dict(self):
        data = asdict(self)
        data['kind'] = self.kind.value
        data['M'] = self.M
        del data['m_reported']
        return data


@dataclass(frozen=True)
class LossSurfaceFit:
    """Fitted loss surface; E, A and B are stored as natural logs."""

    log_e: float
    log_a: float
    log_b: float
    alpha: float
    beta: float
    gamma: float
    huber_delta: float = DEFAULT_HUBER_DELTA
    fit_mse: float = 0.0
    n_runs: int = 0
    converged_starts: int = 0
    gamma_frozen: bool = False

    @property
    def E(self):
        return float(np.exp(self.log_e))

    @property
    def A(self):
        return float(np.exp(self.log_a))

    @property
    def B(self):
        return float(np.exp(self.log_b))

    def predict(self, N, D):
        log_n = np.log(np.asarray(N, dtype=float))
        log_d = np.log(np.asarray(D, dtype=float))
        inner = np.logaddexp(self.log_a - self.alpha * log_n, self.log_b - self.beta * log_d)
        loss = np.exp(self.log_e) + np.exp(self.gamma * inner)
        return float(loss) if np.ndim(loss) == 0 else loss

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class PowerLawFit:
    """y = coefficient * x ** exponent, fitted in log10 space."""

    coefficient: float
    exponent: float
    r_squared: float
    n_points: int = 0

    @property
    def eta(self):
        """Decay exponent of a loss-vs-compute law, L = lambda * C ** -eta."""
        return -self.exponent

    def predict(self, x):
        y = self.coefficient * np.asarray(x, dtype=float) ** self.exponent
        return float(y) if np.ndim(y) == 0 else y

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class ParabolaFit:
    """Quadratic loss = c2 u**2 + c1 u + c0 over u = log10(x)."""

    c2: float
    c1: float
    c0: float
    optimum_x: float | None
    optimum_loss: float | None
    interior: bool
    x_min: float = 0.0
    x_max: float = 0.0
    n_points: int = 0

    def predict(self, x):
        u = np.log10(np.asarray(x, dtype=float))
        y = (self.c2 * u + self.c1) * u + self.c0
        return float(y) if np.ndim(y) == 0 else y

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)


@dataclass(frozen=True)
class InitGrid:
    """Optimizer starting values; the starts are their Cartesian product."""

    log_a: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    log_b: tuple = (0.0, 5.0, 10.0, 15.0, 20.0)
    log_e: tuple = (-1.0, -0.5, 0.0, 0.5, 1.0)
    alpha: tuple = (0.0, 0.2, 0.5, 1.0)
    beta: tuple = (0.0, 0.2, 0.5, 1.0)
    gamma: tuple = (0.0, 0.5, 1.0, 1.5)

    def points(self, freeze_gamma=False):
        gammas = (1.0,) if freeze_gamma else self.gamma
        return [tuple(float(v) for v in p) for p in
                product(self.log_a, self.log_b, self.log_e, self.alpha, self.beta, gammas)]

    @property
    def size(self):
        return (len(self.log_a) * len(self.log_b) * len(self.log_e) * len(self.alpha)
                * len(self.beta) * len(self.gamma))


DEFAULT_INIT_GRID = InitGrid()


def _huber(residuals, delta):
    abs_r = np.abs(residuals)
    return np.where(abs_r <= delta, 0.5 * residuals ** 2, delta * (abs_r - 0.5 * delta))


def _surface_log_pred(params, log_n, log_d):
    log_a, log_b, log_e, alpha, beta, gamma = params
    a1 = log_a - alpha * log_n
    a2 = log_b - beta * log_d
    s = np.logaddexp(a1, a2)
    v = gamma * s
    return np.logaddexp(log_e, v), a1, a2, s, v


def _surface_objective(params, log_n, log_d, log_loss, delta, freeze_gamma):
    """Huber loss of log residuals and its analytic gradient."""
    full = np.append(params, 1.0) if freeze_gamma else params
    log_a, log_b, log_e, alpha, beta, gamma = full
    lp, a1, a2, s, v = _surface_log_pred(full, log_n, log_d)
    r = lp - log_loss
    w_e = np.exp(log_e - lp)
    w_p = np.exp(v - lp)
    q1 = np.exp(a1 - s)
    q2 = np.exp(a2 - s)
    dr = np.clip(r, -delta, delta)
    grad = np.array([
        np.sum(dr * w_p * gamma * q1),
        np.sum(dr * w_p * gamma * q2),
        np.sum(dr * w_e),
        -np.sum(dr * w_p * gamma * q1 * log_n),
        -np.sum(dr * w_p * gamma * q2 * log_d),
        np.sum(dr * w_p * s),
    ])
    if freeze_gamma:
        grad = grad[:5]
    return float(np.sum(_huber(r, delta))), grad


def _optimize_single_init(indexed_init, log_n, log_d, log_loss, delta, freeze_gamma):
    """
    Run one bounded L-BFGS-B fit from a grid start.

    Module level so a process pool can pickle it.

    Returns:
        (mse, grid index, parameters) or None when the start did not converge.
    """
    index, init = indexed_init
    names = list(FIT_BOUNDS)[:5] if freeze_gamma else list(FIT_BOUNDS)
    bounds = [FIT_BOUNDS[name] for name in names]
    x0 = np.clip(np.array(init[:len(names)]), [b[0] for b in bounds], [b[1] for b in bounds])
    try:
        result = minimize(_surface_objective, x0, args=(log_n, log_d, log_loss, delta,
                                                        freeze_gamma),
                          jac=True, method='L-BFGS-B', bounds=bounds,
                          options=OPTIMIZER_OPTIONS)
    except (ValueError, FloatingPointError) as exc:
        logger.debug(f'start {index} failed: {exc}')
        return None
    # status 1 means the iteration budget ran out
    if result.status == 1 or not np.isfinite(result.fun) or not np.all(np.isfinite(result.x)):
        logger.debug(f'start {index} did not converge: {result.message}')
        return None
    params = np.append(result.x, 1.0) if freeze_gamma else result.x
    lp = _surface_log_pred(params, log_n, log_d)[0]
    mse = float(np.mean((lp - log_loss) ** 2))
    return mse, index, tuple(float(p) for p in params)


def fit_loss_surface(runs, huber_delta=DEFAULT_HUBER_DELTA, init_grid=DEFAULT_INIT_GRID,
                     freeze_gamma=False, parallel=False, workers=None):
    """
    Fit the parametric loss surface to run records.

    Every start of ``init_grid`` is refined with bounded L-BFGS-B on the
    Huber loss of natural-log residuals. Among converged starts the lowest
    mean squared log residual wins; ties go to the earlier grid point, so the
    result does not depend on evaluation order.

    Args:
        runs: RunRecords of one kind (at least 8, with 2 distinct N and 2 distinct D).
        huber_delta: Huber threshold on log residuals.
        init_grid: InitGrid of starting values.
        freeze_gamma: fix gamma to 1 (Chinchilla form).
        parallel: spread the starts over a process pool.
        workers: pool size, defaults to the CPU count.

    Returns:
        LossSurfaceFit of the selected start.
    """
    runs = list(runs)
    _check_single_kind(runs)
    if len(runs) < MIN_SURFACE_RUNS:
        raise InsufficientDataError(
            f'loss surface fit needs at least {MIN_SURFACE_RUNS} runs, got {len(runs)}')
    N = np.array([r.N for r in runs], dtype=float)
    D = np.array([r.D for r in runs], dtype=float)
    loss = np.array([r.loss for r in runs], dtype=float)
    if len(np.unique(N)) < 2 or len(np.unique(D)) < 2:
        raise InsufficientDataError('loss surface fit needs at least 2 distinct N and 2 '
                                    'distinct D')
    starts = list(enumerate(init_grid.points(freeze_gamma)))
    optimize_fn = partial(_optimize_single_init, log_n=np.log(N), log_d=np.log(D),
                          log_loss=np.log(loss), delta=huber_delta,
                          freeze_gamma=freeze_gamma)
    logger.info(f'Fitting loss surface to {len(runs)} runs from {len(starts)} starts')
    if parallel:
        ctx = multiprocessing.get_context('fork')
        with ctx.Pool(workers or os.cpu_count() or 1) as pool:
            results = [res for res in pool.imap_unordered(optimize_fn, starts, chunksize=16)
                       if res is not None]
    else:
        results = [res for res in map(optimize_fn, starts) if res is not None]
    if not results:
        raise NoConvergenceError(f'none of {len(starts)} loss surface starts converged')
    mse, index, params = min(results, key=lambda res: (res[0], res[1]))
    logger.info(f'Selected start {index} with log-residual MSE {mse:.3e} '
                f'({len(results)}/{len(starts)} converged)')
    log_a, log_b, log_e, alpha, beta, gamma = params
    return LossSurfaceFit(log_e=log_e, log_a=log_a, log_b=log_b, alpha=alpha, beta=beta,
                          gamma=gamma, huber_delta=huber_delta, fit_mse=mse,
                          n_runs=len(runs), converged_starts=len(results),
                          gamma_frozen=freeze_gamma)


def predict_loss(fit, N, D):
    """Loss predicted by a fitted surface at model size N and data size D."""
    return fit.predict(N, D)


def fit_isoflop_profile(points):
    """
    Fit a parabola in log10(x) to one IsoFLOP profile.

    Args:
        points: iterable of (x, loss) with x the model size or token count.

    Returns:
        ParabolaFit. A non-convex profile comes back with interior=False and
        no optimum.
    """
    points = list(points)
    x = np.array([p[0] for p in points], dtype=float)
    y = np.array([p[1] for p in points], dtype=float)
    if np.any(x <= 0):
        raise DataError('IsoFLOP profile needs positive x values')
    if len(np.unique(x)) < 3:
        raise InsufficientDataError(
            f'IsoFLOP profile needs at least 3 distinct x values, got {len(np.unique(x))}')
    u = np.log10(x)
    center = u.mean()
    du = u - center
    design = np.column_stack([du ** 2, du, np.ones_like(du)])
    (b2, b1, b0), _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise DegenerateFitError('IsoFLOP design is collinear in the quadratic basis')
    c2 = b2
    c1 = b1 - 2 * b2 * center
    c0 = b2 * center ** 2 - b1 * center + b0
    half_span = max(np.abs(du).max(), 1e-12)
    curvature_tol = 1e-10 * (np.abs(y).max() + 1.0) / half_span ** 2
    optimum_x = optimum_loss = None
    interior = False
    if c2 > curvature_tol:
        u_star = center - b1 / (2 * b2)
        optimum_x = float(10 ** u_star)
        optimum_loss = float(b0 - b1 ** 2 / (4 * b2))
        interior = bool(u.min() <= u_star <= u.max())
    else:
        logger.warning('IsoFLOP profile is not convex; no optimum reported')
    return ParabolaFit(c2=float(c2), c1=float(c1), c0=float(c0), optimum_x=optimum_x,
                       optimum_loss=optimum_loss, interior=interior,
                       x_min=float(x.min()), x_max=float(x.max()), n_points=len(points))


def fit_power_law(xs, ys):
    """
    Ordinary least squares of log10(y) on log10(x).

    Returns:
        PowerLawFit with coefficient 10**intercept and r_squared in log space.
    """
    x = np.asarray(list(xs), dtype=float)
    y = np.asarray(list(ys), dtype=float)
    if x.shape != y.shape:
        raise DataError(f'power law needs as many y as x values ({len(x)} vs {len(y)})')
    if np.any(x <= 0) or np.any(y <= 0):
        raise DataError('power law fit needs strictly positive x and y')
    if len(np.unique(x)) < 2:
        raise InsufficientDataError('power law fit needs at least 2 distinct x values')
    lx, ly = np.log10(x), np.log10(y)
    mx, my = lx.mean(), ly.mean()
    dx = lx - mx
    slope = float(np.dot(dx, ly - my) / np.dot(dx, dx))
    intercept = my - slope * mx
    residuals = ly - (intercept + slope * lx)
    ss_res = float(np.dot(residuals, residuals))
    ss_tot = float(np.dot(ly - my, ly - my))
    r_squared = 1.0 if ss_tot == 0 else min(max(1.0 - ss_res / ss_tot, 0.0), 1.0)
    return PowerLawFit(coefficient=float(10 ** intercept), exponent=slope,
                       r_squared=r_squared, n_points=len(x))


def bucket_by_value(items, key, tolerance=DEFAULT_M_TOLERANCE):
    """
    Group items whose key values agree within a relative tolerance.

    Items are sorted by key; a bucket opens at its smallest value and takes
    every following item within ``tolerance`` of it.

    Returns:
        List of (label, items) sorted by label, the label being the median key.
    """
    ordered = sorted(items, key=key)
    buckets = []
    for item in ordered:
        value = key(item)
        if buckets and abs(value - buckets[-1][0]) <= tolerance * abs(buckets[-1][0]):
            buckets[-1][1].append(item)
        else:
            buckets.append((value, [item]))
    return [(float(np.median([key(i) for i in members])), members)
            for _, members in buckets]


def bucket_by_ratio(runs, tolerance=DEFAULT_M_TOLERANCE):
    """Group runs by token/parameter ratio M."""
    return bucket_by_value(runs, lambda r: r.M, tolerance)


def _check_single_kind(runs):
    kinds = sorted({r.kind.value for r in runs})
    if len(kinds) > 1:
        raise DataError(f'runs mix model kinds ({", ".join(kinds)}); fit one kind at a time')


def _select_kind(runs, kind):
    if kind is None:
        runs = list(runs)
        _check_single_kind(runs)
        return runs
    kind = ArchKind(kind)
    return [r for r in runs if r.kind is kind]


def fit_overtraining(runs, tolerance=DEFAULT_M_TOLERANCE, kind=None):
    """
    Fit L = lambda * C ** -eta separately for every token/parameter ratio.

    Args:
        runs: RunRecords; runs of more than one kind need ``kind`` to pick one.
        tolerance: relative tolerance of the M buckets.

    Returns:
        Dict from bucket M to PowerLawFit, ordered by M. Buckets with fewer
        than two distinct compute values are skipped with a warning.
    """
    fits = {}
    for ratio, members in bucket_by_ratio(_select_kind(runs, kind), tolerance):
        if len({r.C for r in members}) < 2:
            logger.warning(f'Skipping M={ratio:g}: {len(members)} run(s), need 2 distinct C')
            continue
        fits[ratio] = fit_power_law([r.C for r in members], [r.loss for r in members])
    return fits


@dataclass(frozen=True)
class IsoflopOptimum:
    """Parabola optimum of the runs sharing one compute budget."""

    H: float
    variable: str
    parabola: ParabolaFit
    n_runs: int = 0

    def to_dict(self):
        return {'H': self.H, 'variable': self.variable, 'n_runs': self.n_runs,
                'parabola': self.parabola.to_dict()}


def isoflop_optima(runs, variable='N', tolerance=DEFAULT_M_TOLERANCE, kind=None):
    """
    Bucket runs by compute budget and fit one IsoFLOP parabola per budget.

    Args:
        runs: RunRecords; runs of more than one kind need ``kind`` to pick one.
        variable: 'N' for model size profiles or 'D' for token profiles.
        tolerance: relative tolerance of the compute buckets.

    Returns:
        IsoflopOptimum per budget with at least three distinct x values,
        sorted by budget.
    """
    if variable not in ('N', 'D'):
        raise DataError(f"IsoFLOP variable must be 'N' or 'D', got {variable!r}")
    optima = []
    for budget, members in bucket_by_value(_select_kind(runs, kind), lambda r: r.C,
                                           tolerance):
        xs = [getattr(r, variable) for r in members]
        if len(set(xs)) < 3:
            logger.warning(f'Skipping budget H={budget:.3g}: fewer than 3 distinct {variable}')
            continue
        parabola = fit_isoflop_profile(zip(xs, [r.loss for r in members]))
        optima.append(IsoflopOptimum(H=budget, variable=variable, parabola=parabola,
                                     n_runs=len(members)))
    return optima


def pareto_frontier(runs):
    """
    Return the runs not dominated in (compute, loss), both minimized, by compute.

    Runs with identical compute and loss are all kept.
    """
    ordered = sorted(runs, key=lambda r: (r.C, r.loss))
    frontier = []
    best = float('inf')
    i = 0
    while i < len(ordered):
        j = i
        while j < len(ordered) and ordered[j].C == ordered[i].C:
            j += 1
        group_best = ordered[i].loss
        if group_best < best:
            frontier.extend(r for r in ordered[i:j] if r.loss == group_best)
            best = group_best
        i = j
    return frontier

