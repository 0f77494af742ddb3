"""
Planning decisions from fitted scaling laws.

Compute-optimal allocations for a budget, Token/Param experiment grids and
comparisons of two model families at a fixed budget or a fixed loss.
"""

from dataclasses import dataclass, field
import logging
import math

from scipy.optimize import brentq

from xlstm_scaling.arch_accounting import count_params
from xlstm_scaling.errors import InvalidConfigError, NoConvergenceError
from xlstm_scaling.flop_counting import DEFAULT_FACTORS, training_compute

logger = logging.getLogger(__name__)

DEFAULT_TOKEN_PARAM_RATIOS = (22, 44, 110, 220, 550, 1100, 2200)
DEFAULT_CONTEXT_LENGTH = 8192
# log10 of the budget search interval for fixed-loss comparisons
DEFAULT_LOG10_BUDGET_RANGE = (12.0, 32.0)


@dataclass
class ConfigTable:
    """Named list of architecture configs with their exact parameter counts."""

    name: str
    configs: list
    context_length: int | None = None
    listed_millions: dict = field(default_factory=dict)

    def __post_init__(self):
        self._params = [count_params(config).total for config in self.configs]

    def params(self, config):
        return self._params[self.configs.index(config)]

    def nearest(self, N, tolerance=None):
        """
        Config whose parameter count is closest to N in log space.

        Args:
            N: target parameter count.
            tolerance: optional maximum relative deviation.

        Returns:
            The ArchConfig, or None when the table is empty or nothing lies
            within ``tolerance``. Ties go to the earlier table row.
        """
        if not self.configs or not N > 0:
            return None
        distances = [abs(math.log(p / N)) for p in self._params]
        best = min(range(len(distances)), key=lambda i: (distances[i], i))
        if tolerance is not None and abs(self._params[best] / N - 1) > tolerance:
            return None
        return self.configs[best]

    def __len__(self):
        return len(self.configs)


@dataclass
class AllocationPlan:
    """Compute-optimal model size and token count for one budget H."""

    H: float
    N_star: float
    D_star: float
    source_fits: dict
    config: object = None
    realized_C: float | None = None

    @property
    def M_star(self):
        return self.D_star / self.N_star

    @property
    def deviation(self):
        """Relative deviation of the realized compute from H."""
        if self.realized_C is None:
            return None
        return float(self.realized_C) / self.H - 1

    def to_dict(self):
        data = {
            'H': self.H,
            'N_star': self.N_star,
            'D_star': self.D_star,
            'M_star': self.M_star,
            'source_fits': self.source_fits,
        }
        if self.config is not None:
            data['config'] = self.config.to_dict()
            data['realized_C'] = float(self.realized_C)
            data['deviation'] = self.deviation
        return data


def compute_optimal_alloc(fit_N, fit_D, H, config_table=None, T=DEFAULT_CONTEXT_LENGTH,
                          factors=DEFAULT_FACTORS, tolerance=None):
    """
    Allocate a compute budget with the N*(H) and D*(H) power laws.

    Args:
        fit_N: PowerLawFit of optimal parameters against budget.
        fit_D: PowerLawFit of optimal tokens against budget.
        H: compute budget in FLOPs.
        config_table: optional ConfigTable to resolve N* to an architecture
            and report the compute that architecture actually needs.
        T: training context length for the realized compute.

    Returns:
        AllocationPlan; the two laws need not compose to exactly H.
    """
    if not H > 0:
        raise InvalidConfigError(f'compute budget must be > 0, got {H!r}')
    plan = AllocationPlan(H=H, N_star=fit_N.predict(H), D_star=fit_D.predict(H),
                          source_fits={'N': fit_N.to_dict(), 'D': fit_D.to_dict()})
    if config_table is not None:
        config = config_table.nearest(plan.N_star, tolerance)
        if config is None:
            logger.warning(f'No config in {config_table.name} for N*={plan.N_star:.4g}')
        elif plan.D_star < T:
            logger.warning(f'D*={plan.D_star:.4g} is shorter than one {T}-token sequence; '
                           'no realized compute')
        else:
            plan.config = config
            plan.realized_C = training_compute(config, T, plan.D_star, factors)
    return plan


@dataclass(frozen=True)
class GridPoint:
    N: float
    M: float
    D: float
    C: float | None = None
    config_name: str | None = None

    def to_dict(self):
        return {'N': self.N, 'M': self.M, 'D': self.D,
                'C': None if self.C is None else float(self.C),
                'config': self.config_name}


def plan_token_param_grid(N_list, M_list=DEFAULT_TOKEN_PARAM_RATIOS, config_lookup=None,
                          factors=DEFAULT_FACTORS, T=DEFAULT_CONTEXT_LENGTH):
    """
    Cross every model size with every token/parameter ratio.

    Args:
        N_list: model sizes in parameters.
        M_list: token/parameter ratios.
        config_lookup: ConfigTable or callable N -> ArchConfig or None.
        factors: CostFactors for the training compute.
        T: training context length.

    Returns:
        GridPoints in (N, M) order with D = M * N and, where an architecture
        resolves, the training compute C.
    """
    if any(not n > 0 for n in N_list) or any(not m > 0 for m in M_list):
        raise InvalidConfigError('grid entries must be positive')
    lookup = config_lookup.nearest if isinstance(config_lookup, ConfigTable) else config_lookup
    grid = []
    for N in N_list:
        config = lookup(N) if lookup is not None else None
        if lookup is not None and config is None:
            logger.warning(f'No architecture resolves N={N:.4g}; compute left empty')
        for M in M_list:
            D = M * N
            C = None
            if config is not None and D >= T:
                C = training_compute(config, T, D, factors)
            elif config is not None:
                logger.warning(f'D={D:.4g} for N={N:.4g}, M={M:g} is shorter than T={T}; '
                               'compute left empty')
            grid.append(GridPoint(N=N, M=M, D=D, C=C,
                                  config_name=None if config is None else config.name))
    return grid


@dataclass(frozen=True)
class BudgetComparison:
    H: float
    loss_a: float
    loss_b: float

    @property
    def margin(self):
        """Loss of b minus loss of a; positive means a is better."""
        return self.loss_b - self.loss_a

    @property
    def winner(self):
        if self.margin > 0:
            return 'a'
        return 'b' if self.margin < 0 else 'tie'

    def to_dict(self):
        return {'H': self.H, 'loss_a': self.loss_a, 'loss_b': self.loss_b,
                'margin': self.margin, 'winner': self.winner}


def compare_at_budget(surface_a, surface_b, H, alloc_a, alloc_b):
    """Predict the losses of two families at their own allocations for budget H."""
    return BudgetComparison(H=H,
                            loss_a=surface_a.predict(alloc_a.N_star, alloc_a.D_star),
                            loss_b=surface_b.predict(alloc_b.N_star, alloc_b.D_star))


def compute_for_loss(surface, fit_N, fit_D, target_loss,
                     log10_range=DEFAULT_LOG10_BUDGET_RANGE):
    """
    Budget at which the compute-optimal allocation reaches a target loss.

    Solves surface(N*(H), D*(H)) = target_loss for H by bracketing root
    finding over log10(H).
    """
    def gap(log_h):
        H = 10 ** log_h
        return surface.predict(fit_N.predict(H), fit_D.predict(H)) - target_loss

    lo, hi = log10_range
    if gap(lo) * gap(hi) > 0:
        raise NoConvergenceError(
            f'target loss {target_loss} is not reached between H=1e{lo:g} and H=1e{hi:g}')
    return 10 ** brentq(gap, lo, hi, xtol=1e-12)


@dataclass(frozen=True)
class LossComparison:
    target_loss: float
    H_a: float
    H_b: float

    @property
    def compute_ratio(self):
        """Compute family b needs per unit compute of family a."""
        return self.H_b / self.H_a

    @property
    def winner(self):
        if self.H_a < self.H_b:
            return 'a'
        return 'b' if self.H_b < self.H_a else 'tie'

    def to_dict(self):
        return {'target_loss': self.target_loss, 'H_a': self.H_a, 'H_b': self.H_b,
                'compute_ratio': self.compute_ratio, 'winner': self.winner}


def compare_at_loss(surface_a, fits_a, surface_b, fits_b, target_loss):
    """
    Compute each family needs to reach ``target_loss``.

    ``fits_a`` and ``fits_b`` are (fit_N, fit_D) pairs.
    """
    return LossComparison(target_loss=target_loss,
                          H_a=compute_for_loss(surface_a, *fits_a, target_loss),
                          H_b=compute_for_loss(surface_b, *fits_b, target_loss))
