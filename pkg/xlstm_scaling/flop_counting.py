"""
FLOP counts for the mLSTM and Transformer models.

Every count is a closed form over the architecture dimensions and the
per-operation cost factors. Integer and Fraction inputs stay exact; a float
factor (the default causal factor 0.5) turns results into floats.
"""

from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from fractions import Fraction
import logging

from xlstm_scaling.arch_accounting import ArchKind, check_config, exact
from xlstm_scaling.errors import InvalidConfigError, ModeMismatchError

logger = logging.getLogger(__name__)

DEFAULT_BACKWARD_MULTIPLIER = 3
CHUNK_REMAINDER_POLICY = 'partial chunk costed at its own length'


@dataclass(frozen=True)
class CostFactors:
    """FLOPs charged per element for non-matmul operations."""

    exp: float = 1
    log: float = 1
    sig: float = 1
    max: float = 1
    abs: float = 1
    swish: float = 1
    softmax: float = 5
    norm: float = 3
    causal: float = 0.5
    skip: float = 1

    def validate(self):
        violations = [f'cost factor {f.name} must be >= 0, got {getattr(self, f.name)!r}'
                      for f in fields(self) if getattr(self, f.name) < 0]
        if not 0 < self.causal <= 1:
            violations.append(f'causal factor must lie in (0, 1], got {self.causal!r}')
        if self.skip not in (0, 1):
            violations.append(f'skip factor must be 0 or 1, got {self.skip!r}')
        if violations:
            raise InvalidConfigError(violations)
        return self

    @property
    def elementwise_unit(self):
        """True when every elementwise factor used by the mLSTM cell equals 1."""
        return all(getattr(self, name) == 1 for name in ('exp', 'log', 'sig', 'max', 'abs'))

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfigError([f'unknown cost factor {name!r}' for name in unknown])
        return cls(**data).validate()

    def to_dict(self):
        return {name: float(value) if isinstance(value, Fraction) else value
                for name, value in asdict(self).items()}


DEFAULT_FACTORS = CostFactors()


class WorkloadMode(str, Enum):
    FORWARD = 'forward'
    TRAIN = 'train'
    PREFILL = 'prefill'
    GEN_STEP = 'gen_step'
    GEN_SEQ = 'gen_seq'

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        return cls(str(value).replace('-', '_'))

    @property
    def parallel(self):
        return self in (WorkloadMode.FORWARD, WorkloadMode.TRAIN, WorkloadMode.PREFILL)


@dataclass(frozen=True)
class Workload:
    """
    Batch and sequence shape of one counted workload.

    ``T`` is the sequence length of forward and train passes, ``T_p`` the
    prompt length of prefill and generation, ``T_g`` the number of generated
    tokens and ``t_g`` the index of the generation step being counted.
    """

    B: int = 1
    T: int = 0
    T_p: int = 0
    T_g: int = 1
    t_g: int = 1
    mode: WorkloadMode = WorkloadMode.FORWARD
    kind: ArchKind | None = None

    def __post_init__(self):
        object.__setattr__(self, 'mode', WorkloadMode.parse(self.mode))
        if self.kind is not None and not isinstance(self.kind, ArchKind):
            object.__setattr__(self, 'kind', ArchKind(self.kind))

    @property
    def seq_len(self):
        """Tokens per sequence processed in parallel (forward, train, prefill)."""
        return self.T_p if self.mode is WorkloadMode.PREFILL else self.T

    @property
    def tokens(self):
        """Tokens that pass through the backbone."""
        if self.mode.parallel:
            return self.B * self.seq_len
        if self.mode is WorkloadMode.GEN_STEP:
            return self.B
        return self.B * self.T_g

    def validate(self):
        violations = []
        if self.B < 1:
            violations.append(f'batch size B must be >= 1, got {self.B}')
        if self.T < 0 or self.T_p < 0:
            violations.append('sequence lengths T and T_p must be >= 0')
        if self.mode in (WorkloadMode.FORWARD, WorkloadMode.TRAIN) and self.T < 1:
            violations.append(f'{self.mode.value} needs T >= 1, got {self.T}')
        if self.mode is WorkloadMode.PREFILL and self.T_p < 1:
            violations.append(f'prefill needs T_p >= 1, got {self.T_p}')
        if not self.mode.parallel and self.T_g < 1:
            violations.append(f'generation needs T_g >= 1, got {self.T_g}')
        if self.mode is WorkloadMode.GEN_STEP and not 1 <= self.t_g <= self.T_g:
            violations.append(f'gen_step needs 1 <= t_g <= T_g, got t_g={self.t_g}, '
                              f'T_g={self.T_g}')
        if violations:
            raise InvalidConfigError(violations)
        return self

    def check_kind(self, config):
        if self.kind is not None and self.kind is not config.kind:
            raise ModeMismatchError(
                f'workload is for {self.kind.value} but config is {config.kind.value}')

    def to_dict(self):
        data = {'B': self.B, 'mode': self.mode.value}
        if self.mode.parallel:
            data['T' if self.mode is not WorkloadMode.PREFILL else 'T_p'] = self.seq_len
        else:
            data.update(T_p=self.T_p, T_g=self.T_g)
            if self.mode is WorkloadMode.GEN_STEP:
                data['t_g'] = self.t_g
        return data


@dataclass
class FlopBreakdown:
    """Forward FLOPs per component, plus the mode multiplier."""

    components: dict
    multiplier: int = 1
    metadata: dict = field(default_factory=dict)

    @property
    def forward_total(self):
        return exact(sum(self.components.values()))

    @property
    def total(self):
        return exact(self.multiplier * self.forward_total)

    def to_dict(self):
        return {
            'components': dict(self.components),
            'forward_total': self.forward_total,
            'total': self.total,
            'metadata': dict(self.metadata),
        }


def flops_linear(B, d_in, d_out):
    """FLOPs of a dense layer applied to B tokens."""
    return 2 * B * d_in * d_out


def _halved_triangle(n):
    # n(n+1)/2, exact for integers
    return n * (n + 1) // 2 if isinstance(n, int) else Fraction(n * (n + 1), 2)


def mlstm_chunk_terms(L, d_qk, d_hv, factors=DEFAULT_FACTORS):
    """
    Per-head FLOPs of one chunk of length L, row by row.

    The listed rows leave out 2*L*d_hv FLOPs that the published chunk total
    contains; they are returned under ``unlisted`` so the rows sum to it.
    """
    f = factors
    tri = _halved_triangle(L)
    return {
        'gates': 2 * L + tri + L * (1 + f.exp + f.log + f.sig) + 3 + f.max + f.exp,
        'numerator': 2 * d_qk * d_hv + 2 * L * d_qk * d_hv + L * d_qk,
        'denominator': 2 * d_qk + 2 * L * d_qk,
        'cumulative_forget_gates': tri + L * (f.log + f.sig),
        'gate_matrix': f.causal * (L * L * (3 + f.exp + f.max) + L * (1 + f.max)),
        'intra_outputs': f.causal * (2 * L * L * (d_qk + d_hv) + 3 * L * L),
        'inter_outputs': 2 * L * d_qk * d_hv + 3 * L * d_qk,
        'output_combination': 2 * L * d_hv + L * (1 + f.max + f.abs + f.exp),
        'unlisted': 2 * L * d_hv,
    }


def mlstm_chunk_flops(L, d_qk, d_hv, factors=DEFAULT_FACTORS):
    """Per-head FLOPs of one chunk; closed form when all elementwise factors are 1."""
    if not factors.elementwise_unit:
        return exact(sum(mlstm_chunk_terms(L, d_qk, d_hv, factors).values()))
    c = factors.causal
    return exact(L * L * c * (2 * (d_qk + d_hv) + 8) + L * L + 2 * L * c
                 + L * (4 * d_qk * d_hv + 6 * d_qk + 4 * d_hv + 13)
                 + (2 * d_qk * d_hv + 2 * d_qk + 5))


def flops_mlstm_chunkwise(config, T, factors=DEFAULT_FACTORS, chunk_size=None):
    """
    FLOPs of the chunkwise-parallel mLSTM cell for one sequence of T tokens.

    Args:
        config: xLSTM ArchConfig; its chunk_size is used unless overridden.
        T: sequence length.
        factors: CostFactors.
        chunk_size: optional chunk length L.

    Returns:
        n_head times the sum of per-chunk costs. A trailing partial chunk of
        T mod L tokens is costed with its own length.
    """
    L = config.chunk_size if chunk_size is None else chunk_size
    if T <= 0 or L <= 0:
        raise InvalidConfigError(f'chunkwise mLSTM needs T > 0 and L > 0, got T={T}, L={L}')
    n_full, rest = divmod(T, L)
    per_head = n_full * mlstm_chunk_flops(L, config.d_qk, config.d_hv, factors)
    if rest:
        per_head += mlstm_chunk_flops(rest, config.d_qk, config.d_hv, factors)
    return exact(config.n_head_q * per_head)


def mlstm_recurrent_terms(d_qk, d_hv, factors=DEFAULT_FACTORS):
    f = factors
    return {
        'gates': 4 + 2 * f.exp + f.log + f.sig + f.max,
        'memory_cell_update': 4 * d_qk * d_hv,
        'denominator_and_scale': 6 * d_qk + d_hv + 1 + f.abs + f.max,
        'output': 2 * d_hv * d_qk + d_qk,
    }


def flops_mlstm_recurrent(config, factors=DEFAULT_FACTORS):
    """FLOPs of one recurrent mLSTM step over all heads."""
    terms = mlstm_recurrent_terms(config.d_qk, config.d_hv, factors)
    return exact(config.n_head_q * sum(terms.values()))


def _attention_rate(config, factors):
    # a = 2 * F_causal * n_q * (d_qk + d_hv + F_sm / 2)
    return factors.causal * config.n_head_q * (2 * (config.d_qk + config.d_hv)
                                               + factors.softmax)


def flops_attention_prefill(config, T, factors=DEFAULT_FACTORS):
    """Self-attention FLOPs over all query heads for one sequence of T tokens."""
    return exact(_attention_rate(config, factors) * T * T)


def flops_attention_gen_step(config, T_p, t_g, factors=DEFAULT_FACTORS):
    """Self-attention FLOPs of the t_g-th generated token after a prompt of T_p."""
    return exact(_attention_rate(config, factors) * (T_p + t_g))


def flops_attention_gen_seq(config, T_p, T_g, factors=DEFAULT_FACTORS):
    """Self-attention FLOPs of generating T_g tokens after a prompt of T_p."""
    return exact(_attention_rate(config, factors) * (T_p * T_g + _halved_triangle(T_g)))


def backbone_flops_per_token(config, factors=DEFAULT_FACTORS):
    """
    Per-token FLOPs of everything except the sequence-mix cell.

    Returns:
        Mapping of component name to FLOPs for a single token; layer
        components are per layer, ``output_norm`` and ``unembedding`` once.
    """
    f = factors
    d, n = config.d_model, config.n_head_q
    d_qk, d_hv = config.d_qk, config.d_hv
    if config.kind is ArchKind.XLSTM:
        seq_mix = {
            'prenorm_skip': d * (f.skip + f.norm),
            'qkv': 2 * d * n * (2 * d_qk + d_hv),
            'input_forget_gates': 2 * d * n + 2 * n,
            'output_gate': 2 * d * n * d_hv + n * d_hv * f.sig,
            'output_norm': n * d_hv * f.norm,
            'output_projection': 2 * d * n * d_hv,
        }
        prefix = 'mlstm_layer'
    else:
        n_kv = config.kv_heads
        seq_mix = {
            'prenorm_skip': d * (f.skip + f.norm),
            'qkv': 2 * d * (d_qk * n + d_qk * n_kv + d_hv * n_kv),
            'output_projection': 2 * d * n * d_hv,
        }
        prefix = 'attention_layer'
    per_token = {f'{prefix}.{name}': value for name, value in seq_mix.items()}
    per_token.update({
        'feedforward.prenorm_skip': d * (f.skip + f.norm),
        'feedforward.mlps': 6 * d * config.d_ff,
        'feedforward.activations': config.d_ff * (1 + f.swish),
        'output_norm': d * f.norm,
        'unembedding': 2 * d * config.n_vocab,
    })
    return per_token


def seq_mix_flops_per_sequence(config, workload, factors=DEFAULT_FACTORS):
    """Sequence-mix FLOPs of one sequence in one layer, chosen by workload mode."""
    mode = workload.mode
    if config.kind is ArchKind.XLSTM:
        if mode.parallel:
            return flops_mlstm_chunkwise(config, workload.seq_len, factors)
        steps = 1 if mode is WorkloadMode.GEN_STEP else workload.T_g
        return exact(steps * flops_mlstm_recurrent(config, factors))
    if mode.parallel:
        return flops_attention_prefill(config, workload.seq_len, factors)
    if mode is WorkloadMode.GEN_STEP:
        return flops_attention_gen_step(config, workload.T_p, workload.t_g, factors)
    return flops_attention_gen_seq(config, workload.T_p, workload.T_g, factors)


def flops_model_forward(config, workload, factors=DEFAULT_FACTORS,
                        backward_multiplier=DEFAULT_BACKWARD_MULTIPLIER,
                        include_seq_mix=True):
    """
    Total model FLOPs of a workload, broken down by component.

    Args:
        config: ArchConfig of either kind.
        workload: Workload; train mode applies ``backward_multiplier``.
        factors: CostFactors.
        backward_multiplier: training FLOPs as a multiple of forward FLOPs.
        include_seq_mix: set False to count the backbone only.

    Returns:
        FlopBreakdown with embeddings reported at zero FLOPs.
    """
    check_config(config)
    factors.validate()
    workload.validate()
    workload.check_kind(config)
    tokens = workload.tokens
    components = {'embeddings': 0}
    for name, per_token in backbone_flops_per_token(config, factors).items():
        per_layer = config.n_layer if '.' in name else 1
        components[name] = exact(per_layer * tokens * per_token)
    if include_seq_mix:
        cell = 'mlstm_cell' if config.kind is ArchKind.XLSTM else 'attention'
        components[cell] = exact(config.n_layer * workload.B
                                 * seq_mix_flops_per_sequence(config, workload, factors))
    multiplier = backward_multiplier if workload.mode is WorkloadMode.TRAIN else 1
    metadata = {
        'kind': config.kind.value,
        'workload': workload.to_dict(),
        'tokens': tokens,
        'backward_multiplier': multiplier,
        'skip_factor': factors.skip,
        'include_seq_mix': include_seq_mix,
    }
    if config.kind is ArchKind.XLSTM and workload.mode.parallel:
        metadata['chunk_size'] = config.chunk_size
        metadata['chunk_remainder'] = CHUNK_REMAINDER_POLICY
    return FlopBreakdown(components=components, multiplier=multiplier, metadata=metadata)


def training_compute(config, T, D, factors=DEFAULT_FACTORS,
                     backward_multiplier=DEFAULT_BACKWARD_MULTIPLIER, include_seq_mix=True):
    """
    Return the training compute C in FLOPs for D tokens at context length T.

    Args:
        config: ArchConfig.
        T: training context length.
        D: total training tokens; need not be a multiple of T.
        factors: CostFactors.
        backward_multiplier: training-to-forward FLOP ratio.
        include_seq_mix: count the attention or mLSTM cell FLOPs.

    Returns:
        (D / T) sequences times forward FLOPs per sequence times the multiplier.
    """
    if T < 1 or D < T:
        raise InvalidConfigError(f'training compute needs D >= T >= 1, got D={D}, T={T}')
    forward = flops_model_forward(config, Workload(B=1, T=T, mode=WorkloadMode.FORWARD),
                                  factors, include_seq_mix=include_seq_mix).total
    sequences = Fraction(D, T) if isinstance(D, int) and isinstance(T, int) else D / T
    return exact(sequences * forward * backward_multiplier)
