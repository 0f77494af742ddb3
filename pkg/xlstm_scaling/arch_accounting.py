"""
Architecture configurations, exact parameter counts and state/cache sizes.

Counts follow the per-component parameter tables of the optimized mLSTM
(xLSTM) model and of the Llama-style Transformer with grouped-query
attention. Both count embeddings, norms, gate biases and an untied
unembedding.
"""

from dataclasses import asdict, dataclass, fields
from enum import Enum
from fractions import Fraction
import logging

from xlstm_scaling.errors import InvalidConfigError

logger = logging.getLogger(__name__)

DEFAULT_N_VOCAB = 50257
DEFAULT_CHUNK_SIZE = 64


class ArchKind(str, Enum):
    TRANSFORMER = 'transformer'
    XLSTM = 'xlstm'


class SeqMixKind(str, Enum):
    MHA = 'MHA'
    GQA = 'GQA'
    MLA = 'MLA'
    MLSTM = 'mLSTM'


def exact(value):
    """Collapse an integral Fraction to int, leave everything else alone."""
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


@dataclass(frozen=True)
class ArchConfig:
    """One architecture instance with every dimensional hyperparameter."""

    kind: ArchKind
    d_model: int
    d_ff: int
    d_qk: int
    d_hv: int
    n_head_q: int
    n_layer: int
    n_head_kv: int | None = None
    n_vocab: int = DEFAULT_N_VOCAB
    chunk_size: int = DEFAULT_CHUNK_SIZE
    name: str | None = None

    def __post_init__(self):
        if not isinstance(self.kind, ArchKind):
            try:
                object.__setattr__(self, 'kind', ArchKind(self.kind))
            except ValueError:
                raise InvalidConfigError(
                    f'kind must be one of {[k.value for k in ArchKind]}, got {self.kind!r}')

    @property
    def n_head(self):
        return self.n_head_q

    @property
    def kv_heads(self):
        """Key/value head count; MHA and xLSTM use one per query head."""
        return self.n_head_q if self.n_head_kv is None else self.n_head_kv

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfigError([f'unknown field {name!r}' for name in unknown])
        required = [f.name for f in fields(cls) if f.name not in
                    ('n_head_kv', 'n_vocab', 'chunk_size', 'name')]
        missing = [name for name in required if name not in data]
        if missing:
            raise InvalidConfigError([f'missing field {name!r}' for name in missing])
        return cls(**data)

    def to_dict(self):
        data = asdict(self)
        data['kind'] = self.kind.value
        if self.n_head_kv is None:
            del data['n_head_kv']
        if self.name is None:
            del data['name']
        return data


def validate_config(config):
    """
    Collect every violated invariant of an architecture configuration.

    Args:
        config: the ArchConfig to check.

    Returns:
        A list of human-readable violations; empty when the config is valid.
    """
    violations = []
    dims = ('d_model', 'd_ff', 'd_qk', 'd_hv', 'n_head_q', 'n_layer', 'n_vocab',
            'chunk_size')
    for dim in dims:
        value = getattr(config, dim)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            violations.append(f'positive-dimension: {dim} must be a positive integer, '
                              f'got {value!r}')
    kv = config.n_head_kv
    if kv is not None:
        if not isinstance(kv, int) or isinstance(kv, bool) or kv < 1:
            violations.append(f'positive-dimension: n_head_kv must be a positive integer, '
                              f'got {kv!r}')
        elif config.kind is ArchKind.TRANSFORMER:
            if isinstance(config.n_head_q, int) and config.n_head_q % kv != 0:
                violations.append(f'GQA divisibility: n_head_kv={kv} does not divide '
                                  f'n_head_q={config.n_head_q}')
        elif kv != config.n_head_q:
            violations.append(f'xlstm heads: n_head_kv={kv} must equal '
                              f'n_head_q={config.n_head_q} when supplied')
    return violations


def check_config(config):
    """Raise InvalidConfigError listing every violation of ``config``."""
    violations = validate_config(config)
    if violations:
        raise InvalidConfigError(violations)
    return config


@dataclass(frozen=True)
class ParamBreakdown:
    """Exact parameter counts per component of one model."""

    embeddings: int
    seq_mix_per_layer: int
    feedforward_per_layer: int
    n_layer: int
    output_norm: int
    unembedding: int
    seq_mix_detail: dict
    feedforward_detail: dict

    @property
    def total(self):
        return (self.embeddings
                + self.n_layer * (self.seq_mix_per_layer + self.feedforward_per_layer)
                + self.output_norm + self.unembedding)

    @property
    def non_embedding(self):
        return self.total - self.embeddings - self.unembedding

    def in_millions(self):
        """Total in millions, rounded half up."""
        return (self.total + 500_000) // 1_000_000

    def to_dict(self):
        return {
            'embeddings': self.embeddings,
            'seq_mix_per_layer': self.seq_mix_per_layer,
            'seq_mix_detail': dict(self.seq_mix_detail),
            'feedforward_per_layer': self.feedforward_per_layer,
            'feedforward_detail': dict(self.feedforward_detail),
            'n_layer': self.n_layer,
            'output_norm': self.output_norm,
            'unembedding': self.unembedding,
            'total': self.total,
            'total_millions': self.in_millions(),
        }


def _mlstm_layer_params(config):
    d, n = config.d_model, config.n_head_q
    d_qk, d_hv = config.d_qk, config.d_hv
    return {
        'prenorm': d,
        'qkv': d * n * (2 * d_qk + d_hv),
        'input_forget_gates': 2 * d * n + 2 * n,
        'output_gate': d * n * d_hv,
        'output_norm': n * d_hv,
        'output_projection': d * n * d_hv,
    }


def _attention_layer_params(config):
    d = config.d_model
    d_qk, d_hv = config.d_qk, config.d_hv
    n_q, n_kv = config.n_head_q, config.kv_heads
    return {
        'prenorm': d,
        'qkv': d * (d_qk * n_q + (d_qk + d_hv) * n_kv),
        'output_projection': d * n_q * d_hv,
    }


def count_params(config):
    """
    Count the parameters of a Transformer or xLSTM model exactly.

    Args:
        config: a valid ArchConfig.

    Returns:
        ParamBreakdown whose total includes both embedding matrices.
    """
    check_config(config)
    if config.kind is ArchKind.XLSTM:
        seq_mix = _mlstm_layer_params(config)
    else:
        seq_mix = _attention_layer_params(config)
    feedforward = {
        'prenorm': config.d_model,
        'mlps': 3 * config.d_model * config.d_ff,
    }
    return ParamBreakdown(
        embeddings=config.n_vocab * config.d_model,
        seq_mix_per_layer=sum(seq_mix.values()),
        feedforward_per_layer=sum(feedforward.values()),
        n_layer=config.n_layer,
        output_norm=config.d_model,
        unembedding=config.d_model * config.n_vocab,
        seq_mix_detail=seq_mix,
        feedforward_detail=feedforward,
    )


def closed_form_params(config):
    """
    Evaluate the closed-form model totals of the parameter tables.

    The closed forms fold the output projections into d_model**2 terms and
    therefore agree with count_params only when n_head_q * d_hv == d_model.
    """
    check_config(config)
    d, n, L = config.d_model, config.n_head_q, config.n_layer
    d_qk, d_hv = config.d_qk, config.d_hv
    ff = 3 * d * config.d_ff + d
    if config.kind is ArchKind.XLSTM:
        layer = d * n * (2 * d_qk + d_hv + 2) + 2 * d * d + 2 * n + 2 * d
    else:
        n_kv = config.kv_heads
        layer = d * (d_qk * n + d_qk * n_kv + d_hv * n_kv) + d * d + d
    return L * (layer + ff) + 2 * d * config.n_vocab + d


def default_seq_mix(config):
    if config.kind is ArchKind.XLSTM:
        return SeqMixKind.MLSTM
    return SeqMixKind.MHA if config.kv_heads == config.n_head_q else SeqMixKind.GQA


def state_size_elements(kind, config, T):
    """
    Memory-state or KV-cache size of one layer and one sequence, in elements.

    Args:
        kind: SeqMixKind (or its string value); None picks the config's own kind.
        config: the ArchConfig providing head counts and head dimensions.
        T: number of tokens held in the cache.

    Returns:
        Element count; the mLSTM state is independent of T.
    """
    check_config(config)
    if T < 0:
        raise InvalidConfigError(f'sequence length must be >= 0, got {T}')
    kind = default_seq_mix(config) if kind is None else SeqMixKind(kind)
    if kind is SeqMixKind.MHA:
        return 2 * config.n_head_q * config.d_hv * T
    if kind is SeqMixKind.GQA:
        return 2 * config.kv_heads * config.d_hv * T
    if kind is SeqMixKind.MLA:
        return exact(Fraction(9 * config.d_hv * T, 2)) if isinstance(T, int) \
            else 9 * config.d_hv * T / 2
    return config.n_head_q * (config.d_hv * config.d_qk + config.d_qk + 1)


def cache_bytes(config, T, B=1, bytes_per_element=2, kind=None):
    """Total state or cache bytes across all layers for a batch of B sequences."""
    elements = state_size_elements(kind, config, T)
    return exact(config.n_layer * B * elements * bytes_per_element)
