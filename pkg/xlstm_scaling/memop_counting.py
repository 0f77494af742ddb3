"""
Memory operations (bytes loaded and stored) for the mLSTM and Transformer models.

Weights are streamed once per forward pass and activations scale with the
number of tokens. The input embedding is a row gather of B*T*d_model
activations rather than a pass over the whole table.
"""

from dataclasses import dataclass, field, fields
from enum import Enum
from fractions import Fraction
import logging

from xlstm_scaling.arch_accounting import ArchKind, check_config, exact
from xlstm_scaling.errors import InvalidConfigError
from xlstm_scaling.flop_counting import WorkloadMode

logger = logging.getLogger(__name__)


class WeightClass(str, Enum):
    EMB = 'emb'
    NORM = 'norm'
    QKV = 'qkv'
    IF = 'if'
    O = 'o'  # noqa: E741
    OUT = 'out'
    FF = 'ff'


@dataclass(frozen=True)
class ByteWidths:
    """Bytes per element for every tensor class; 2 (16-bit) everywhere by default."""

    qkv: float = 2
    if_gate: float = 2
    cmn: float = 2
    act: float = 2
    act_norm: float = 2
    act_ff: float = 2
    w_emb: float = 2
    w_norm: float = 2
    w_qkv: float = 2
    w_if: float = 2
    w_o: float = 2
    w_out: float = 2
    w_ff: float = 2

    @classmethod
    def uniform(cls, width):
        return cls(**{f.name: width for f in fields(cls)})

    def weight(self, weight_class):
        return getattr(self, 'w_' + WeightClass(weight_class).value)

    def validate(self):
        negative = [f.name for f in fields(self) if getattr(self, f.name) < 0]
        if negative:
            raise InvalidConfigError([f'byte width {name} must be >= 0' for name in negative])
        return self

    @classmethod
    def from_dict(cls, data):
        """
        Build widths from a JSON object.

        Accepts the activation widths by field name and the weight widths
        either as ``w_<class>`` fields or as a nested ``weights`` map keyed by
        weight class. A ``default`` entry sets every width first.
        """
        data = dict(data)
        values = {}
        if 'default' in data:
            values = {f.name: data.pop('default') for f in fields(cls)}
        for name, width in dict(data.pop('weights', {})).items():
            try:
                values['w_' + WeightClass(name).value] = width
            except ValueError:
                raise InvalidConfigError(f'unknown weight class {name!r}')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InvalidConfigError([f'unknown byte width {name!r}' for name in unknown])
        values.update(data)
        return cls(**values).validate()

    def to_dict(self):
        data = {name: getattr(self, name) for name in ('qkv', 'if_gate', 'cmn', 'act',
                                                       'act_norm', 'act_ff')}
        data['weights'] = {c.value: self.weight(c) for c in WeightClass}
        return data


DEFAULT_WIDTHS = ByteWidths()


@dataclass
class MemopBreakdown:
    """Bytes per component split into activation and weight traffic."""

    activations: dict
    weights: dict
    seq_mix: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def activation_total(self):
        return exact(sum(self.activations.values()))

    @property
    def weight_total(self):
        return exact(sum(self.weights.values()))

    @property
    def total(self):
        return exact(self.activation_total + self.weight_total)

    def to_dict(self):
        return {
            'activations': dict(self.activations),
            'weights': dict(self.weights),
            'seq_mix': dict(self.seq_mix),
            'activation_total': self.activation_total,
            'weight_total': self.weight_total,
            'total': self.total,
            'metadata': dict(self.metadata),
        }


def bytes_linear(B, d_in, d_out, widths=DEFAULT_WIDTHS, weight_class=WeightClass.FF):
    """Bytes moved by a dense layer on B tokens: activations in and out plus the weight."""
    return exact(B * (d_in + d_out) * widths.act + d_in * d_out * widths.weight(weight_class))


def mlstm_chunk_memop_terms(L, d_qk, d_hv, widths=DEFAULT_WIDTHS):
    """Per-head bytes of one chunk, split by kernel and direction."""
    state = d_qk * d_hv + d_qk + 1
    return {
        'inter.load': L * (d_qk + d_hv) * widths.qkv + 2 * L * widths.if_gate,
        'inter.store': state * widths.cmn,
        'intra.load': (L * (2 * d_qk + d_hv) * widths.qkv + 2 * L * widths.if_gate
                       + state * widths.cmn),
        'intra.store': L * d_hv * widths.qkv + 2 * L * widths.cmn,
    }


def mlstm_chunk_bytes(L, d_qk, d_hv, widths=DEFAULT_WIDTHS):
    return exact(4 * L * widths.if_gate + 3 * L * (d_hv + d_qk) * widths.qkv
                 + 2 * (L + d_hv * d_qk + d_qk + 1) * widths.cmn)


def _per_chunk(config, T, chunk_size, per_chunk):
    L = config.chunk_size if chunk_size is None else chunk_size
    if T < 1 or L < 1:
        raise InvalidConfigError(f'chunkwise mLSTM needs T >= 1 and L >= 1, got T={T}, L={L}')
    n_full, rest = divmod(T, L)
    total = n_full * per_chunk(L)
    if rest:
        total += per_chunk(rest)
    return exact(config.n_head_q * total)


def bytes_mlstm_chunkwise(config, T, widths=DEFAULT_WIDTHS, chunk_size=None):
    """
    Bytes of the chunkwise mLSTM kernels for one sequence of T tokens.

    The per-head chunk total is multiplied by n_head once. A trailing
    partial chunk is costed with its own length.
    """
    return _per_chunk(config, T, chunk_size,
                      lambda L: mlstm_chunk_bytes(L, config.d_qk, config.d_hv, widths))


def bytes_mlstm_chunkwise_terms(config, T, widths=DEFAULT_WIDTHS, chunk_size=None):
    """Load/store breakdown of bytes_mlstm_chunkwise over all heads and chunks."""
    return {
        name: _per_chunk(config, T, chunk_size,
                         lambda L, name=name: mlstm_chunk_memop_terms(
                             L, config.d_qk, config.d_hv, widths)[name])
        for name in ('inter.load', 'inter.store', 'intra.load', 'intra.store')
    }


def mlstm_recurrent_memop_terms(d_qk, d_hv, widths=DEFAULT_WIDTHS):
    """
    Per-head bytes of one recurrent step.

    The state traffic covers the d_qk x d_hv memory matrix in each direction;
    the normalizer and max-state vectors are left out, as in the step total.
    """
    return {
        'load': (2 * d_qk + d_hv) * widths.qkv + 2 * widths.if_gate
        + d_qk * d_hv * widths.cmn,
        'store': d_hv * widths.qkv + d_qk * d_hv * widths.cmn,
    }


def bytes_mlstm_recurrent(config, widths=DEFAULT_WIDTHS):
    """Bytes of one recurrent mLSTM step over all heads."""
    return exact(config.n_head_q * (2 * widths.if_gate
                                    + 2 * (config.d_hv + config.d_qk) * widths.qkv
                                    + 2 * config.d_hv * config.d_qk * widths.cmn))


def attention_memop_terms(config, S, T, widths=DEFAULT_WIDTHS):
    """FlashAttention loads and stores for S queries against T keys and values."""
    d_qk, d_hv = config.d_qk, config.d_hv
    n_q, n_kv = config.n_head_q, config.kv_heads
    return {
        'load': exact((S * d_qk * n_q + T * (d_qk + d_hv) * n_kv) * widths.qkv),
        'store': exact(S * d_hv * n_q * widths.qkv),
    }


def bytes_attention_prefill(config, T, widths=DEFAULT_WIDTHS):
    """FlashAttention bytes for one sequence of T tokens; logits stay on chip."""
    return exact(T * (config.d_qk + config.d_hv) * (config.n_head_q + config.kv_heads)
                 * widths.qkv)


def bytes_attention_gen_step(config, T_p, t_g, widths=DEFAULT_WIDTHS):
    """Bytes of the t_g-th generated token: one query against the whole KV cache."""
    head = config.d_qk + config.d_hv
    return exact((head * config.n_head_q + (T_p + t_g) * head * config.kv_heads)
                 * widths.qkv)


def bytes_attention_gen_seq(config, T_p, T_g, widths=DEFAULT_WIDTHS):
    """Bytes of generating T_g tokens after a prompt of T_p."""
    head = config.d_qk + config.d_hv
    tri = T_g * (T_g + 1) // 2 if isinstance(T_g, int) else Fraction(T_g * (T_g + 1), 2)
    return exact(widths.qkv * (T_g * head * config.n_head_q
                               + (T_p * T_g + tri) * head * config.kv_heads))


def _seq_mix_bytes(config, workload, widths):
    mode = workload.mode
    if config.kind is ArchKind.XLSTM:
        if mode.parallel:
            terms = bytes_mlstm_chunkwise_terms(config, workload.seq_len, widths)
            return bytes_mlstm_chunkwise(config, workload.seq_len, widths), terms
        steps = 1 if mode is WorkloadMode.GEN_STEP else workload.T_g
        per_head = mlstm_recurrent_memop_terms(config.d_qk, config.d_hv, widths)
        terms = {name: exact(steps * config.n_head_q * value)
                 for name, value in per_head.items()}
        return exact(steps * bytes_mlstm_recurrent(config, widths)), terms
    if mode.parallel:
        T = workload.seq_len
        return bytes_attention_prefill(config, T, widths), \
            attention_memop_terms(config, T, T, widths)
    if mode is WorkloadMode.GEN_STEP:
        T = workload.T_p + workload.t_g
        return bytes_attention_gen_step(config, workload.T_p, workload.t_g, widths), \
            attention_memop_terms(config, 1, T, widths)
    total = bytes_attention_gen_seq(config, workload.T_p, workload.T_g, widths)
    steps = [attention_memop_terms(config, 1, workload.T_p + t, widths)
             for t in range(1, workload.T_g + 1)]
    return total, {name: exact(sum(step[name] for step in steps))
                   for name in ('load', 'store')}


def _layer_traffic(config, widths):
    # (activation elements per token with their width, weight bytes) per component
    d, n, V = config.d_model, config.n_head_q, config.n_vocab
    d_qk, d_hv, d_ff = config.d_qk, config.d_hv, config.d_ff
    w = widths
    if config.kind is ArchKind.XLSTM:
        prefix = 'mlstm_layer'
        seq_mix = {
            'prenorm': (d * w.act_norm, d * w.w_norm),
            'qkv': ((d + n * (2 * d_qk + d_hv)) * w.qkv, d * n * (2 * d_qk + d_hv) * w.w_qkv),
            'input_forget_gates': (2 * (d + n) * w.if_gate, (2 * d * n + 2 * n) * w.w_if),
            'output_gate': ((d + n * d_hv) * w.act, d * n * d_hv * w.w_o),
            'output_norm': (n * d_hv * w.act_norm, n * d_hv * w.w_norm),
            'output_projection': ((d + n * d_hv) * w.act, d * n * d_hv * w.w_out),
        }
    else:
        prefix = 'attention_layer'
        n_kv = config.kv_heads
        qkv = d_qk * n + (d_qk + d_hv) * n_kv
        seq_mix = {
            'prenorm': (d * w.act_norm, d * w.w_norm),
            'qkv': ((d + qkv) * w.qkv, d * qkv * w.w_qkv),
            'output_projection': ((d + n * d_hv) * w.act, d * n * d_hv * w.w_out),
        }
    layer = {f'{prefix}.{name}': value for name, value in seq_mix.items()}
    layer.update({
        'feedforward.prenorm': (d * w.act_norm, d * w.w_norm),
        'feedforward.mlps': (3 * (d + d_ff) * w.act_ff, 3 * d * d_ff * w.w_ff),
    })
    head = {'embeddings': (d * w.act, 0)}
    tail = {
        'output_norm': (d * w.act_norm, d * w.w_norm),
        'unembedding': ((d + V) * w.act, d * V * w.w_emb),
    }
    return head, layer, tail


def bytes_model(config, workload, widths=DEFAULT_WIDTHS, weight_reload_per_batch=0):
    """
    Total model bytes of a workload, broken down by component.

    Args:
        config: ArchConfig of either kind.
        workload: Workload selecting the sequence-mix formula.
        widths: ByteWidths.
        weight_reload_per_batch: extra full weight passes per sequence in the
            batch, for kernels that cannot reuse weights across the batch.

    Returns:
        MemopBreakdown. Weights count once per forward pass; a generated
        sequence runs T_g forward passes.
    """
    check_config(config)
    widths.validate()
    workload.validate()
    workload.check_kind(config)
    tokens = workload.tokens
    passes = workload.T_g if workload.mode is WorkloadMode.GEN_SEQ else 1
    head, layer, tail = _layer_traffic(config, widths)
    activations, weights = {}, {}
    for group, repeat in ((head, 1), (layer, config.n_layer), (tail, 1)):
        for name, (act, weight) in group.items():
            activations[name] = exact(repeat * tokens * act)
            weights[name] = exact(repeat * passes * weight)
    total, terms = _seq_mix_bytes(config, workload, widths)
    cell = 'mlstm_cell' if config.kind is ArchKind.XLSTM else 'attention'
    scale = config.n_layer * workload.B
    activations[cell] = exact(scale * total)
    weights[cell] = 0
    if weight_reload_per_batch:
        streamed = sum(weights.values())
        weights['weight_reload'] = exact(weight_reload_per_batch * workload.B * streamed)
    metadata = {
        'kind': config.kind.value,
        'workload': workload.to_dict(),
        'tokens': tokens,
        'weight_passes': passes,
        'weight_reload_per_batch': weight_reload_per_batch,
        'embedding': 'row gather of tokens * d_model activations',
    }
    return MemopBreakdown(
        activations=activations,
        weights=weights,
        seq_mix={name: exact(scale * value) for name, value in terms.items()},
        metadata=metadata,
    )
