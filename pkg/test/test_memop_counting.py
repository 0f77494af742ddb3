import random

import pytest

from xlstm_scaling.arch_accounting import ArchConfig, count_params
from xlstm_scaling.errors import InvalidConfigError
from xlstm_scaling.flop_counting import Workload, flops_linear
from xlstm_scaling.memop_counting import (
    ByteWidths,
    WeightClass,
    bytes_attention_gen_seq,
    bytes_attention_gen_step,
    bytes_attention_prefill,
    bytes_linear,
    bytes_mlstm_chunkwise,
    bytes_mlstm_chunkwise_terms,
    bytes_mlstm_recurrent,
    bytes_model,
    mlstm_chunk_bytes,
    mlstm_chunk_memop_terms,
    mlstm_recurrent_memop_terms,
)

ONE = ByteWidths.uniform(1)
ZERO = ByteWidths.uniform(0)
NO_ACTIVATIONS = ByteWidths(qkv=0, if_gate=0, cmn=0, act=0, act_norm=0, act_ff=0)


def unit(kind='xlstm', **kwargs):
    dims = dict(d_model=1, d_ff=1, d_qk=1, d_hv=1, n_head_q=1, n_layer=1, chunk_size=1)
    dims.update(kwargs)
    return ArchConfig(kind=kind, **dims)


def xlstm_1b():
    return ArchConfig(kind='xlstm', d_model=2048, d_ff=5504, d_qk=256, d_hv=512, n_head_q=4,
                      n_layer=24)


def transformer_162m(**kwargs):
    return ArchConfig(kind='transformer', d_model=768, d_ff=2048, d_qk=64, d_hv=64,
                      n_head_q=12, n_layer=12, **kwargs)


def test_linear_layer():
    assert bytes_linear(1, 1, 1, ONE) == 3
    assert bytes_linear(128, 1024, 1024) == 2_621_440


def test_linear_layer_intensity_grows_with_batch():
    def intensity(B):
        return flops_linear(B, 1024, 1024) / bytes_linear(B, 1024, 1024)
    assert intensity(1) < intensity(16) < intensity(256)


def test_unit_chunk():
    assert mlstm_chunk_bytes(1, 1, 1, ONE) == 18
    assert sum(mlstm_chunk_memop_terms(1, 1, 1, ONE).values()) == 18


def test_chunk_terms_sum_to_chunk_total():
    for L, d_qk, d_hv in [(64, 256, 512), (17, 3, 5)]:
        terms = mlstm_chunk_memop_terms(L, d_qk, d_hv)
        assert sum(terms.values()) == mlstm_chunk_bytes(L, d_qk, d_hv)
    config = xlstm_1b()
    for T in (64, 100, 8192):
        terms = bytes_mlstm_chunkwise_terms(config, T)
        assert sum(terms.values()) == bytes_mlstm_chunkwise(config, T)


def test_chunkwise_is_linear_in_sequence_length():
    config = xlstm_1b()
    for T in (64, 1024):
        assert bytes_mlstm_chunkwise(config, 2 * T) == 2 * bytes_mlstm_chunkwise(config, T)


def test_unit_recurrent_step():
    assert bytes_mlstm_recurrent(unit(), ONE) == 8
    assert sum(mlstm_recurrent_memop_terms(1, 1, ONE).values()) == 8
    terms = mlstm_recurrent_memop_terms(256, 512)
    assert 4 * sum(terms.values()) == bytes_mlstm_recurrent(xlstm_1b())


def test_unit_attention():
    config = unit('transformer')
    assert bytes_attention_prefill(config, 1, ONE) == 4
    assert bytes_attention_gen_seq(config, 4, 3, ONE) == 42
    assert bytes_attention_gen_seq(config, 4, 1, ONE) == bytes_attention_gen_step(config, 4, 1,
                                                                                  ONE)


def test_generated_sequence_equals_sum_of_steps():
    rng = random.Random(5)
    for _ in range(5):
        n_head_q = rng.randint(1, 16)
        n_head_kv = rng.choice([k for k in range(1, n_head_q + 1) if n_head_q % k == 0])
        config = unit('transformer', d_qk=rng.randint(1, 128), d_hv=rng.randint(1, 128),
                      n_head_q=n_head_q, n_head_kv=n_head_kv)
        widths = ByteWidths(qkv=rng.choice([1, 2, 4]))
        for T_p in range(0, 9):
            for T_g in range(1, 9):
                steps = sum(bytes_attention_gen_step(config, T_p, t, widths)
                            for t in range(1, T_g + 1))
                assert bytes_attention_gen_seq(config, T_p, T_g, widths) == steps


@pytest.mark.parametrize('config', [xlstm_1b(), transformer_162m()])
def test_weight_only_limit_counts_every_parameter_once(config):
    params = count_params(config)
    breakdown = bytes_model(config, Workload(B=1, T=4), NO_ACTIVATIONS)
    assert breakdown.activation_total == 0
    # the input embedding is a row gather, not a weight pass
    assert breakdown.weight_total == 2 * (params.total - params.embeddings)


@pytest.mark.parametrize('config', [xlstm_1b(), transformer_162m()])
def test_zero_widths_move_no_bytes(config):
    for workload in (Workload(T=64), Workload(T_p=64, mode='gen_step'),
                     Workload(T_p=64, T_g=4, mode='gen_seq')):
        assert bytes_model(config, workload, ZERO).total == 0


@pytest.mark.parametrize('config', [xlstm_1b(), transformer_162m()])
def test_batch_doubles_activations_only(config):
    one = bytes_model(config, Workload(B=1, T=256))
    two = bytes_model(config, Workload(B=2, T=256))
    assert two.activation_total == 2 * one.activation_total
    assert two.weight_total == one.weight_total


def test_embedding_is_a_row_gather():
    config = transformer_162m()
    breakdown = bytes_model(config, Workload(B=2, T=10))
    assert breakdown.weights['embeddings'] == 0
    assert breakdown.activations['embeddings'] == 2 * 10 * 768 * 2


def test_generation_step_cost_in_prompt_length():
    xlstm = xlstm_1b()
    step = [bytes_model(xlstm, Workload(T_p=T_p, mode='gen_step')).total
            for T_p in (10, 11, 1000)]
    assert step[0] == step[1] == step[2]
    transformer = transformer_162m(n_head_kv=4)
    step = [bytes_model(transformer, Workload(T_p=T_p, mode='gen_step')).total
            for T_p in (10, 11, 12)]
    slope = (64 + 64) * 4 * 12 * 2
    assert step[1] - step[0] == step[2] - step[1] == slope


def test_generated_sequence_streams_weights_every_step():
    config = xlstm_1b()
    step = bytes_model(config, Workload(T_p=10, mode='gen_step'))
    seq = bytes_model(config, Workload(T_p=10, T_g=5, mode='gen_seq'))
    assert seq.weight_total == 5 * step.weight_total
    assert seq.activations['mlstm_cell'] == 5 * step.activations['mlstm_cell']


@pytest.mark.parametrize('config', [xlstm_1b(), transformer_162m()])
@pytest.mark.parametrize('workload', [Workload(B=2, T=100), Workload(B=2, T_p=7, mode='gen_step'),
                                      Workload(B=2, T_p=7, T_g=3, mode='gen_seq')])
def test_sequence_mix_terms_sum_to_cell_total(config, workload):
    breakdown = bytes_model(config, workload)
    cell = 'mlstm_cell' if config.kind.value == 'xlstm' else 'attention'
    assert sum(breakdown.seq_mix.values()) == breakdown.activations[cell]


def test_weight_reload_scales_with_batch():
    config = transformer_162m()
    plain = bytes_model(config, Workload(B=4, T_p=10, mode='gen_step'))
    reload = bytes_model(config, Workload(B=4, T_p=10, mode='gen_step'),
                         weight_reload_per_batch=0.5)
    assert reload.weights['weight_reload'] == 0.5 * 4 * plain.weight_total
    assert reload.total == plain.total + reload.weights['weight_reload']


def test_widths_from_dict():
    widths = ByteWidths.from_dict({'default': 1, 'weights': {'ff': 4}, 'cmn': 4})
    assert widths.qkv == 1
    assert widths.cmn == 4
    assert widths.weight(WeightClass.FF) == 4
    assert widths.weight('emb') == 1
    assert ByteWidths.from_dict(widths.to_dict()) == widths


@pytest.mark.parametrize('data', [{'weights': {'conv': 2}}, {'kv_cache': 2}, {'act': -1}])
def test_invalid_widths(data):
    with pytest.raises(InvalidConfigError):
        ByteWidths.from_dict(data)


def test_162m_generation_step_matches_termwise_sum():
    d, d_ff, n, head, V, b = 768, 2048, 12, 64 + 64, 50257, 2
    T_p = 1023
    layer_act = b * (d + (d + 3 * 64 * n) + (d + n * 64) + d + 3 * (d + d_ff))
    layer_weights = b * (d + d * 3 * 64 * n + d * n * 64 + d + 3 * d * d_ff)
    attention = b * (head * n + (T_p + 1) * head * n)
    activations = b * d + 12 * (layer_act + attention) + b * d + b * (d + V)
    weights = 12 * layer_weights + b * d + b * d * V
    memops = bytes_model(transformer_162m(), Workload(T_p=T_p, mode='gen_step'))
    assert memops.activation_total == activations == 38_240_930
    assert memops.weight_total == weights == 247_102_464
    assert memops.total == 285_343_394
