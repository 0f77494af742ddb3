"""Command-line interface: counts, fits, plans, predictions and roofline reports."""

import argparse
from dataclasses import dataclass, field
from fractions import Fraction
import logging
import math
import os
import sys

from xlstm_scaling import artifacts, records
from xlstm_scaling.arch_accounting import (
    SeqMixKind,
    cache_bytes,
    count_params,
    default_seq_mix,
    state_size_elements,
)
from xlstm_scaling.artifacts import ArtifactFile, ArtifactKind
from xlstm_scaling.errors import DataError, ScalingError, UsageError
from xlstm_scaling.flop_counting import (
    DEFAULT_BACKWARD_MULTIPLIER,
    CostFactors,
    Workload,
    WorkloadMode,
    flops_model_forward,
)
from xlstm_scaling.memop_counting import ByteWidths, bytes_model
from xlstm_scaling.planner import (
    DEFAULT_CONTEXT_LENGTH,
    DEFAULT_TOKEN_PARAM_RATIOS,
    compare_at_budget,
    compare_at_loss,
    compute_optimal_alloc,
    plan_token_param_grid,
)
from xlstm_scaling.runtime_model import (
    Metric,
    RuntimeFit,
    fit_runtime,
    get_accelerator,
    hardware_utilization,
    load_accelerators,
    predict_step_time,
    predict_ttft,
    roofline_report,
    step_time_cost_fn,
    ttft_cost_fn,
)
from xlstm_scaling.scaling_fit import (
    DEFAULT_HUBER_DELTA,
    DEFAULT_M_TOLERANCE,
    LossSurfaceFit,
    PowerLawFit,
    fit_isoflop_profile,
    fit_loss_surface,
    fit_overtraining,
    fit_power_law,
    isoflop_optima,
    pareto_frontier,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '[%(levelname)s] [%(name)s]: %(message)s'


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f'{self.prog}: {message}')


@dataclass
class Result:
    payload: dict
    kind: ArtifactKind | None = None
    inputs: list = field(default_factory=list)


def _add_global_options(parser, leaf=False):
    # leaves repeat the root options so they may follow the subcommand
    def default(value):
        return argparse.SUPPRESS if leaf else value

    parser.add_argument('--json', action='store_true', default=default(False),
                        help='print machine-readable JSON')
    parser.add_argument('--bits', action='store_true', default=default(False),
                        help='report losses in bits instead of nats')
    parser.add_argument('--out', default=default(None),
                        help='also write the result as a JSON artifact')
    parser.add_argument('--log-level', default=default('WARNING'),
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])


def _leaf(subparsers, name, handler, help_text):
    parser = subparsers.add_parser(name, help=help_text, description=help_text)
    _add_global_options(parser, leaf=True)
    parser.set_defaults(handler=handler)
    return parser


def _add_config_options(parser):
    parser.add_argument('--config', help='architecture config JSON file')
    parser.add_argument('--table', help='config table name or file, used with --name')
    parser.add_argument('--name', help='config name within --table')


def _add_workload_options(parser):
    parser.add_argument('--mode', default='forward',
                        choices=[m.value.replace('_', '-') for m in WorkloadMode])
    parser.add_argument('--B', type=int, default=1, help='batch size in sequences')
    parser.add_argument('--T', type=int, default=0, help='sequence length')
    parser.add_argument('--Tp', type=int, default=0, help='prefill length')
    parser.add_argument('--Tg', type=int, default=1, help='generation length')
    parser.add_argument('--tg', type=int, default=1, help='generation step index')


def _add_run_options(parser):
    parser.add_argument('--runs', required=True, help='run records (CSV or JSON lines)')
    parser.add_argument('--kind', choices=['transformer', 'xlstm'],
                        help='only use runs of this model kind; needed when the runs mix kinds')
    parser.add_argument('--lookup-table', action='append', default=[],
                        help='config table used to compute missing C (repeatable)')
    parser.add_argument('--strict', action='store_true', help='abort on the first bad row')


def build_parser():
    parser = CliParser(prog='xlstm_scaling',
                       description='Scaling-law, FLOP/MemOp and runtime toolkit for '
                                   'Transformer and xLSTM models.')
    _add_global_options(parser)
    commands = parser.add_subparsers(dest='command', metavar='command')
    commands.required = True

    count = commands.add_parser('count', help='parameter, FLOP and memory-op counts')
    count_kinds = count.add_subparsers(dest='count_command', metavar='what')
    count_kinds.required = True
    sub = _leaf(count_kinds, 'params', _cmd_count_params, 'exact parameter counts')
    _add_config_options(sub)
    sub = _leaf(count_kinds, 'flops', _cmd_count_flops, 'FLOPs of a workload')
    _add_config_options(sub)
    _add_workload_options(sub)
    sub.add_argument('--factors', help='cost factor JSON file')
    sub.add_argument('--backward-multiplier', type=int, default=DEFAULT_BACKWARD_MULTIPLIER)
    sub.add_argument('--no-seq-mix', action='store_true',
                     help='leave out attention / mLSTM cell FLOPs')
    sub = _leaf(count_kinds, 'memops', _cmd_count_memops, 'bytes moved by a workload')
    _add_config_options(sub)
    _add_workload_options(sub)
    sub.add_argument('--widths', help='byte width JSON file')
    sub.add_argument('--bytes', type=float, help='uniform bytes per element')
    sub.add_argument('--weight-reload', type=float, default=0,
                     help='extra weight passes per sequence in the batch')

    sub = _leaf(commands, 'cache-size', _cmd_cache_size, 'memory state / KV cache size')
    _add_config_options(sub)
    sub.add_argument('--T', type=int, default=0, help='cached tokens')
    sub.add_argument('--B', type=int, default=1)
    sub.add_argument('--bytes-per-element', type=float, default=2)
    sub.add_argument('--seq-mix', choices=[k.value for k in SeqMixKind])

    fit = commands.add_parser('fit', help='fit scaling laws and runtime models')
    fit_kinds = fit.add_subparsers(dest='fit_command', metavar='what')
    fit_kinds.required = True
    sub = _leaf(fit_kinds, 'surface', _cmd_fit_surface, 'parametric loss surface L(N, D)')
    _add_run_options(sub)
    sub.add_argument('--delta', type=float, default=DEFAULT_HUBER_DELTA)
    sub.add_argument('--freeze-gamma', action='store_true', help='fix gamma to 1')
    sub.add_argument('--workers', type=int, default=os.cpu_count() or 1,
                     help='processes for the start grid, 1 to run serially')
    sub = _leaf(fit_kinds, 'isoflop', _cmd_fit_isoflop, 'IsoFLOP parabolas and optima')
    sub.add_argument('--in', dest='points', help='single profile CSV of x,loss')
    sub.add_argument('--runs', help='run records, bucketed by compute budget')
    sub.add_argument('--kind', choices=['transformer', 'xlstm'])
    sub.add_argument('--lookup-table', action='append', default=[])
    sub.add_argument('--strict', action='store_true')
    sub.add_argument('--tolerance', type=float, default=DEFAULT_M_TOLERANCE)
    sub = _leaf(fit_kinds, 'powerlaw', _cmd_fit_powerlaw, 'log-log power law')
    sub.add_argument('--in', dest='points', required=True, help='CSV of x,y points')
    sub.add_argument('--fit-name', default='power_law', help='key of the fit in the artifact')
    sub = _leaf(fit_kinds, 'overtrain', _cmd_fit_overtrain, 'loss vs compute per Token/Param')
    _add_run_options(sub)
    sub.add_argument('--tolerance', type=float, default=DEFAULT_M_TOLERANCE)
    sub = _leaf(fit_kinds, 'runtime', _cmd_fit_runtime, 'effective rate and overhead')
    sub.add_argument('--latencies', required=True)
    sub.add_argument('--metric', required=True, choices=['ttft', 'step-time'])
    sub.add_argument('--table', required=True, help='config table; config_id is the name')
    sub.add_argument('--batch-const', action='store_true')
    sub.add_argument('--factors')
    sub.add_argument('--widths')
    sub.add_argument('--accel', help='report utilization against this accelerator')

    plan = _leaf(commands, 'plan', _cmd_plan, 'compute-optimal allocation for a budget')
    plan.add_argument('--budget', type=float)
    plan.add_argument('--fits', nargs='+', help='artifact(s) holding the N and D power-law fits')
    plan.add_argument('--surface', help='loss surface artifact for a predicted loss')
    plan.add_argument('--table', help='config table to resolve N*')
    plan.add_argument('--T', type=int, default=DEFAULT_CONTEXT_LENGTH)
    plan_kinds = plan.add_subparsers(dest='plan_command', metavar='what')
    sub = _leaf(plan_kinds, 'grid', _cmd_plan_grid, 'Token/Param experiment grid')
    sub.add_argument('--N', type=float, nargs='+', required=True)
    sub.add_argument('--M', type=float, nargs='+', default=list(DEFAULT_TOKEN_PARAM_RATIOS))
    sub.add_argument('--table')
    sub.add_argument('--T', type=int, default=DEFAULT_CONTEXT_LENGTH)
    sub = _leaf(plan_kinds, 'compare', _cmd_plan_compare, 'compare two model families')
    for side in ('a', 'b'):
        sub.add_argument(f'--fits-{side}', nargs='+', required=True)
        sub.add_argument(f'--surface-{side}', required=True)
    target = sub.add_mutually_exclusive_group(required=True)
    target.add_argument('--budget', type=float)
    target.add_argument('--target-loss', type=float)

    predict = commands.add_parser('predict', help='predict losses and latencies')
    predict_kinds = predict.add_subparsers(dest='predict_command', metavar='what')
    predict_kinds.required = True
    for name, handler in (('ttft', _cmd_predict_ttft), ('step-time', _cmd_predict_step)):
        sub = _leaf(predict_kinds, name, handler, f'predicted {name}')
        _add_config_options(sub)
        sub.add_argument('--fit', required=True, help='runtime fit artifact')
        sub.add_argument('--B', type=int, default=1)
        sub.add_argument('--Tp', type=int, nargs='+', required=True)
        sub.add_argument('--factors')
        sub.add_argument('--widths')
    sub = _leaf(predict_kinds, 'loss', _cmd_predict_loss, 'loss from a fitted surface')
    sub.add_argument('--surface', required=True)
    sub.add_argument('--N', type=float, required=True)
    sub.add_argument('--D', type=float, required=True)

    sub = _leaf(commands, 'roofline', _cmd_roofline, 'roofline diagnostic of one operation')
    sub.add_argument('--accel', required=True)
    sub.add_argument('--accel-file', help='extra accelerator JSON file')
    sub.add_argument('--flops', type=float)
    sub.add_argument('--bytes', type=float)
    _add_config_options(sub)
    _add_workload_options(sub)

    sub = _leaf(commands, 'pareto', _cmd_pareto, 'loss/compute Pareto frontier')
    _add_run_options(sub)
    return parser


def _loss_out(value, args):
    if value is None:
        return None
    return value / math.log(2) if args.bits else value


def _loss_unit(args):
    return 'bits' if args.bits else 'nats'


def _resolve_config(args):
    if args.config:
        return records.load_arch_config(args.config), [args.config]
    if args.table and args.name:
        table = records.load_config_table(args.table)
        for config in table.configs:
            if config.name == args.name:
                inputs = [args.table] if os.path.exists(args.table) else []
                return config, inputs
        raise DataError(f'no config named {args.name!r} in {args.table}')
    raise UsageError('give --config, or --table together with --name')


def _factors(path):
    return CostFactors() if not path else CostFactors.from_dict(records.load_json(path))


def _widths(args):
    if getattr(args, 'widths', None):
        return ByteWidths.from_dict(records.load_json(args.widths))
    if getattr(args, 'bytes', None) is not None:
        return ByteWidths.uniform(args.bytes)
    return ByteWidths()


def _workload(args, config):
    return Workload(B=args.B, T=args.T, T_p=args.Tp, T_g=args.Tg, t_g=args.tg,
                    mode=WorkloadMode.parse(args.mode), kind=config.kind)


def _lookup_tables(paths):
    tables = {}
    for path in paths:
        table = records.load_config_table(path)
        if table.configs:
            tables[table.configs[0].kind.value] = table
    return tables or None


def _load_runs(args):
    runs = records.load_runs(args.runs, strict=args.strict,
                             config_table=_lookup_tables(args.lookup_table))
    if args.kind:
        runs = [r for r in runs if r.kind.value == args.kind]
    return runs


def _cmd_count_params(args):
    config, inputs = _resolve_config(args)
    return Result({'config': config.to_dict(), 'params': count_params(config).to_dict()},
                  ArtifactKind.COUNTS, inputs)


def _cmd_count_flops(args):
    config, inputs = _resolve_config(args)
    factors = _factors(args.factors)
    breakdown = flops_model_forward(config, _workload(args, config), factors,
                                    backward_multiplier=args.backward_multiplier,
                                    include_seq_mix=not args.no_seq_mix)
    inputs += [args.factors] if args.factors else []
    return Result({'config': config.to_dict(), 'factors': factors.to_dict(),
                   'flops': breakdown.to_dict()}, ArtifactKind.COUNTS, inputs)


def _cmd_count_memops(args):
    config, inputs = _resolve_config(args)
    widths = _widths(args)
    breakdown = bytes_model(config, _workload(args, config), widths,
                            weight_reload_per_batch=args.weight_reload)
    inputs += [args.widths] if args.widths else []
    return Result({'config': config.to_dict(), 'widths': widths.to_dict(),
                   'memops': breakdown.to_dict()}, ArtifactKind.COUNTS, inputs)


def _cmd_cache_size(args):
    config, inputs = _resolve_config(args)
    kind = SeqMixKind(args.seq_mix) if args.seq_mix else default_seq_mix(config)
    return Result({
        'config': config.to_dict(),
        'seq_mix': kind.value,
        'T': args.T,
        'B': args.B,
        'elements_per_layer': state_size_elements(kind, config, args.T),
        'bytes_total': cache_bytes(config, args.T, args.B, args.bytes_per_element, kind),
    }, ArtifactKind.COUNTS, inputs)


def _cmd_fit_surface(args):
    runs = _load_runs(args)
    fit = fit_loss_surface(runs, huber_delta=args.delta, freeze_gamma=args.freeze_gamma,
                           parallel=args.workers > 1, workers=args.workers)
    return Result({'fits': {'surface': fit.to_dict()}, 'kind': args.kind,
                   'n_runs': len(runs)}, ArtifactKind.LOSS_SURFACE, [args.runs])


def _cmd_fit_isoflop(args):
    if bool(args.points) == bool(args.runs):
        raise UsageError('give exactly one of --in or --runs')
    if args.points:
        xs, ys = records.load_points(args.points)
        parabola = fit_isoflop_profile(zip(xs, ys))
        payload = parabola.to_dict()
        payload['optimum_loss'] = _loss_out(parabola.optimum_loss, args)
        return Result({'fits': {'parabola': parabola.to_dict()}, 'optimum': payload,
                       'loss_unit': _loss_unit(args)}, ArtifactKind.PARABOLA, [args.points])
    runs = _load_runs(args)
    fits, optima = {}, {}
    for variable in ('N', 'D'):
        found = isoflop_optima(runs, variable, args.tolerance)
        optima[variable] = [o.to_dict() for o in found]
        interior = [o for o in found if o.parabola.interior]
        if len({o.H for o in interior}) >= 2:
            fits[variable] = fit_power_law([o.H for o in interior],
                                           [o.parabola.optimum_x for o in interior]).to_dict()
        else:
            logger.warning(f'Fewer than 2 interior {variable} optima; no power law fitted')
    return Result({'fits': fits, 'optima': optima, 'kind': args.kind},
                  ArtifactKind.POWER_LAW, [args.runs])


def _cmd_fit_powerlaw(args):
    xs, ys = records.load_points(args.points)
    fit = fit_power_law(xs, ys)
    return Result({'fits': {args.fit_name: fit.to_dict()}}, ArtifactKind.POWER_LAW,
                  [args.points])


def _cmd_fit_overtrain(args):
    fits = fit_overtraining(_load_runs(args), args.tolerance)
    return Result({'fits': {f'{ratio:g}': fit.to_dict() for ratio, fit in fits.items()},
                   'eta': {f'{ratio:g}': fit.eta for ratio, fit in fits.items()},
                   'kind': args.kind}, ArtifactKind.POWER_LAW, [args.runs])


def _cmd_fit_runtime(args):
    metric = Metric.parse(args.metric)
    table = records.load_config_table(args.table)
    configs = {config.name: config for config in table.configs}
    measurements = [m for m in records.load_latencies(args.latencies) if m.metric is metric]
    if metric is Metric.TTFT:
        cost_fn = ttft_cost_fn(configs, _factors(args.factors))
    else:
        cost_fn = step_time_cost_fn(configs, _widths(args))
    fit = fit_runtime(measurements, cost_fn, metric.regime, batch_const=args.batch_const)
    payload = {'fits': {'runtime': fit.to_dict()}, 'metric': metric.value}
    if args.accel:
        payload['utilization'] = hardware_utilization(fit, get_accelerator(args.accel))
    return Result(payload, ArtifactKind.RUNTIME_FIT, [args.latencies])


def _power_law_pair(paths):
    fits = {}
    for path in paths:
        fits.update(artifacts.read_artifact(path).payload.get('fits', {}))
    artifact = ArtifactFile(ArtifactKind.POWER_LAW, {'fits': fits})
    return (artifacts.fit_from_artifact(artifact, 'N', PowerLawFit),
            artifacts.fit_from_artifact(artifact, 'D', PowerLawFit))


def _surface(path):
    artifact = artifacts.read_artifact(path, ArtifactKind.LOSS_SURFACE)
    return artifacts.fit_from_artifact(artifact, 'surface', LossSurfaceFit)


def _cmd_plan(args):
    if args.budget is None or not args.fits:
        raise UsageError('plan needs --budget and --fits (or a grid/compare subcommand)')
    fit_N, fit_D = _power_law_pair(args.fits)
    table = records.load_config_table(args.table) if args.table else None
    plan = compute_optimal_alloc(fit_N, fit_D, args.budget, config_table=table, T=args.T)
    payload = {'plan': plan.to_dict()}
    inputs = list(args.fits)
    if args.surface:
        payload['predicted_loss'] = _loss_out(
            _surface(args.surface).predict(plan.N_star, plan.D_star), args)
        payload['loss_unit'] = _loss_unit(args)
        inputs.append(args.surface)
    return Result(payload, ArtifactKind.PLAN, inputs)


def _cmd_plan_grid(args):
    table = records.load_config_table(args.table) if args.table else None
    grid = plan_token_param_grid(args.N, args.M, table, T=args.T)
    return Result({'grid': [point.to_dict() for point in grid]}, ArtifactKind.PLAN)


def _cmd_plan_compare(args):
    fits_a, fits_b = _power_law_pair(args.fits_a), _power_law_pair(args.fits_b)
    surface_a, surface_b = _surface(args.surface_a), _surface(args.surface_b)
    inputs = [*args.fits_a, args.surface_a, *args.fits_b, args.surface_b]
    if args.budget is not None:
        alloc_a = compute_optimal_alloc(*fits_a, args.budget)
        alloc_b = compute_optimal_alloc(*fits_b, args.budget)
        comparison = compare_at_budget(surface_a, surface_b, args.budget, alloc_a, alloc_b)
        payload = comparison.to_dict()
        for key in ('loss_a', 'loss_b', 'margin'):
            payload[key] = _loss_out(payload[key], args)
        payload.update(alloc_a=alloc_a.to_dict(), alloc_b=alloc_b.to_dict(),
                       loss_unit=_loss_unit(args))
    else:
        comparison = compare_at_loss(surface_a, fits_a, surface_b, fits_b, args.target_loss)
        payload = comparison.to_dict()
    return Result({'comparison': payload}, ArtifactKind.PLAN, inputs)


def _runtime_fit(path):
    return artifacts.fit_from_artifact(
        artifacts.read_artifact(path, ArtifactKind.RUNTIME_FIT), 'runtime', RuntimeFit)


def _cmd_predict_ttft(args):
    config, inputs = _resolve_config(args)
    fit, factors = _runtime_fit(args.fit), _factors(args.factors)
    predictions = [{'T_p': T_p, 'seconds': predict_ttft(config, args.B, T_p, fit, factors)}
                   for T_p in args.Tp]
    return Result({'metric': 'ttft', 'B': args.B, 'predictions': predictions},
                  inputs=inputs + [args.fit])


def _cmd_predict_step(args):
    config, inputs = _resolve_config(args)
    fit, widths = _runtime_fit(args.fit), _widths(args)
    predictions = [{'T_p': T_p,
                    'seconds': predict_step_time(config, args.B, T_p, fit, widths)}
                   for T_p in args.Tp]
    return Result({'metric': 'step_time', 'B': args.B, 'predictions': predictions},
                  inputs=inputs + [args.fit])


def _cmd_predict_loss(args):
    loss = _surface(args.surface).predict(args.N, args.D)
    return Result({'N': args.N, 'D': args.D, 'loss': _loss_out(loss, args),
                   'loss_unit': _loss_unit(args)}, inputs=[args.surface])


def _cmd_roofline(args):
    registry = load_accelerators()
    if args.accel_file:
        registry = load_accelerators(args.accel_file, registry)
    accel = get_accelerator(args.accel, registry)
    if args.flops is not None and args.bytes is not None:
        flops, n_bytes, inputs = args.flops, args.bytes, []
    elif args.flops is None and args.bytes is None:
        config, inputs = _resolve_config(args)
        workload = _workload(args, config)
        flops = flops_model_forward(config, workload).total
        n_bytes = bytes_model(config, workload).total
    else:
        raise UsageError('give both --flops and --bytes, or a config and workload')
    return Result(roofline_report(flops, n_bytes, accel), inputs=inputs)


def _cmd_pareto(args):
    frontier = pareto_frontier(_load_runs(args))
    rows = []
    for run in frontier:
        row = run.to_dict()
        row['loss'] = _loss_out(row['loss'], args)
        rows.append(row)
    return Result({'frontier': rows, 'loss_unit': _loss_unit(args)}, inputs=[args.runs])


def _format_number(value):
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, Fraction):
        if value.denominator != 1:
            return f'{value} ({float(value):.4e})'
        value = value.numerator
    # counts become floats once a fractional cost factor is applied
    if isinstance(value, float) and math.isfinite(value) and value.is_integer():
        value = int(value)
    if isinstance(value, int):
        return f'{value:,} ({value:.4e})' if abs(value) >= 10_000 else str(value)
    if isinstance(value, float):
        return f'{value!r} ({value:.4e})' if abs(value) >= 10_000 else repr(value)
    return str(value)


def render_text(payload, indent=0):
    """Human-readable rendering of a result payload, one value per line."""
    lines = []
    pad = '  ' * indent
    for key, value in payload.items():
        if isinstance(value, dict):
            lines.append(f'{pad}{key}:')
            lines.extend(render_text(value, indent + 1))
        elif isinstance(value, list) and value and isinstance(value[0], dict):
            lines.append(f'{pad}{key}:')
            for number, item in enumerate(value, start=1):
                lines.append(f'{pad}  [{number}]')
                lines.extend(render_text(item, indent + 2))
        else:
            lines.append(f'{pad}{key}: {_format_number(value)}')
    return lines


def run_command(argv, stdout=None):
    """
    Parse ``argv``, run one command and print its result.

    Returns:
        Exit code: 0 on success, 1 on usage errors, 2 on any other error.
    """
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 1
    except SystemExit as exc:
        # --help
        return exc.code or 0
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT, stream=sys.stderr)
    logging.getLogger('xlstm_scaling').setLevel(args.log_level)
    try:
        result = args.handler(args)
        if args.out:
            if result.kind is None:
                text = artifacts.dumps(result.payload)
            else:
                text = artifacts.dumps(ArtifactFile(result.kind, result.payload,
                                                    artifacts.provenance(result.inputs)))
            with open(args.out, 'w') as f:
                f.write(text)
    except UsageError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 1
    except ScalingError as exc:
        print(f'error: {exc}', file=sys.stderr)
        return 2
    if args.json:
        stdout.write(artifacts.dumps(result.payload))
    else:
        stdout.write('\n'.join(render_text(result.payload)) + '\n')
    return 0


def main():
    sys.exit(run_command(sys.argv[1:]))


if __name__ == '__main__':

    main()
