"""
Command-line front end.

::

    ep3-tracker arc --delta 0.21 --delta 0.23 --pair 2,3
    ep3-tracker locate
    ep3-tracker encircle --x0 0.6 --y0 0.25 --a 2.5 --b 1
    ep3-tracker phase --trajectory out/trajectory.csv
    ep3-tracker reproduce --out figures
"""
import argparse
import logging
import math
import sys
from dataclasses import replace

from ep3_tracker import __version__
from ep3_tracker.arc import SweepSpec, classify, crossing_average, sweep_family
from ep3_tracker.config import load_config
from ep3_tracker.encircle import (PAIRS, Contour, detect_conversions, encloses, flip_table, monodromy_between,
                                  monodromy_power, track_loop)
from ep3_tracker.eplocate import locate
from ep3_tracker.exceptions import EP3TrackerException
from ep3_tracker.model import LambdaImPolicy
from ep3_tracker.phase import accumulate_phase, closure_report, detect_phase_switch
from ep3_tracker.tables import arc_csv, family_csv, flip_table_csv, phase_csv, read_trajectory_csv, trajectory_csv
from ep3_tracker.utils import canonical_json, format_number
from ep3_tracker.writer import RunManifest, start_writer

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('arc', 'locate', 'encircle', 'phase', 'reproduce')

# black is shifted up from y0 = 0.25 so that it encloses the refined EP2(1)
FIG4_BLACK = Contour(0.5, 0.27, 1.0, 1.0)
FIG4_BLACK_NOMINAL = Contour(0.5, 0.25, 1.0, 1.0)
FIG4_VIOLET = Contour(1.25, 0.25, 0.5, 1.0)
FIG5_DOUBLE = Contour(0.6, 0.25, 2.5, 1.0)


def parse_pair(text):
    try:
        pair = tuple(sorted(int(part) for part in text.split(',')))
    except ValueError:
        raise argparse.ArgumentTypeError('pair must look like 2,3')
    if len(pair) != 2 or pair[0] == pair[1] or pair[0] < 1 or pair[1] > 3:
        raise argparse.ArgumentTypeError('pair must name two distinct branches out of 1..3')
    return pair


def _add_contour_arguments(parser):
    parser.add_argument('--x0', type=float, default=FIG5_DOUBLE.x0)
    parser.add_argument('--y0', type=float, default=FIG5_DOUBLE.y0)
    parser.add_argument('--a', type=float, default=FIG5_DOUBLE.a)
    parser.add_argument('--b', type=float, default=FIG5_DOUBLE.b)
    parser.add_argument('--steps', type=int, default=4096, help='samples per loop')
    parser.add_argument('--loops', type=int, default=1)
    parser.add_argument('--clockwise', action='store_true')
    parser.add_argument('--theta0', type=float, default=0.0, help='starting angle of the contour in radians')
    parser.add_argument('--threshold', type=float, default=None,
                        help='conversion gap threshold (default: median pairwise gap)')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='TOML configuration file')
    common.add_argument('--out', default='ep3-output', help='output directory')
    common.add_argument('--log-level', default='WARNING',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'))
    common.add_argument('--lambda-im-scale', type=float, default=None)
    common.add_argument('--lambda-im-offset', type=float, default=None)
    common.add_argument('--seed', type=int, default=None, help='accepted for compatibility; unused')

    parser = argparse.ArgumentParser(prog='ep3-tracker',
                                     description='Exceptional points of a three-level non-Hermitian system.')
    parser.add_argument('--version', action='version', version='%(prog)s ' + __version__)
    sub = parser.add_subparsers(dest='subcommand', metavar='{%s}' % ','.join(SUBCOMMANDS))
    sub.required = True

    arc = sub.add_parser('arc', parents=[common], help='lambda sweeps and ARC classification')
    arc.add_argument('--delta', type=float, action='append', required=True)
    arc.add_argument('--lambda-start', type=float, default=0.0)
    arc.add_argument('--lambda-end', type=float, default=0.6)
    arc.add_argument('--steps', type=int, default=2000)
    arc.add_argument('--pair', type=parse_pair, default=None)

    loc = sub.add_parser('locate', parents=[common], help='grid scan and Newton refinement of EP2s')
    loc.add_argument('--delta-min', type=float, default=0.0)
    loc.add_argument('--delta-max', type=float, default=1.6)
    loc.add_argument('--lambda-min', type=float, default=0.0)
    loc.add_argument('--lambda-max', type=float, default=0.6)
    loc.add_argument('--grid-delta', type=int, default=64)
    loc.add_argument('--grid-lambda', type=int, default=64)
    loc.add_argument('--radius', type=float, default=1e-3, help='order-check radius')

    enc = sub.add_parser('encircle', parents=[common], help='track branches around a contour')
    _add_contour_arguments(enc)

    phase = sub.add_parser('phase', parents=[common], help='eigenvector phases around a contour')
    _add_contour_arguments(phase)
    phase.add_argument('--trajectory', default=None, help='trajectory CSV written by encircle')

    sub.add_parser('reproduce', parents=[common], help='regenerate every figure dataset')
    return parser


def _policy(args, policy):
    return LambdaImPolicy(
        policy.scale if args.lambda_im_scale is None else args.lambda_im_scale,
        policy.offset if args.lambda_im_offset is None else args.lambda_im_offset,
    )


def _contour(args, policy):
    return Contour(args.x0, args.y0, args.a, args.b, args.steps, args.loops,
                   'clockwise' if args.clockwise else 'anticlockwise', policy, args.theta0)


def run_arc(args, cfg, policy, writer):
    template = SweepSpec(0.0, args.lambda_start, args.lambda_end, args.steps, policy)
    pairs = [args.pair] if args.pair else list(PAIRS)
    records = []
    for trace in sweep_family(cfg, args.delta, template):
        writer.put_result('arc_delta_%s.csv' % format_number(trace.spec.delta), arc_csv(trace))
        records.append({
            'delta': trace.spec.delta,
            'classes': [classify(trace, pair).as_dict() for pair in pairs],
            'ambiguous_steps': len(trace.ambiguities),
        })
    summary = {'sweeps': records}
    writer.put_json('arc_summary.json', summary)
    return summary


def run_locate(args, cfg, policy, writer):
    located = locate(cfg, (args.delta_min, args.delta_max), (args.lambda_min, args.lambda_max),
                     (args.grid_delta, args.grid_lambda), policy, args.radius)
    summary = {
        'box': {'delta': [args.delta_min, args.delta_max], 'lambda_re': [args.lambda_min, args.lambda_max],
                'grid': [args.grid_delta, args.grid_lambda]},
        'candidates': [candidate.as_dict() for candidate in located],
    }
    writer.put_json('candidates.json', summary)
    return summary


def run_encircle(args, cfg, policy, writer):
    contour = _contour(args, policy)
    trajectory, monodromy = track_loop(cfg, contour, threshold=args.threshold)
    writer.put_result('trajectory.csv', trajectory_csv(trajectory))
    summary = {
        'contour': contour.snapshot(),
        'monodromy': monodromy.as_dict(),
        'events': [event.as_dict() for event in trajectory.events],
        'ambiguous_steps': len(trajectory.ambiguities),
    }
    writer.put_json('encircle_summary.json', summary)
    return summary


def _phase_summary(trajectory):
    series = accumulate_phase(trajectory)
    single = monodromy_between(trajectory.values, 0, trajectory.loop_end(1))
    switches = detect_phase_switch(series, trajectory.events)
    return series, {
        'monodromy': single.as_dict(),
        'events': [event.as_dict() for event in trajectory.events],
        'switches': [switch.as_dict() for switch in switches],
        'closure': closure_report(series, single).as_dict(),
    }


def run_phase(args, cfg, policy, writer):
    contour = _contour(args, policy)
    if args.trajectory:
        trajectory = read_trajectory_csv(args.trajectory, cfg, contour)
        trajectory.events = detect_conversions(trajectory, args.threshold)
    else:
        trajectory, _ = track_loop(cfg, contour, with_vectors=True, threshold=args.threshold)
    series, summary = _phase_summary(trajectory)
    summary['contour'] = trajectory.contour.snapshot()
    writer.put_result('phase.csv', phase_csv(series))
    writer.put_json('phase_summary.json', summary)
    return summary


def reproduce(cfg, policy, writer):
    """
    Every figure dataset plus a summary of the headline numbers.
    """
    summary = {}

    def arc_figure(name, deltas, pairs):
        traces = sweep_family(cfg, deltas, SweepSpec(0.0, policy=policy))
        writer.put_result(name + '.csv', family_csv(traces))
        summary[name] = {
            'classes': [dict(classify(t, pair).as_dict(), delta=t.spec.delta) for t in traces for pair in pairs],
        }

    arc_figure('fig1', (0.21, 0.23), [(2, 3)])
    arc_figure('fig2', (1.26, 1.29, 1.32), [(1, 2)])
    # E2 meets E3 near the first EP2 and E1 near the second
    arc_figure('fig3', (0.22, 1.3), PAIRS)
    summary['fig3']['estimates'] = [
        list(crossing_average(cfg, 0.21, 0.23, (2, 3), SweepSpec(0.0, policy=policy))),
        list(crossing_average(cfg, 1.29, 1.32, (1, 2), SweepSpec(0.0, policy=policy))),
    ]

    located = locate(cfg, policy=policy)
    summary['eps'] = [candidate.as_dict() for candidate in located]
    points = [(c.delta, c.lambda_re) for c in located]

    fig4 = []
    rows = b''
    for label, contour in (('black', FIG4_BLACK), ('black_nominal', FIG4_BLACK_NOMINAL), ('violet', FIG4_VIOLET)):
        contour = replace(contour, policy=policy)
        trajectory, monodromy = track_loop(cfg, contour)
        table = trajectory_csv(trajectory, label)
        rows += table if not rows else table.split(b'\n', 1)[1]
        fig4.append({
            'contour': label,
            'geometry': contour.snapshot(),
            'encloses': [encloses(contour, point) for point in points],
            'monodromy': monodromy.as_dict(),
            'squared': monodromy_power(cfg, contour, 2).as_dict(),
            'events': [event.as_dict() for event in trajectory.events],
        })
    writer.put_result('fig4.csv', rows)
    summary['fig4'] = fig4

    contour = replace(FIG5_DOUBLE, policy=policy, loops=3)
    trajectory, monodromy = track_loop(cfg, contour, with_vectors=True)
    first = replace(trajectory, thetas=trajectory.thetas[:contour.steps + 1],
                    points=trajectory.points[:contour.steps + 1], values=trajectory.values[:contour.steps + 1],
                    vectors=None, events=[])
    writer.put_result('fig5.csv', trajectory_csv(first))
    single = monodromy_between(trajectory.values, 0, contour.steps)
    events = [e for e in trajectory.events if abs(e.theta - contour.theta0) <= 2 * math.pi]
    summary['fig5'] = {
        'geometry': replace(contour, loops=1).snapshot(),
        'encloses': [encloses(contour, point) for point in points],
        'monodromy': single.as_dict(),
        'events': [event.as_dict() for event in events],
    }

    table = flip_table(cfg, replace(contour, loops=1), 3)
    writer.put_result('fig6.csv', flip_table_csv(table))
    summary['fig6'] = {'flips': [list(p) for p in table], 'three_loops': monodromy.as_dict()}

    trajectory.events = events
    series, phase_summary = _phase_summary(trajectory)
    writer.put_result('fig7.csv', phase_csv(series))
    summary['fig7'] = phase_summary

    writer.put_json('summary.json', summary)
    return summary


COMMANDS = {
    'arc': run_arc,
    'locate': run_locate,
    'encircle': run_encircle,
    'phase': run_phase,
    'reproduce': lambda args, cfg, policy, writer: reproduce(cfg, policy, writer),
}


def _flags(args):
    return {key: value for key, value in sorted(vars(args).items()) if key != 'subcommand'}


def run(argv=None, stdout=None):
    """
    Execute one subcommand and return the exit status: 0 on success, 1 on
    a tracker error (reported as JSON on ``stdout``), 2 on a usage error.
    """
    stdout = stdout or sys.stdout
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2

    logging.basicConfig(level=getattr(logging, args.log_level), stream=sys.stderr,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')

    writer = None
    try:
        cfg, policy = load_config(args.config)
        policy = _policy(args, policy)
        writer = start_writer(args.out)
        summary = COMMANDS[args.subcommand](args, cfg, policy, writer)
        manifest = RunManifest(args.subcommand, _flags(args), dict(cfg.snapshot(), policy=policy.snapshot()))
        writer.close(manifest)
        writer = None
    except (EP3TrackerException, OSError) as e:
        logger.error('%s failed: %s', args.subcommand, e)
        if writer is not None:
            try:
                writer.close()
            except OSError:
                pass
        stdout.write(canonical_json({'error': e.__class__.__name__, 'message': str(e),
                                     'subcommand': args.subcommand}).decode('utf-8'))
        return 1

    stdout.write(canonical_json(summary).decode('utf-8'))
    return 0


def main():
    sys.exit(run())
