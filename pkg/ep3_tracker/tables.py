"""
CSV renderings of sweeps, trajectories and phase series.
"""
import csv
import io
import math

import numpy as np

from ep3_tracker.encircle import Contour, LoopTrajectory
from ep3_tracker.exceptions import ConfigurationError
from ep3_tracker.model import ControlPoint
from ep3_tracker.utils import complex_cells, format_number

BRANCH_FIELDS = ['E1_re', 'E1_im', 'E2_re', 'E2_im', 'E3_re', 'E3_im']


def render_csv(field_names, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(field_names)
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue().encode('utf-8')


def _branch_cells(values):
    cells = []
    for value in values:
        cells.extend(complex_cells(value))
    return cells


def arc_rows(trace):
    for point, values in zip(trace.points, trace.values):
        yield [format_number(point.lambda_re), format_number(point.lambda_im)] + _branch_cells(values)


def arc_csv(trace):
    return render_csv(['lambda_re', 'lambda_im'] + BRANCH_FIELDS, arc_rows(trace))


def family_csv(traces):
    rows = []
    for trace in traces:
        rows.extend([format_number(trace.spec.delta)] + row for row in arc_rows(trace))
    return render_csv(['delta', 'lambda_re', 'lambda_im'] + BRANCH_FIELDS, rows)


def trajectory_rows(traj):
    for theta, point, values in zip(traj.thetas, traj.points, traj.values):
        yield ([format_number(theta), format_number(theta / math.pi), format_number(point.delta),
                format_number(point.lambda_re), format_number(point.lambda_im)] + _branch_cells(values))


TRAJECTORY_FIELDS = ['theta', 'theta_over_pi', 'delta', 'lambda_re', 'lambda_im'] + BRANCH_FIELDS


def trajectory_csv(traj, label=None):
    if label is None:
        return render_csv(TRAJECTORY_FIELDS, trajectory_rows(traj))
    return render_csv(['contour'] + TRAJECTORY_FIELDS, ([label] + row for row in trajectory_rows(traj)))


PHASE_FIELDS = ['theta', 'theta_over_pi',
                'phi_branch_1', 'phi_branch_2', 'phi_branch_3',
                'phi_order_1', 'phi_order_2', 'phi_order_3',
                'order_branch_1', 'order_branch_2', 'order_branch_3']


def phase_csv(series):
    def rows():
        for k, theta in enumerate(series.thetas):
            yield ([format_number(theta), format_number(theta / math.pi)]
                   + [format_number(p) for p in series.branch_phase[k]]
                   + [format_number(p) for p in series.order_phase[k]]
                   + [str(int(b)) for b in series.order_branches[k]])
    return render_csv(PHASE_FIELDS, rows())


def flip_table_csv(table):
    rows = []
    for loop, permutation in enumerate(table, start=1):
        for branch, position in enumerate(permutation, start=1):
            rows.append([str(loop), str(branch), str(position)])
    return render_csv(['loop', 'branch', 'start_position'], rows)


def read_trajectory_csv(path, cfg, contour):
    """
    Rebuild a :class:`LoopTrajectory` from a CSV written by
    :func:`trajectory_csv`.

    Steps per loop, loop count, direction and starting angle are taken
    from the theta column;the geometry of ``contour`` is kept for the record.
    """
    try:
        with open(path, newline='') as fh:
            rows = list(csv.DictReader(fh))
    except OSError as e:
        raise ConfigurationError('cannot read trajectory %s: %s' % (path, e))
    missing = [name for name in TRAJECTORY_FIELDS if rows and name not in rows[0]]
    if len(rows) < 2 or missing:
        raise ConfigurationError('%s is not a trajectory table (missing %s)' % (path, missing or 'rows'))

    thetas = np.array([float(row['theta']) for row in rows])
    spacing = thetas[1] - thetas[0]
    steps = int(round(2 * math.pi / abs(spacing)))
    loops = (len(thetas) - 1) // steps
    if loops < 1 or steps * loops + 1 != len(thetas):
        raise ConfigurationError('%s does not hold whole loops (%d samples, %d per loop)' % (path, len(thetas), steps))

    contour = Contour(contour.x0, contour.y0, contour.a, contour.b, steps, loops,
                      'anticlockwise' if spacing > 0 else 'clockwise', contour.policy, float(thetas[0]))
    points = [ControlPoint(float(row['delta']), float(row['lambda_re']), float(row['lambda_im'])) for row in rows]
    values = np.array([[complex(float(row['E%d_re' % b]), float(row['E%d_im' % b])) for b in (1, 2, 3)]
                       for row in rows])
    return LoopTrajectory(cfg, contour, thetas, points, values)
