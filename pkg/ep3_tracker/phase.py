"""
Geometric phase carried by each eigenvector branch around a loop.

Phases are accumulated by discrete parallel transport: the phase gained
between two samples is the argument of the overlap of consecutive
eigenvectors, which is independent of the phase convention of either
vector.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ep3_tracker.exceptions import StaleTrajectoryError
from ep3_tracker.solver import canonical_gauge
from ep3_tracker.utils import thread_map, wrap_phase

logger = logging.getLogger(__name__)

SWITCH_WINDOW = 0.02 * math.pi


@dataclass
class PhaseSeries:
    """
    ``branch_phase[k, b - 1]`` follows branch ``b``; ``order_phase[k, r - 1]``
    follows whichever branch has the ``r``-th largest real part at sample
    ``k``, namely branch ``order_branches[k, r - 1]``.
    """
    thetas: np.ndarray
    values: np.ndarray
    branch_phase: np.ndarray
    order_phase: np.ndarray
    order_branches: np.ndarray
    steps: int

    def closure(self, loops=1):
        return self.branch_phase[loops * self.steps]


@dataclass(frozen=True)
class PhaseSwitch:
    theta: float
    pair: tuple
    event_theta: float

    def as_dict(self):
        return {
            'theta': self.theta,
            'theta_over_pi': self.theta / math.pi,
            'pair': list(self.pair),
            'event_theta_over_pi': self.event_theta / math.pi,
        }


@dataclass(frozen=True)
class ClosureReport:
    single_loop_defects: tuple
    restored: bool
    order: int
    order_loop_phases: tuple
    quantized: bool
    cycle_spread: Optional[float]

    def as_dict(self):
        return {
            'single_loop_defects': list(self.single_loop_defects),
            'single_loop_restored': self.restored,
            'order': self.order,
            'order_loop_phases': list(self.order_loop_phases) if self.order_loop_phases else None,
            'order_loop_quantized': self.quantized,
            'cycle_spread': self.cycle_spread,
        }


def gauge_fix(vectors):
    """
    Parallel-transport gauge: every vector after the first is rotated so
    that its overlap with the (already fixed) predecessor is real and
    positive.

    Raises
    ------
    StaleTrajectoryError
        Two consecutive vectors are orthogonal.
    """
    fixed = np.array(vectors, dtype=complex)
    for k in range(1, len(fixed)):
        overlap = np.vdot(fixed[k - 1], fixed[k])
        if abs(overlap) < 1e-12:
            raise StaleTrajectoryError('vectors %d and %d are orthogonal; refine the contour steps' % (k - 1, k))
        fixed[k] *= abs(overlap) / overlap
    return fixed


def transported_phase(vectors):
    """
    Cumulative phase ``sum(arg <v[i-1], v[i]>)`` along one branch, starting
    at 0.
    """
    canonical = np.array([canonical_gauge(v) for v in vectors])
    transported = gauge_fix(canonical)
    return np.unwrap(np.angle(np.einsum('ij,ij->i', transported.conj(), canonical)))


def _order_labels(values):
    return np.argsort(-values.real, axis=1, kind='stable') + 1


def accumulate_phase(traj):
    traj.with_vectors()
    columns = thread_map(lambda b: transported_phase(traj.vectors[:, b]), range(traj.values.shape[1]))
    branch_phase = np.stack(columns, axis=1)
    order_branches = _order_labels(traj.values)
    order_phase = np.take_along_axis(branch_phase, order_branches - 1, axis=1)
    return PhaseSeries(np.asarray(traj.thetas), traj.values, branch_phase, order_phase, order_branches,
                       traj.contour.steps)


def _exchanges(order_branches, k, r1, r2):
    before, after = order_branches[k], order_branches[k + 1]
    return (before[r1 - 1] == after[r2 - 1] and before[r2 - 1] == after[r1 - 1]
            and before[r1 - 1] != after[r1 - 1])


def detect_phase_switch(series, events, window=SWITCH_WINDOW):
    """
    Sorted-label exchanges of each event's pair near the event.

    For every conversion event the nearest sample step within ``window``
    where the two ranks trade branches is taken; the switch sits where the
    real parts of those branches cross.
    """
    thetas = series.thetas
    switches = []
    for event in events:
        r1, r2 = event.pair
        centre = int(np.argmin(np.abs(thetas - event.theta)))
        nearby = [k for k in range(len(thetas) - 1)
                  if abs(thetas[k] - event.theta) <= window and _exchanges(series.order_branches, k, r1, r2)]
        if not nearby:
            logger.info('no phase switch of ranks %s within %.3g rad of theta=%.4f pi',
                        event.pair, window, event.theta / math.pi)
            continue
        k = min(nearby, key=lambda i: abs(i - centre))
        a, b = series.order_branches[k, r1 - 1] - 1, series.order_branches[k, r2 - 1] - 1
        y0 = series.values[k, a].real - series.values[k, b].real
        y1 = series.values[k + 1, a].real - series.values[k + 1, b].real
        fraction = y0 / (y0 - y1) if y0 != y1 else 0.0
        theta = float(thetas[k] + fraction * (thetas[k + 1] - thetas[k]))
        switches.append(PhaseSwitch(theta, event.pair, event.theta))
    return switches


def closure_report(series, monodromy, tolerance=0.1):
    """
    Closure of the branch phases after one loop and after ``order`` loops.

    The single loop is restored when every wrapped phase is within
    ``tolerance`` of 0; the multi-loop closure is quantized when every
    branch returns to a multiple of 2 pi within ``tolerance``.
    ``cycle_spread`` is the largest wrapped difference between branches
    after ``order`` loops.
    """
    loops = (len(series.thetas) - 1) // series.steps
    defects = tuple(wrap_phase(p) for p in series.closure(1))
    order = monodromy.order
    phases, quantized, spread = (), False, None
    if loops >= order:
        wrapped = [wrap_phase(p) for p in series.closure(order)]
        phases = tuple(wrapped)
        quantized = all(abs(p) < tolerance for p in wrapped)
        spread = max(abs(wrap_phase(p - q)) for p in wrapped for q in wrapped)
    else:
        logger.info('series covers %d loop(s), fewer than the permutation order %d', loops, order)
    return ClosureReport(defects, all(abs(d) < tolerance for d in defects), order, phases, quantized, spread)
