"""
Quasi-static encirclement of exceptional points.

A contour ``delta = x0 * (1 + a cos(theta))``,
``lambda_re = y0 * (1 + b sin(theta))`` is walked in uniform theta steps.
Eigenvalue branches are followed from one sample to the next by the
cheapest of the six assignments; the monodromy permutation is read off
by matching the final values against the initial ones.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, NamedTuple, Optional

import numpy as np
from scipy.signal import find_peaks, peak_prominences

from ep3_tracker import TRACKER_SIGNAL
from ep3_tracker.exceptions import (BisectionExhaustedError, DegenerateContourError, DomainError, MatcherError,
                                    MonodromyError)
from ep3_tracker.model import ControlPoint, LambdaImPolicy, secular_coefficients
from ep3_tracker.solver import EigenFrame, cardano_roots, eigenvectors_for
from ep3_tracker.utils import cycle_notation, thread_map

logger = logging.getLogger(__name__)

DIRECTIONS = ('anticlockwise', 'clockwise')
PAIRS = ((1, 2), (2, 3), (1, 3))


class Match(NamedTuple):
    order: tuple
    cost: float
    ambiguous: bool


def match_branches(previous, candidates):
    """
    Assignment of ``candidates`` to the branches of ``previous`` with the
    smallest total displacement.

    ``candidates[order[j]]`` continues branch ``j``. Costs within 1e-12 of
    each other are flagged ambiguous; the lexicographically first
    permutation wins.
    """
    previous = np.asarray(previous)
    candidates = np.asarray(candidates)
    if not (np.all(np.isfinite(previous)) and np.all(np.isfinite(candidates))):
        raise MatcherError('cannot match non-finite eigenvalues')

    best, best_cost, runner_up = None, math.inf, math.inf
    for order in itertools.permutations(range(len(previous))):
        cost = float(np.sum(np.abs(candidates[list(order)] - previous)))
        if cost < best_cost:
            best, best_cost, runner_up = order, cost, best_cost
        elif cost < runner_up:
            runner_up = cost
    return Match(best, best_cost, runner_up - best_cost < 1e-12)


def _min_gap(values):
    return min(abs(values[i] - values[j]) for i, j in itertools.combinations(range(len(values)), 2))


class BranchFollower:
    """
    Follows three eigenvalue branches along a one-parameter path.

    ``solve(t)`` returns the unordered eigenvalues at path parameter ``t``.
    A step whose largest single-branch move exceeds half the smallest gap
    at the new sample is bisected, at most ``max_depth`` times. Only the
    requested samples are kept.
    """

    def __init__(self, solve, max_depth=12):
        self.solve = solve
        self.max_depth = max_depth
        self.ambiguities = []
        self.bisections = 0

    def _advance(self, prev, t0, t1, depth):
        candidates = np.asarray(self.solve(t1))
        match = match_branches(prev, candidates)
        matched = candidates[list(match.order)]
        move = np.max(np.abs(matched - prev))
        if move > 0.5 * _min_gap(matched):
            if depth >= self.max_depth:
                raise BisectionExhaustedError(
                    'step refinement exhausted at t=%.12g; the path runs through an EP, '
                    'perturb the contour' % t1, t1)
            self.bisections += 1
            mid = 0.5 * (t0 + t1)
            half = self._advance(prev, t0, mid, depth + 1)
            return self._advance(half, mid, t1, depth + 1)
        if match.ambiguous:
            self.ambiguities.append(t1)
        return matched

    def follow(self, params):
        params = np.asarray(params, dtype=float)
        first = np.asarray(self.solve(params[0]))
        first = first[np.argsort(-first.real, kind='stable')]
        values = np.empty((len(params), len(first)), dtype=complex)
        values[0] = first
        for k in range(1, len(params)):
            values[k] = self._advance(values[k - 1], params[k - 1], params[k], 0)
        if self.ambiguities:
            logger.warning('%d ambiguous matching step(s); lexicographic tie-break applied',
                           len(self.ambiguities))
        return values


@dataclass(frozen=True)
class Contour:
    """
    Elliptical loop in the (delta, lambda_re) plane.

    ``a`` and ``b`` are relative semi-axes: the loop spans
    ``x0 * (1 +- a)`` and ``y0 * (1 +- b)``. Sampling starts at ``theta0``.
    """
    x0: float
    y0: float
    a: float
    b: float
    steps: int = 4096
    loops: int = 1
    direction: str = 'anticlockwise'
    policy: LambdaImPolicy = field(default_factory=LambdaImPolicy)
    theta0: float = 0.0

    def __post_init__(self):
        if int(self.steps) != self.steps or self.steps < 64:
            raise DomainError('contour needs at least 64 integer steps per loop, got %r' % (self.steps,))
        if int(self.loops) != self.loops or self.loops < 1:
            raise DomainError('contour needs at least one loop, got %r' % (self.loops,))
        if self.direction not in DIRECTIONS:
            raise DomainError('direction must be one of %s, got %r' % (DIRECTIONS, self.direction))
        for name in ('x0', 'y0', 'a', 'b', 'theta0'):
            if not math.isfinite(getattr(self, name)):
                raise DomainError('%s must be finite' % name)

    @property
    def sign(self):
        return 1.0 if self.direction == 'anticlockwise' else -1.0

    def thetas(self, loops=None):
        loops = self.loops if loops is None else loops
        return self.theta0 + self.sign * 2 * math.pi * np.arange(self.steps * loops + 1) / self.steps

    def snapshot(self):
        return {
            'x0': self.x0, 'y0': self.y0, 'a': self.a, 'b': self.b,
            'steps': self.steps, 'loops': self.loops, 'direction': self.direction,
            'policy': self.policy.snapshot(),
            'theta0': self.theta0,
        }


def contour_point(c, theta):
    return ControlPoint.from_policy(c.x0 * (1 + c.a * math.cos(theta)),
                                    c.y0 * (1 + c.b * math.sin(theta)),
                                    c.policy)


def encloses(c, point):
    """
    Whether ``point = (delta, lambda_re)`` lies strictly inside ``c``.
    """
    if c.x0 == 0 or c.y0 == 0 or c.a == 0 or c.b == 0:
        raise DegenerateContourError('contour (%g, %g, %g, %g) has a zero axis' % (c.x0, c.y0, c.a, c.b))
    delta, lambda_re = point
    return ((delta - c.x0) / (c.a * c.x0)) ** 2 + ((lambda_re - c.y0) / (c.b * c.y0)) ** 2 < 1


@dataclass(frozen=True)
class ConversionEvent:
    theta: float
    pair: tuple
    gap_at_event: float
    branches: tuple = ()
    closest_theta: Optional[float] = None
    closest_gap: Optional[float] = None

    def as_dict(self):
        return {
            'theta': self.theta,
            'theta_over_pi': self.theta / math.pi,
            'pair': list(self.pair),
            'branches': list(self.branches),
            'gap': self.gap_at_event,
            'closest_theta_over_pi': None if self.closest_theta is None else self.closest_theta / math.pi,
            'closest_gap': self.closest_gap,
        }


@dataclass(frozen=True)
class MonodromyResult:
    """
    ``permutation[b - 1]`` is the start position (1-based) that branch
    ``b`` occupies after ``loops_applied`` loops.
    """
    permutation: tuple
    loops_applied: int = 1
    closure_error: float = 0.0

    def then(self, other):
        return MonodromyResult(tuple(other.permutation[p - 1] for p in self.permutation),
                               self.loops_applied + other.loops_applied,
                               max(self.closure_error, other.closure_error))

    def power(self, n):
        result = MonodromyResult(tuple(range(1, len(self.permutation) + 1)), 0)
        for _ in range(n):
            result = result.then(self)
        return result

    @property
    def is_identity(self):
        return self.permutation == tuple(range(1, len(self.permutation) + 1))

    @property
    def order(self):
        k, current = 1, self
        while not current.is_identity:
            current = current.then(self)
            k += 1
        return k

    @property
    def cycles(self):
        return cycle_notation(self.permutation)

    def as_dict(self):
        return {
            'permutation': list(self.permutation),
            'cycles': self.cycles,
            'order': self.order,
            'loops': self.loops_applied,
            'closure_error': self.closure_error,
        }


@dataclass
class LoopTrajectory:
    """
    Branch-continuous eigenvalues along a contour.

    ``values[k, b - 1]`` is branch ``b`` at ``thetas[k]``; ``vectors``
    follows the same layout with a trailing axis of length 3.
    """
    config: object
    contour: Contour
    thetas: np.ndarray
    points: List[ControlPoint]
    values: np.ndarray
    vectors: Optional[np.ndarray] = None
    events: List[ConversionEvent] = field(default_factory=list)
    ambiguities: List[float] = field(default_factory=list)

    @property
    def samples(self):
        for k, theta in enumerate(self.thetas):
            vectors = None if self.vectors is None else self.vectors[k]
            yield theta, self.points[k], EigenFrame(self.values[k], vectors)

    @property
    def loops(self):
        return (len(self.thetas) - 1) // self.contour.steps

    def loop_end(self, loop):
        return loop * self.contour.steps

    def with_vectors(self):
        if self.vectors is None:
            self.vectors = np.array(thread_map(
                lambda k: eigenvectors_for(self.config, self.points[k], self.values[k]),
                range(len(self.points))))
        return self


def _permutation(initial, final):
    nearest = [int(np.argmin(np.abs(initial - value))) for value in final]
    if len(set(nearest)) != len(nearest):
        raise MonodromyError('final values %s do not map one-to-one onto the initial values; '
                             'increase the contour steps' % np.array2string(final, precision=6))
    error = max(abs(final[b] - initial[i]) for b, i in enumerate(nearest))
    return tuple(i + 1 for i in nearest), float(error)


def monodromy_between(values, start, stop):
    permutation, error = _permutation(values[start], values[stop])
    return MonodromyResult(permutation, 1, error)


def trace_contour(cfg, c, with_vectors=False):
    """
    Follow the branches around every loop of ``c``.
    """
    thetas = c.thetas()

    def solve(theta):
        return cardano_roots(secular_coefficients(cfg, contour_point(c, theta))).values

    follower = BranchFollower(solve)
    values = follower.follow(thetas)
    points = [contour_point(c, theta) for theta in thetas]
    logger.info('traced %d samples around (%g, %g, %g, %g) with %d bisection(s)',
                len(thetas), c.x0, c.y0, c.a, c.b, follower.bisections)

    trajectory = LoopTrajectory(cfg, c, thetas, points, values, ambiguities=follower.ambiguities)
    if with_vectors:
        trajectory.with_vectors()

    for loop in range(1, c.loops + 1):
        permutation, _ = _permutation(values[0], values[trajectory.loop_end(loop)])
        TRACKER_SIGNAL.fire('loop_closed', loop=loop, permutation=permutation)
    return trajectory


def track_loop(cfg, c, with_vectors=False, threshold=None):
    """
    Track ``c`` and return the trajectory with its conversion events and
    the monodromy over all of its loops.

    Raises
    ------
    BisectionExhaustedError
        The contour passes numerically through an EP.
    MonodromyError
        The final values do not map one-to-one onto the initial ones.
    """
    trajectory = trace_contour(cfg, c, with_vectors)
    permutation, error = _permutation(trajectory.values[0], trajectory.values[-1])
    trajectory.events = detect_conversions(trajectory, threshold)
    return trajectory, MonodromyResult(permutation, c.loops, error)


def monodromy_power(cfg, c, n):
    if n < 1:
        raise DomainError('n must be at least 1, got %r' % (n,))
    _, result = track_loop(cfg, replace(c, loops=n))
    return result


def flip_table(cfg, c, loops=3):
    """
    Start positions occupied by each branch after every completed loop.

    Returns
    -------
    list of tuple
        Entry ``k - 1`` is the permutation after ``k`` loops.
    """
    trajectory = trace_contour(cfg, replace(c, loops=loops))
    return [_permutation(trajectory.values[0], trajectory.values[trajectory.loop_end(k)])[0]
            for k in range(1, loops + 1)]


def _ranks(values):
    order = np.argsort(-values.real, kind='stable')
    ranks = np.empty(len(values), dtype=int)
    ranks[order] = np.arange(1, len(values) + 1)
    return ranks


def _claims(gap, exchanges, threshold):
    """
    ``(distance, exchange, minimum)`` for every gap minimum at or below
    ``threshold`` with a real-order exchange between its prominence bases.

    The bases are cut at the neighbouring minima so each minimum only sees
    its own valley; the exchange nearest the minimum is claimed.
    """
    minima, _ = find_peaks(-gap)
    deep, _ = find_peaks(-gap, height=-threshold)
    if not len(deep):
        return []
    _, left_bases, right_bases = peak_prominences(-gap, deep)
    claims = []
    for k, left, right in zip(deep, left_bases, right_bases):
        idx = int(np.searchsorted(minima, k))
        if idx > 0:
            left = max(left, minima[idx - 1])
        if idx + 1 < len(minima):
            right = min(right, minima[idx + 1])
        inside = exchanges[(exchanges >= left) & (exchanges < right)]
        if len(inside):
            q = inside[np.argmin(np.abs(inside + 0.5 - k))]
            claims.append((abs(q + 0.5 - k), int(q), int(k)))
    return sorted(claims)


def detect_conversions(traj, threshold=None):
    """
    Points where a branch pair exchanges its real order next to one of its
    closest approaches.

    Closest approaches are the minima of the pair gap at or below
    ``threshold``, by default the median of all pairwise gaps along the
    trajectory. Each one claims the nearest sign change of the real-part
    difference in its own valley. The event sits at the interpolated zero
    of that difference; ``closest_theta`` keeps the parabolic estimate of
    the gap minimum. Pairs are reported by their descending-Re ranks at
    the exchange.
    """
    values, thetas = traj.values, traj.thetas
    gaps = {pair: np.abs(values[:, pair[0] - 1] - values[:, pair[1] - 1]) for pair in PAIRS}
    if threshold is None:
        threshold = float(np.median(np.concatenate(list(gaps.values()))))
    if threshold <= 0 or len(thetas) < 3:
        return []

    step = thetas[1] - thetas[0]
    events = []
    for pair, gap in gaps.items():
        diff = values[:, pair[0] - 1].real - values[:, pair[1] - 1].real
        exchanges = np.flatnonzero(np.sign(diff[:-1]) != np.sign(diff[1:]))
        if not len(exchanges):
            continue
        claimed = set()
        for _, q, k in _claims(gap, exchanges, threshold):
            if q in claimed:
                continue
            claimed.add(q)
            fraction = diff[q] / (diff[q] - diff[q + 1]) if diff[q] != diff[q + 1] else 0.0
            curvature = gap[k - 1] - 2 * gap[k] + gap[k + 1]
            offset = 0.5 * (gap[k - 1] - gap[k + 1]) / curvature if curvature > 0 else 0.0
            ranks = _ranks(values[q])
            events.append(ConversionEvent(
                theta=float(thetas[q] + fraction * step),
                pair=tuple(sorted((int(ranks[pair[0] - 1]), int(ranks[pair[1] - 1])))),
                gap_at_event=float(gap[q] + fraction * (gap[q + 1] - gap[q])),
                branches=pair,
                closest_theta=float(thetas[k] + offset * step),
                closest_gap=float(gap[k]),
            ))

    events.sort(key=lambda e: (e.theta - thetas[0]) * math.copysign(1.0, step))
    for event in events:
        TRACKER_SIGNAL.fire('conversion', theta=event.theta, pair=event.pair,
                            branches=event.branches, gap=event.gap_at_event)
    return events
