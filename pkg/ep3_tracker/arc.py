"""
Avoided resonance crossings along lambda sweeps at fixed delta.
"""
import enum
import logging
import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from ep3_tracker.encircle import BranchFollower
from ep3_tracker.exceptions import DomainError, InconsistentTraceError, NoEPBracketError
from ep3_tracker.model import ControlPoint, LambdaImPolicy, secular_coefficients
from ep3_tracker.solver import EigenFrame, cardano_roots
from ep3_tracker.utils import thread_map

logger = logging.getLogger(__name__)


class ArcKind(enum.Enum):
    RE_CROSS_IM_ANTI = 'ReCross_ImAnti'
    RE_ANTI_IM_CROSS = 'ReAnti_ImCross'
    NO_INTERACTION = 'NoInteraction'


@dataclass(frozen=True)
class SweepSpec:
    delta: float
    lambda_re_start: float = 0.0
    lambda_re_end: float = 0.6
    steps: int = 2000
    policy: LambdaImPolicy = field(default_factory=LambdaImPolicy)

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.delta, self.lambda_re_start, self.lambda_re_end)):
            raise DomainError('sweep bounds must be finite')
        if self.lambda_re_start > self.lambda_re_end:
            raise DomainError('sweep runs backwards: %g > %g' % (self.lambda_re_start, self.lambda_re_end))
        if self.lambda_re_start < self.lambda_re_end and self.steps < 2:
            raise DomainError('a sweep needs at least 2 steps, got %r' % (self.steps,))

    def lambdas(self):
        if self.lambda_re_start == self.lambda_re_end:
            return np.array([self.lambda_re_start])
        return np.linspace(self.lambda_re_start, self.lambda_re_end, self.steps + 1)

    def snapshot(self):
        return {
            'delta': self.delta,
            'lambda_re_start': self.lambda_re_start,
            'lambda_re_end': self.lambda_re_end,
            'steps': self.steps,
            'policy': self.policy.snapshot(),
        }


@dataclass
class ArcTrace:
    """
    ``values[k, b - 1]`` is branch ``b`` at ``points[k]``.
    """
    spec: SweepSpec
    points: List[ControlPoint]
    values: np.ndarray
    ambiguities: List[float] = field(default_factory=list)

    @property
    def frames(self):
        return [(p, EigenFrame(v)) for p, v in zip(self.points, self.values)]

    @property
    def lambdas(self):
        return np.array([p.lambda_re for p in self.points])


@dataclass(frozen=True)
class ArcClass:
    pair: tuple
    kind: ArcKind
    crossing_lambda: Optional[float] = None

    def as_dict(self):
        return {'pair': list(self.pair), 'kind': self.kind.value, 'crossing_lambda': self.crossing_lambda}


def sweep(cfg, spec):
    """
    Branch-continuous eigenvalues along ``lambda_re`` at fixed ``delta``,
    labelled by descending real part at the first sample.
    """
    lambdas = spec.lambdas()

    def solve(lambda_re):
        p = ControlPoint.from_policy(spec.delta, lambda_re, spec.policy)
        return cardano_roots(secular_coefficients(cfg, p)).values

    follower = BranchFollower(solve)
    values = follower.follow(lambdas)
    points = [ControlPoint.from_policy(spec.delta, lam, spec.policy) for lam in lambdas]
    logger.debug('swept delta=%g over %d samples', spec.delta, len(points))
    return ArcTrace(spec, points, values, follower.ambiguities)


def sweep_family(cfg, deltas, template=None):
    template = template or SweepSpec(delta=0.0)
    return thread_map(lambda delta: sweep(cfg, replace(template, delta=float(delta))), deltas)


def pair_gap_profile(trace, pair):
    i, j = _pair_index(pair)
    return trace.lambdas, np.abs(trace.values[:, i] - trace.values[:, j])


def _pair_index(pair):
    i, j = sorted(pair)
    if i == j or i < 1 or j > 3:
        raise DomainError('pair must name two distinct branches out of 1..3, got %r' % (pair,))
    return i - 1, j - 1


def _interaction_window(gap, depth):
    k = int(np.argmin(gap))
    limit = gap[k] + depth * (gap[0] - gap[k])
    lo = k
    while lo > 0 and gap[lo - 1] < limit:
        lo -= 1
    hi = k
    while hi < len(gap) - 1 and gap[hi + 1] < limit:
        hi += 1
    return lo, hi


def _crossing(lambdas, diff, lo, hi):
    sign = np.sign(diff[lo:hi + 1])
    flips = np.nonzero(sign[:-1] != sign[1:])[0]
    if not len(flips):
        return None
    k = lo + int(flips[-1])
    x0, x1, y0, y1 = lambdas[k], lambdas[k + 1], diff[k], diff[k + 1]
    if y1 == y0:
        return float(x0)
    return float(x0 - y0 * (x1 - x0) / (y1 - y0))


def classify(trace, pair, depth=0.5):
    """
    Which of the real or imaginary difference of ``pair`` changes sign
    across the pair's interaction window.

    The window is the stretch around the closest approach where the gap
    stays below ``g_min + depth * (g_0 - g_min)``. A pair that never gets
    closer than half its initial gap does not interact.

    Raises
    ------
    InconsistentTraceError
        Both differences flip inside the window.
    """
    if len(trace.points) < 3:
        raise DomainError('classification needs at least 3 frames, got %d' % len(trace.points))
    i, j = _pair_index(pair)
    pair = (i + 1, j + 1)
    lambdas, gap = pair_gap_profile(trace, pair)
    if gap.min() >= 0.5 * gap[0]:
        return ArcClass(pair, ArcKind.NO_INTERACTION)

    lo, hi = _interaction_window(gap, depth)
    diff = trace.values[:, i] - trace.values[:, j]
    re_flip = np.sign(diff[lo].real) != np.sign(diff[hi].real)
    im_flip = np.sign(diff[lo].imag) != np.sign(diff[hi].imag)

    if re_flip and im_flip:
        raise InconsistentTraceError(
            'pair %s flips both real and imaginary order near lambda_re=%g at delta=%g; '
            'the sweep crossed an EP' % (pair, lambdas[int(np.argmin(gap))], trace.spec.delta))
    if re_flip:
        return ArcClass(pair, ArcKind.RE_CROSS_IM_ANTI, _crossing(lambdas, diff.real, lo, hi))
    if im_flip:
        return ArcClass(pair, ArcKind.RE_ANTI_IM_CROSS, _crossing(lambdas, diff.imag, lo, hi))
    return ArcClass(pair, ArcKind.NO_INTERACTION)


def crossing_average(cfg, delta_below, delta_above, pair, template=None):
    """
    Coarse EP estimate from two sweeps that straddle it.

    Returns
    -------
    tuple of float
        ``(delta_mid, lambda_estimate)``: the midpoint in delta and the mean
        of the two crossing positions.
    """
    below, above = sweep_family(cfg, (delta_below, delta_above), template)
    first, second = classify(below, pair), classify(above, pair)
    if ArcKind.NO_INTERACTION in (first.kind, second.kind) or first.kind == second.kind:
        raise NoEPBracketError('delta %g and %g classify as %s and %s for pair %s; no EP between them' % (
            delta_below, delta_above, first.kind.value, second.kind.value, tuple(pair)))
    return 0.5 * (delta_below + delta_above), 0.5 * (first.crossing_lambda + second.crossing_lambda)
