"""
Second-order exceptional points as zeros of the Cardano discriminant.

``D(delta, lambda_re) = m**2 + n**3`` vanishes where two eigenvalues
coalesce. :func:`grid_scan` finds local minima of ``|D|`` on a grid,
:func:`refine` polishes them by damped Newton on ``(Re D, Im D)`` and
:func:`verify_order` checks the square-root splitting around the result.
"""
import logging
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ep3_tracker import TRACKER_SIGNAL
from ep3_tracker.exceptions import DomainError, DriftedSeedError, EP3TrackerException, NewtonDivergenceError
from ep3_tracker.model import ControlPoint, LambdaImPolicy, secular_coefficients
from ep3_tracker.solver import cardano_parts, coalescence_case, eigenframe
from ep3_tracker.utils import thread_map

logger = logging.getLogger(__name__)

CERTIFICATE_SECOND_ORDER = 'second order'
CERTIFICATE_REGULAR = 'regular'
CERTIFICATE_INCONCLUSIVE = 'inconclusive'


@dataclass(frozen=True)
class OrderCertificate:
    exponent: float
    certificate: str
    radii: tuple
    displacements: tuple

    def as_dict(self):
        return {
            'exponent': self.exponent,
            'certificate': self.certificate,
            'radii': list(self.radii),
            'displacements': list(self.displacements),
        }


@dataclass(frozen=True)
class EpCandidate:
    delta: float
    lambda_re: float
    residual: float
    pair: Optional[tuple] = None
    refined: bool = False
    lambda_im: Optional[float] = None
    iterations: int = 0
    degenerate_jacobian: bool = False
    eigenvalue: Optional[complex] = None
    cardano_case: Optional[str] = None
    certificate: Optional[OrderCertificate] = None

    def as_dict(self):
        data = {
            'delta': self.delta,
            'lambda_re': self.lambda_re,
            'lambda_im': self.lambda_im,
            'residual': self.residual,
            'pair': list(self.pair) if self.pair else None,
            'refined': self.refined,
            'iterations': self.iterations,
            'degenerate_jacobian': self.degenerate_jacobian,
            'cardano_case': self.cardano_case,
            'eigenvalue': None,
            'certificate': self.certificate.as_dict() if self.certificate else None,
        }
        if self.eigenvalue is not None:
            data['eigenvalue'] = [self.eigenvalue.real, self.eigenvalue.imag]
        return data


def discriminant_at(cfg, delta, lambda_re, policy=None):
    return cardano_parts(secular_coefficients(cfg, ControlPoint.from_policy(delta, lambda_re, policy))).discriminant


def closest_pair(values):
    """1-based labels of the two closest values."""
    best, pair = math.inf, None
    for i, j in ((0, 1), (1, 2), (0, 2)):
        gap = abs(values[i] - values[j])
        if gap < best:
            best, pair = gap, (i + 1, j + 1)
    return pair, best


def _check_range(name, bounds):
    lo, hi = bounds
    if not (math.isfinite(lo) and math.isfinite(hi)) or not lo < hi:
        raise DomainError('%s range must be finite and non-empty, got (%r, %r)' % (name, lo, hi))


def grid_scan(cfg, delta_range, lambda_range, grid=(64, 64), policy=None):
    """
    Strict 8-neighbour local minima of ``|D|`` on a uniform grid.

    Returns
    -------
    list of EpCandidate
        Unrefined, sorted by residual, ties going to the smaller delta.
    """
    _check_range('delta', delta_range)
    _check_range('lambda', lambda_range)
    n_delta, n_lambda = grid
    if n_delta < 8 or n_lambda < 8:
        raise DomainError('grid must be at least 8x8, got %dx%d' % (n_delta, n_lambda))
    policy = policy or LambdaImPolicy()

    deltas = np.linspace(delta_range[0], delta_range[1], n_delta)
    lambdas = np.linspace(lambda_range[0], lambda_range[1], n_lambda)
    rows = thread_map(lambda d: [abs(discriminant_at(cfg, d, lam, policy)) for lam in lambdas], deltas)
    field = np.array(rows)

    candidates = []
    for i in range(1, n_delta - 1):
        for j in range(1, n_lambda - 1):
            block = field[i - 1:i + 2, j - 1:j + 2]
            if np.sum(block <= field[i, j]) == 1:
                candidates.append(EpCandidate(float(deltas[i]), float(lambdas[j]), float(field[i, j]),
                                              lambda_im=float(policy(lambdas[j]))))
    candidates.sort(key=lambda c: (c.residual, c.delta))
    logger.info('grid scan %dx%d found %d local minima', n_delta, n_lambda, len(candidates))
    return candidates


def _residual_vector(cfg, x, policy):
    value = discriminant_at(cfg, x[0], x[1], policy)
    return np.array([value.real, value.imag])


def _finalize(cfg, x, residual, policy, iterations, degenerate=False):
    p = ControlPoint.from_policy(x[0], x[1], policy)
    frame = eigenframe(cfg, p)
    pair, _ = closest_pair(frame.values)
    eigenvalue = complex(0.5 * (frame.values[pair[0] - 1] + frame.values[pair[1] - 1]))
    case = coalescence_case(cardano_parts(secular_coefficients(cfg, p)))
    return EpCandidate(float(x[0]), float(x[1]), float(residual), pair, True, p.lambda_im,
                       iterations, degenerate, eigenvalue, case)


def refine(cfg, seed, policy=None, max_iter=50, fd_step=1e-7, residual_tol=1e-16, step_tol=1e-12,
           max_drift=0.1):
    """
    Damped Newton on ``(Re D, Im D)`` in ``(delta, lambda_re)`` with a
    forward-difference Jacobian.

    Iteration stops once ``|D| < residual_tol`` or the accepted step is
    shorter than ``step_tol``.

    Raises
    ------
    DriftedSeedError
        The result lies further than ``max_drift`` from the seed.
    NewtonDivergenceError
        No convergence within ``max_iter`` iterations, or a step that no
        damping can make descend while ``|D|`` is still above 1e-12.
    """
    policy = policy or LambdaImPolicy()
    start = np.array([seed.delta, seed.lambda_re], dtype=float)
    x = start.copy()
    f = _residual_vector(cfg, x, policy)
    if not np.all(np.isfinite(f)):
        raise DomainError('seed residual is not finite at (%g, %g)' % tuple(x))
    iterates = [tuple(x)]

    def done(point, iterations, degenerate=False):
        drift = float(np.hypot(*(point - start)))
        if drift > max_drift:
            raise DriftedSeedError('refinement drifted %.3g from seed (%g, %g)' % (drift, start[0], start[1]))
        return _finalize(cfg, point, float(np.hypot(*_residual_vector(cfg, point, policy))), policy,
                         iterations, degenerate)

    for iteration in range(max_iter):
        norm = float(np.hypot(*f))
        if norm < residual_tol:
            return done(x, iteration)

        jacobian = np.empty((2, 2))
        for k in range(2):
            shifted = x.copy()
            shifted[k] += fd_step
            jacobian[:, k] = (_residual_vector(cfg, shifted, policy) - f) / fd_step
        try:
            if np.linalg.cond(jacobian) > 1e14:
                raise np.linalg.LinAlgError('ill-conditioned')
            step = np.linalg.solve(jacobian, -f)
        except np.linalg.LinAlgError:
            logger.warning('singular Jacobian at (%g, %g); returning best point', x[0], x[1])
            return done(x, iteration, degenerate=True)

        damping = 1.0
        while damping > 1e-6:
            trial = x + damping * step
            f_trial = _residual_vector(cfg, trial, policy)
            if np.hypot(*f_trial) < norm:
                break
            damping *= 0.5
        else:
            if norm < 1e-12:
                return done(x, iteration)
            raise NewtonDivergenceError('no descent direction at (%g, %g), |D| = %.3g' % (x[0], x[1], norm),
                                        iterates)

        x, f = trial, f_trial
        iterates.append(tuple(x))
        if damping * np.hypot(*step) < step_tol:
            return done(x, iteration + 1)

    if np.hypot(*f) < 1e-12:
        return done(x, max_iter)
    raise NewtonDivergenceError('no convergence after %d iterations from (%g, %g)' % (max_iter, start[0], start[1]),
                                iterates)


def verify_order(cfg, ep, radius=1e-3, policy=None, samples=16):
    """
    Fit ``g ~ r**p`` on circles of radius ``r, r/2, r/4`` around ``ep``.

    ``g`` is the mean over each circle of the distance from the coalesced
    eigenvalue at the centre to the nearest eigenvalue. ``p`` near 0.5
    certifies a square-root branch point, ``p`` near 1 a regular point.
    """
    policy = policy or LambdaImPolicy()
    centre = eigenframe(cfg, ControlPoint.from_policy(ep.delta, ep.lambda_re, policy)).values
    pair = ep.pair or closest_pair(centre)[0]
    target = centre[pair[0] - 1]

    radii = (radius, radius / 2, radius / 4)
    angles = 2 * math.pi * np.arange(samples) / samples
    displacements = []
    for r in radii:
        moves = []
        for angle in angles:
            p = ControlPoint.from_policy(ep.delta + r * math.cos(angle), ep.lambda_re + r * math.sin(angle), policy)
            moves.append(np.min(np.abs(eigenframe(cfg, p).values - target)))
        displacements.append(float(np.mean(moves)))

    exponent = float(np.polyfit(np.log(radii), np.log(displacements), 1)[0])
    if abs(exponent - 0.5) < 0.1:
        certificate = CERTIFICATE_SECOND_ORDER
    elif abs(exponent - 1.0) < 0.1:
        certificate = CERTIFICATE_REGULAR
    else:
        certificate = CERTIFICATE_INCONCLUSIVE
    return OrderCertificate(exponent, certificate, radii, tuple(displacements))


def locate(cfg, delta_range=(0.0, 1.6), lambda_range=(0.0, 0.6), grid=(64, 64), policy=None, radius=1e-3,
           dedupe=1e-6):
    """
    Refined, de-duplicated EP2s inside the box, each with its order
    certificate, sorted by delta.
    """
    policy = policy or LambdaImPolicy()
    seeds = grid_scan(cfg, delta_range, lambda_range, grid, policy)

    def attempt(seed):
        try:
            return refine(cfg, seed, policy)
        except EP3TrackerException as e:
            logger.info('discarding seed (%g, %g): %s', seed.delta, seed.lambda_re, e)
            return None

    found = []
    for candidate in thread_map(attempt, seeds):
        if candidate is None:
            continue
        if not (delta_range[0] <= candidate.delta <= delta_range[1]
                and lambda_range[0] <= candidate.lambda_re <= lambda_range[1]):
            logger.info('discarding refined point (%g, %g) outside the box', candidate.delta, candidate.lambda_re)
            continue
        if any(math.hypot(candidate.delta - other.delta, candidate.lambda_re - other.lambda_re) < dedupe
               for other in found):
            continue
        found.append(candidate)

    located = []
    for candidate in sorted(found, key=lambda c: c.delta):
        candidate = replace(candidate, certificate=verify_order(cfg, candidate, radius, policy))
        TRACKER_SIGNAL.fire('candidate', delta=candidate.delta, lambda_re=candidate.lambda_re,
                            residual=candidate.residual, refined=candidate.refined, pair=candidate.pair)
        located.append(candidate)
    return located
