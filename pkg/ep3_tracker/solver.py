"""
Eigenvalues of the cubic secular equation.

Two independent routes are provided: the closed Cardano form in
:func:`cardano_roots`, and :func:`oracle_roots`, which diagonalises the
companion matrix. Right eigenvectors come from the adjugate of
``H - E*I``.
"""
import cmath
import itertools
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ep3_tracker.exceptions import EigenvectorResidualError, OracleConvergenceError
from ep3_tracker.model import build_hamiltonian, secular_coefficients

logger = logging.getLogger(__name__)

OMEGA = cmath.exp(2j * cmath.pi / 3)
OMEGA_BAR = OMEGA.conjugate()

DEGENERACY_TOL = 1e-10


@dataclass(frozen=True)
class CardanoParts:
    m_val: complex
    n_val: complex
    eta: complex
    eps_plus: complex
    eps_minus: complex

    @property
    def discriminant(self):
        return self.m_val ** 2 + self.n_val ** 3

    def roots(self):
        p, q = self.eps_plus, self.eps_minus
        return np.array([
            OMEGA * p + OMEGA_BAR * q - self.eta,
            p + q - self.eta,
            OMEGA_BAR * p + OMEGA * q - self.eta,
        ])


@dataclass
class EigenFrame:
    """
    Three eigenvalues at one control point.

    ``values[j]`` carries branch tag ``labels[j]``; ``vectors[j]`` is its
    unit right eigenvector when present.
    """
    values: np.ndarray
    vectors: Optional[np.ndarray] = None
    labels: tuple = (1, 2, 3)

    def min_gap(self):
        return min(abs(self.values[i] - self.values[j])
                   for i, j in itertools.combinations(range(len(self.values)), 2))


@dataclass(frozen=True)
class RightEigenvector:
    vector: np.ndarray
    degenerate: bool = False
    residual: float = 0.0


def _cbrt(z):
    if z == 0:
        return 0j
    return z ** (1.0 / 3.0)


def cardano_parts(c):
    """
    Cardano decomposition of the monic cubic ``E**3 + a1 E**2 + a2 E + a3``.

    ``m = -a1**3/27 + a1*a2/6 - a3/2`` and ``n = -a1**2/9 + a2/3``, so
    ``D = m**2 + n**3``. ``eps_plus`` is the principal cube root of
    ``m + sqrt(D)`` taken with the principal square root, and
    ``eps_minus = -n / eps_plus``.
    """
    a1, a2, a3 = c.a1, c.a2, c.a3
    m_val = -a1 ** 3 / 27 + a1 * a2 / 6 - a3 / 2
    n_val = -a1 ** 2 / 9 + a2 / 3
    root = cmath.sqrt(m_val ** 2 + n_val ** 3)
    upper, lower = m_val + root, m_val - root
    # (m + sqrt(D)) (m - sqrt(D)) = -n**3
    if abs(lower) > abs(upper):
        upper = -n_val ** 3 / lower
    eps_plus = _cbrt(upper)
    if abs(eps_plus) > 1e-14:
        eps_minus = -n_val / eps_plus
    else:
        eps_minus = _cbrt(lower)
    return CardanoParts(m_val, n_val, a1 / 3, eps_plus, eps_minus)


def cardano_roots(c):
    """
    Roots ``{w e+ + w' e- - eta, e+ + e- - eta, w' e+ + w e- - eta}`` in
    formula order, tagged 1, 2, 3.
    """
    return EigenFrame(cardano_parts(c).roots())


def discriminant(c):
    return cardano_parts(c).discriminant


COALESCING_ROOTS = {
    'omega': (1, 2),
    'omega_bar': (2, 3),
    'plain': (1, 3),
}


def coalescence_case(parts):
    """
    Which of ``w e+ = e-``, ``w' e+ = e-`` or ``e+ = e-`` is closest to
    holding. Formula roots (1, 2), (2, 3) and (1, 3) merge respectively.
    """
    p, q = parts.eps_plus, parts.eps_minus
    candidates = {
        'omega': abs(OMEGA * p - q),
        'omega_bar': abs(OMEGA_BAR * p - q),
        'plain': abs(p - q),
    }
    return min(candidates, key=candidates.get)


def oracle_roots(c, max_polish=50):
    """
    Roots from the companion-matrix eigenvalues, polished by Newton steps
    until ``|p(E)| < 1e-10 * (1 + |E|**3)``.

    Raises
    ------
    OracleConvergenceError
        If a root still misses the residual bound after ``max_polish``
        Newton steps.
    """
    a = c.as_array()
    companion = np.zeros((3, 3), dtype=complex)
    companion[0, :] = -a[1:]
    companion[1, 0] = 1.0
    companion[2, 1] = 1.0
    roots = np.linalg.eigvals(companion)

    def residual(energy):
        return abs(c.evaluate(energy)) / (1.0 + abs(energy) ** 3)

    polished = []
    for energy in roots:
        energy = complex(energy)
        for _ in range(max_polish):
            if residual(energy) < 1e-10:
                break
            slope = (3 * energy + 2 * c.a1) * energy + c.a2
            if slope == 0:
                break
            energy = energy - c.evaluate(energy) / slope
        if residual(energy) >= 1e-10:
            raise OracleConvergenceError(
                'companion root %r did not converge' % energy, residual(energy))
        polished.append(energy)
    return np.array(polished)


def canonical_gauge(vector):
    """
    Rotate ``vector`` so its largest-magnitude component is real positive.
    """
    vector = np.asarray(vector, dtype=complex)
    pivot = vector[np.argmax(np.abs(vector))]
    if pivot == 0:
        return vector
    return vector * (abs(pivot) / pivot)


def _inverse_iteration(a, shift, sweeps=3):
    n = a.shape[0]
    x = np.ones(n, dtype=complex) / np.sqrt(n)
    shifted = a + shift * np.eye(n)
    for _ in range(sweeps):
        try:
            x = np.linalg.solve(shifted, x)
        except np.linalg.LinAlgError:
            shifted = shifted + shift * np.eye(n)
            continue
        x /= np.linalg.norm(x)
    return x


def right_eigenvector(h, energy, tol=1e-8, degeneracy_tol=DEGENERACY_TOL):
    """
    Unit right eigenvector of ``h`` for ``energy``.

    The null vector of ``A = h - energy*I`` is the cross product of the two
    rows of ``A`` that give the longest product. When every product is
    shorter than 1e-12, inverse iteration takes over.

    Returns
    -------
    RightEigenvector
        ``degenerate`` is set when another eigenvalue of ``h`` lies within
        ``degeneracy_tol`` of ``energy``.
    """
    h = np.asarray(h, dtype=complex)
    a = h - energy * np.eye(3)
    best, best_norm = None, -1.0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        candidate = np.cross(a[i], a[j])
        norm = np.linalg.norm(candidate)
        if norm > best_norm:
            best, best_norm = candidate, norm

    if best_norm < 1e-12:
        scale = max(1.0, np.linalg.norm(h))
        vector = _inverse_iteration(a, 1e-10 * scale)
    else:
        vector = best / best_norm
    vector = canonical_gauge(vector)

    residual = float(np.linalg.norm(a @ vector))
    if residual > tol * max(1.0, np.linalg.norm(h)):
        raise EigenvectorResidualError(
            '%r is not an eigenvalue of the given matrix (residual %.3g)' % (energy, residual), residual)

    spread = np.sort(np.abs(np.linalg.eigvals(h) - energy))
    return RightEigenvector(vector, degenerate=bool(spread[1] < degeneracy_tol), residual=residual)


def eigenframe(cfg, p, with_vectors=False):
    """
    Eigenvalues at ``p`` sorted by descending real part and tagged 1, 2, 3,
    optionally with their right eigenvectors.
    """
    values = cardano_roots(secular_coefficients(cfg, p)).values
    values = values[np.argsort(-values.real, kind='stable')]
    vectors = None
    if with_vectors:
        h = build_hamiltonian(cfg, p)
        vectors = np.array([right_eigenvector(h, e).vector for e in values])
    return EigenFrame(values, vectors)


def eigenvectors_for(cfg, p, values):
    h = build_hamiltonian(cfg, p)
    return np.array([right_eigenvector(h, e).vector for e in values])
