"""
Three-level non-Hermitian Hamiltonian and its secular polynomial.

The Hamiltonian is ``H = H0 + lambda * Hp`` with the passive part
``H0 = diag(eps_j + i tau_j)`` and the coupling part::

    Hp = [[0,       delta - gamma, 0    ],
          [kappa,   0,             gamma],
          [0,       delta - kappa, 0    ]]

Levels 1 and 3 never couple directly.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from ep3_tracker.exceptions import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

DEFAULT_EPS = (0.76, 0.65, 0.3)
DEFAULT_TAU = (0.005, 0.0025, 0.0002)
DEFAULT_GAMMA = 0.95
DEFAULT_KAPPA = 0.3


def _triple(name, values):
    try:
        values = tuple(float(v) for v in values)
    except (TypeError, ValueError):
        raise ConfigurationError('%s must be a sequence of three numbers, got %r' % (name, values))
    if len(values) != 3:
        raise ConfigurationError('%s must hold exactly three values, got %d' % (name, len(values)))
    if not all(math.isfinite(v) for v in values):
        raise ConfigurationError('%s must be finite, got %r' % (name, values))
    return values


@dataclass(frozen=True)
class SystemConfig:
    """
    Passive spectrum and the fixed couplings.

    Parameters
    ----------
    eps : tuple of float
        Real parts of the passive levels.
    tau : tuple of float
        Imaginary parts of the passive levels, added as ``+1j * tau``.
    gamma, kappa : float
        Couplings entering ``Hp``.
    """
    eps: tuple = DEFAULT_EPS
    tau: tuple = DEFAULT_TAU
    gamma: float = DEFAULT_GAMMA
    kappa: float = DEFAULT_KAPPA

    def __post_init__(self):
        object.__setattr__(self, 'eps', _triple('eps', self.eps))
        object.__setattr__(self, 'tau', _triple('tau', self.tau))
        for name in ('gamma', 'kappa'):
            try:
                value = float(getattr(self, name))
            except (TypeError, ValueError):
                raise ConfigurationError('%s must be a number, got %r' % (name, getattr(self, name)))
            if not math.isfinite(value):
                raise ConfigurationError('%s must be finite, got %r' % (name, value))
            object.__setattr__(self, name, value)

        if len(set(self.eps)) < 3:
            logger.warning('passive levels %s are not pairwise distinct', self.eps)
        if self.gamma == self.kappa:
            logger.warning('gamma == kappa == %g: delta no longer separates the two couplings', self.gamma)

    @classmethod
    def default(cls):
        return cls()

    @property
    def passive(self):
        """Complex passive levels ``eps_j + 1j * tau_j``."""
        return np.array(self.eps) + 1j * np.array(self.tau)

    def snapshot(self):
        return {
            'eps': list(self.eps),
            'tau': list(self.tau),
            'gamma': self.gamma,
            'kappa': self.kappa,
        }


@dataclass(frozen=True)
class LambdaImPolicy:
    """
    Linear rule ``lambda_im = scale * lambda_re + offset``.
    """
    scale: float = 1.0
    offset: float = 0.0

    def __call__(self, lambda_re):
        return self.scale * lambda_re + self.offset

    def snapshot(self):
        return {'scale': self.scale, 'offset': self.offset}


@dataclass(frozen=True)
class ControlPoint:
    delta: float
    lambda_re: float
    lambda_im: float = 0.0

    @classmethod
    def from_policy(cls, delta, lambda_re, policy=None):
        policy = policy or LambdaImPolicy()
        return cls(float(delta), float(lambda_re), float(policy(lambda_re)))

    @property
    def lam(self):
        return complex(self.lambda_re, self.lambda_im)


@dataclass(frozen=True)
class SecularCoeffs:
    """
    Coefficients of ``E**3 + a1*E**2 + a2*E + a3``.
    """
    a1: complex
    a2: complex
    a3: complex

    def as_array(self):
        return np.array([1.0, self.a1, self.a2, self.a3], dtype=complex)

    def evaluate(self, energy):
        return ((energy + self.a1) * energy + self.a2) * energy + self.a3


def build_hamiltonian(cfg, p):
    lam = p.lam
    h = np.diag(cfg.passive).astype(complex)
    h[0, 1] = lam * (p.delta - cfg.gamma)
    h[1, 0] = lam * cfg.kappa
    h[1, 2] = lam * cfg.gamma
    h[2, 1] = lam * (p.delta - cfg.kappa)
    return h


def secular_coefficients(cfg, p):
    e1, e2, e3 = (complex(v) for v in cfg.passive)
    lam2 = p.lam ** 2
    left = cfg.gamma * (p.delta - cfg.kappa)
    right = cfg.kappa * (p.delta - cfg.gamma)
    return SecularCoeffs(
        a1=-(e1 + e2 + e3),
        a2=e1 * e2 + e2 * e3 + e3 * e1 - lam2 * (left + right),
        a3=-e1 * e2 * e3 + lam2 * (left * e1 + right * e3),
    )


def characteristic_coefficients(matrix):
    """
    Coefficients of ``det(E*I - matrix)`` from the trace, the principal
    2x2 minors and the determinant.
    """
    m = np.asarray(matrix, dtype=complex)
    minors = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
              + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
              + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
    return SecularCoeffs(
        a1=complex(-np.trace(m)),
        a2=complex(minors),
        a3=complex(-np.linalg.det(m)),
    )


def parameter_budget(m):
    """
    Number of real control parameters and of EP2s needed to steer ``m``
    interacting levels independently.

    Returns
    -------
    tuple of int
        ``((m*m + m - 2) // 2, m * (m - 1) // 2)``
    """
    if isinstance(m, bool) or not isinstance(m, (int, np.integer)):
        raise DomainError('m must be an integer, got %r' % (m,))
    if m < 2:
        raise DomainError('m must be at least 2, got %d' % m)
    return (m * m + m - 2) // 2, m * (m - 1) // 2
