"""
TOML configuration of the physical system and the lambda_im policy.

::

    [passive]
    eps = [0.76, 0.65, 0.3]
    tau = [0.005, 0.0025, 0.0002]

    [coupling]
    gamma = 0.95
    kappa = 0.3

    [policy]
    scale = 1.0
    offset = 0.0
"""
import logging
import sys

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ep3_tracker.exceptions import ConfigurationError
from ep3_tracker.model import LambdaImPolicy, SystemConfig

logger = logging.getLogger(__name__)

KNOWN_SECTIONS = {
    'passive': ('eps', 'tau'),
    'coupling': ('gamma', 'kappa'),
    'policy': ('scale', 'offset'),
}


def _section(document, name):
    section = document.get(name, {})
    if not isinstance(section, dict):
        raise ConfigurationError('[%s] must be a table' % name)
    for key in section:
        if key not in KNOWN_SECTIONS[name]:
            logger.warning('ignoring unknown key %r in [%s]', key, name)
    return section


def _number(section, name, key, default):
    value = section.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError('[%s] %s must be a number, got %r' % (name, key, value))
    return float(value)


def parse_config(document):
    """
    Build ``(SystemConfig, LambdaImPolicy)`` from a parsed TOML mapping.
    Missing keys keep their defaults.
    """
    for name in document:
        if name not in KNOWN_SECTIONS:
            logger.warning('ignoring unknown section [%s]', name)

    defaults = SystemConfig.default()
    passive = _section(document, 'passive')
    coupling = _section(document, 'coupling')
    policy = _section(document, 'policy')

    cfg = SystemConfig(
        eps=passive.get('eps', defaults.eps),
        tau=passive.get('tau', defaults.tau),
        gamma=_number(coupling, 'coupling', 'gamma', defaults.gamma),
        kappa=_number(coupling, 'coupling', 'kappa', defaults.kappa),
    )
    return cfg, LambdaImPolicy(
        scale=_number(policy, 'policy', 'scale', 1.0),
        offset=_number(policy, 'policy', 'offset', 0.0),
    )


def load_config(path=None):
    if path is None:
        return SystemConfig.default(), LambdaImPolicy()
    try:
        with open(path, 'rb') as fh:
            document = tomllib.load(fh)
    except OSError as e:
        raise ConfigurationError('cannot read configuration %s: %s' % (path, e))
    except tomllib.TOMLDecodeError as e:
        raise ConfigurationError('malformed configuration %s: %s' % (path, e))
    logger.info('loaded configuration from %s', path)
    return parse_config(document)
