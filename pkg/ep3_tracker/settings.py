"""
Process settings read from the environment.

===========================  =======  ========================================
Variable                     Default  Meaning
===========================  =======  ========================================
EP3_TRACKER_THREADS          1        worker threads for sweeps, grid rows and
                                      contours
EP3_TRACKER_QUEUE_MAX_SIZE   16       bounded queue of the result writer
EP3_TRACKER_SIGNAL           true     fire TRACKER_SIGNAL events
===========================  =======  ========================================
"""
import os

from ep3_tracker.exceptions import SettingsError

_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')

_settings = None


def _positive_int(environ, name, default):
    if name not in environ:
        return default
    try:
        value = int(environ[name])
    except ValueError:
        value = 0
    if value < 1:
        raise SettingsError("""
        EP3 TRACKER EXCEPTION
        Value of %s must be an integer greater than 0, got %r
        """ % (name, environ[name]))
    return value


class Settings:

    def __init__(self, environ=None):
        if environ is None:
            environ = os.environ

        self.THREADS = _positive_int(environ, 'EP3_TRACKER_THREADS', 1)
        self.QUEUE_MAX_SIZE = _positive_int(environ, 'EP3_TRACKER_QUEUE_MAX_SIZE', 16)

        self.SIGNAL = True
        if 'EP3_TRACKER_SIGNAL' in environ:
            flag = environ['EP3_TRACKER_SIGNAL'].strip().lower()
            if flag in _TRUE:
                self.SIGNAL = True
            elif flag in _FALSE:
                self.SIGNAL = False
            else:
                raise SettingsError("""
                EP3 TRACKER EXCEPTION
                Value of EP3_TRACKER_SIGNAL must be a boolean flag, got %r
                """ % environ['EP3_TRACKER_SIGNAL'])

    def __repr__(self):
        return '<Settings threads=%d queue=%d signal=%s>' % (
            self.THREADS, self.QUEUE_MAX_SIZE, self.SIGNAL)


def get_settings():
    """
    Settings resolved from ``os.environ`` on first use and cached.
    """
    global _settings
    if _settings is None:
        _settings = Settings()
    return _settings


def reset_settings():
    global _settings
    _settings = None
