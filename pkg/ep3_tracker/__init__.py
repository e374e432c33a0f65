import logging

from ep3_tracker.events import Events

__version__ = '0.1.0'

TRACKER_SIGNAL = Events(('candidate', 'conversion', 'loop_closed', 'output_written'))

logging.getLogger(__name__).addHandler(logging.NullHandler())
