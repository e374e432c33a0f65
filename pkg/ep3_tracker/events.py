import logging

logger = logging.getLogger(__name__)


class EventsException(Exception):
    pass


class Events:
    """
    Publish/subscribe bus for tracker progress.

    Slots are created on first attribute access and listeners attach with
    ``+=`` and detach with ``-=``::

        def on_conversion(theta, pair, branches, gap):
            ...

        TRACKER_SIGNAL.conversion += on_conversion

    When ``events`` is given, only those names may be used; a misspelled
    slot name raises :class:`EventsException` instead of silently creating
    a slot nobody fires.
    """

    def __init__(self, events=None):
        if events is None:
            return
        try:
            self.__events__ = tuple(events)
        except TypeError:
            raise AttributeError("events must be an iterable of names, got %s" % type(events).__name__)

    def __getattr__(self, name):
        # only reached for slots that do not exist yet
        if name.startswith('__'):
            raise AttributeError("%r object has no attribute %r" % (self.__class__.__name__, name))
        declared = self.__dict__.get('__events__')
        if declared is not None and name not in declared:
            raise EventsException("Event '%s' is not declared; known events: %s" % (name, ', '.join(declared)))
        slot = self.__dict__[name] = _EventSlot(name)
        return slot

    def fire(self, name, **payload):
        """
        Call every listener of ``name`` with ``payload`` as keyword
        arguments, unless signals are switched off by
        ``EP3_TRACKER_SIGNAL``.
        """
        from ep3_tracker.settings import get_settings

        slot = getattr(self, name)
        if not get_settings().SIGNAL:
            return
        if len(slot):
            logger.debug("firing '%s' to %d listener(s)", name, len(slot))
        slot(**payload)

    def __repr__(self):
        return '<Events %s>' % ', '.join(self.__dict__.get('__events__', ()))

    def __len__(self):
        return sum(1 for _ in self)

    def __iter__(self):
        return (slot for slot in list(self.__dict__.values()) if isinstance(slot, _EventSlot))


class _EventSlot:
    """
    Listeners of one named event, called in subscription order.
    """

    def __init__(self, name):
        self.__name__ = name
        self.listeners = []

    def __repr__(self):
        return "event '%s' (%d listener(s))" % (self.__name__, len(self.listeners))

    def __call__(self, *args, **payload):
        # a listener may unsubscribe itself while being called
        for listener in list(self.listeners):
            listener(*args, **payload)

    def __iadd__(self, listener):
        if not callable(listener):
            raise EventsException("listener of '%s' is not callable: %r" % (self.__name__, listener))
        self.listeners.append(listener)
        return self

    def __isub__(self, listener):
        self.listeners = [f for f in self.listeners if f != listener]
        return self

    def __len__(self):
        return len(self.listeners)

    def __iter__(self):
        return iter(list(self.listeners))
