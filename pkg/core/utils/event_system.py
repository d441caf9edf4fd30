"""
Simple event system so long-running computations can report progress without
knowing who is listening.

Monte Carlo blocks finish on worker threads, so every operation takes the lock.
"""
import threading
from core.utils.logger import debug, exception


class EventSystem:
    """
    Singleton publish/subscribe registry.
    """
    _instance = None
    _lock = threading.RLock()

    @classmethod
    def _get_instance(cls):
        """Get or create the singleton instance."""
        if cls._instance is None:
            with cls._lock:
                if cls._instance is None:
                    cls._instance = cls()
        return cls._instance

    def __init__(self):
        self._subscribers = {}

    @classmethod
    def subscribe(cls, event_name, callback):
        """
        Subscribe to an event.

        Args:
            event_name (str): Name of the event, e.g. ``"mc.block_done"``
            callback (callable): Called with the publisher's arguments
        """
        instance = cls._get_instance()
        with cls._lock:
            callbacks = instance._subscribers.setdefault(event_name, [])
            # Don't add duplicate callbacks
            if callback not in callbacks:
                callbacks.append(callback)

    @classmethod
    def unsubscribe(cls, event_name, callback):
        """Remove a callback; unknown callbacks are ignored."""
        instance = cls._get_instance()
        with cls._lock:
            try:
                instance._subscribers.get(event_name, []).remove(callback)
            except ValueError:
                pass

    @classmethod
    def publish(cls, event_name, *args, **kwargs):
        """
        Publish an event.

        Subscriber failures are logged and never propagate into the publisher.
        """
        instance = cls._get_instance()
        with cls._lock:
            callbacks = list(instance._subscribers.get(event_name, ()))

        for callback in callbacks:
            try:
                callback(*args, **kwargs)
            except Exception as e:
                exception(e, f"Error in event handler for '{event_name}'")

    @classmethod
    def clear_all(cls):
        """Clear all event subscriptions."""
        instance = cls._get_instance()
        with cls._lock:
            instance._subscribers.clear()
            debug("Cleared all event subscriptions")
