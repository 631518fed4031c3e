"""Guest-program runner speaking tagged-JSON over stdin/stdout."""

__version__ = "0.1.0"
