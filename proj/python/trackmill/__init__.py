"""Noisy tracklet simulation, two-level clustering and self-training toolkit."""

try:
    from ._trackmill import *  # noqa: F401,F403
    from ._trackmill import TrackmillError  # noqa: F401
except ImportError:  # extension built outside the package (development layout)
    from _trackmill import *  # noqa: F401,F403
    from _trackmill import TrackmillError  # noqa: F401
