"""Stacked booster network for short-term energy load forecasting."""

try:
    from ._sbn import *  # noqa: F401,F403  (installed package layout)
    from ._sbn import __doc__  # noqa: F401
except ImportError:  # in-tree build: _sbn sits on sys.path
    from _sbn import *  # noqa: F401,F403
    from _sbn import __doc__  # noqa: F401
