"""Control-sequence language and interpreter."""

from importlib import resources

from .engine import *  # noqa: F401,F403
from .engine import __all__ as _engine
from .parser import *  # noqa: F401,F403
from .parser import __all__ as _parser

__all__ = [*_parser, *_engine, "bundled_fig3"]


def bundled_fig3() -> str:
    """Text of the bundled A-G manipulation/readout sequence."""
    return resources.files(__package__).joinpath("fig3.seq").read_text(encoding="utf-8")
