"""Readout chain: DQD charge states, spin-to-charge conversion, TIA and detection."""

from .spin_to_charge import *  # noqa: F401,F403
from .spin_to_charge import __all__ as _stc
from .stability import *  # noqa: F401,F403
from .stability import __all__ as _stab
from .tia import *  # noqa: F401,F403
from .tia import __all__ as _tia

__all__ = [*_stab, *_stc, *_tia]
