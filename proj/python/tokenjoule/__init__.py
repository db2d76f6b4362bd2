# SPDX-License-Identifier: Apache-2.0
"""LLM inference time and GPU energy benchmark toolkit.

Thin Python layer over the C++ core: deterministic prompt-suite generation,
power-trace integration, energy estimation and GPU fleet matching.
"""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
