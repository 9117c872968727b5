"""Chain policies for lossless Hamiltonian systems.

Thin wrapper over the compiled extension; everything public lives there.
"""

from _hamchain import *  # noqa: F401,F403
from _hamchain import __doc__  # noqa: F401
