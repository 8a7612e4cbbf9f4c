"""Noise-assisted excitation transport simulator: three flux-tunable qubits
coupled to an extraction resonator, driven through a waveguide and dephased by
engineered classical noise. The heavy lifting lives in the C++ extension."""

from natsim._core import *  # noqa: F401,F403
from natsim._core import __version__  # noqa: F401
