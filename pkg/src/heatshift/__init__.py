"""Electric water heater control under a capacity tariff.

Simulation of a two-layer storage heater coupled to household PV, load
and hot-water data; clipped-ratio policy-gradient agents (an hourly
expert actor and a plain fully connected one); hysteresis and rule-based
baselines; capacity-tariff billing; and the pre-train / transfer / test
experiment protocol around them.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
