"""Pick the compiled kernel when importable, else the pure-Python one.

Set ``NVMIRROR_PURE=1`` to force the fallback.
"""
import os

if os.environ.get("NVMIRROR_PURE") == "1":
    from . import _kernels_py as kernels
else:
    try:
        from . import _kernels as kernels
    except ImportError:  # extension not built
        from . import _kernels_py as kernels

BACKEND = "compiled" if kernels.__name__.endswith("._kernels") else "python"

collected_power = kernels.collected_power
collected_power_scan = kernels.collected_power_scan
