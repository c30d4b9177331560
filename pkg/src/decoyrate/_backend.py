"""Kernel selection: the compiled extension when importable, else pure Python.

Set ``DECOYRATE_BACKEND=python`` to force the fallback, ``=compiled`` to
require the extension.
"""
import os

_choice = os.environ.get("DECOYRATE_BACKEND", "auto").lower()

if _choice == "python":
    from . import _pykernels as kernels
    NAME = "python"
else:
    try:
        from . import _kernels as kernels
        NAME = "compiled"
    except ImportError:
        if _choice == "compiled":
            raise
        from . import _pykernels as kernels
        NAME = "python"

axis_terms = kernels.axis_terms
grid_min = kernels.grid_min
grid_fill = kernels.grid_fill
golden_axis = kernels.golden_axis
