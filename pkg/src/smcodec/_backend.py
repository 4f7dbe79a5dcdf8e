"""Kernel backend selection.

The compiled extension is used when it imports; set ``SMCODEC_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

if os.environ.get("SMCODEC_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND


def available_backends():
    """Map of backend name to kernel module for every importable backend."""
    from . import _pykernels

    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
