"""Hot array kernels with backend selection at import time.

The compiled Cython extension is preferred when importable; the pure-numpy
reference is the fallback. ``VIDFACTOR_BACKEND=numpy|cython`` forces a
backend (forcing ``cython`` raises if the extension is missing). Both
backends are bit-identical by contract, which tests/test_kernels.py checks.
"""

import os

from . import reference

_forced = os.environ.get("VIDFACTOR_BACKEND", "").strip().lower()

if _forced == "numpy":
    _impl = reference
elif _forced == "cython":
    from . import _opt as _impl  # noqa: F401  (ImportError is the intended failure)
else:
    try:
        from . import _opt as _impl
    except ImportError:
        _impl = reference

BACKEND_NAME = _impl.BACKEND_NAME
extract_patches3d = _impl.extract_patches3d
maxpool3d_forward = _impl.maxpool3d_forward
maxpool3d_backward = _impl.maxpool3d_backward


def available_backends():
    """Return the importable backend modules, reference first."""
    backends = [reference]
    try:
        from . import _opt

        backends.append(_opt)
    except ImportError:
        pass
    return backends
