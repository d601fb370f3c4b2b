"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback. Set ``HMCF_PURE_PYTHON=1`` to force the fallback.
"""
import os

if os.environ.get("HMCF_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as _impl
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        from . import _pykernels as _impl

BACKEND = "cython" if _impl.__name__.endswith("_ckernels") else "python"

FLOW = _impl.FLOW
STRING = _impl.STRING
support_accel = _impl.support_accel
max_char_speed = _impl.max_char_speed
string_accel = _impl.string_accel
radial_dp54 = _impl.radial_dp54
