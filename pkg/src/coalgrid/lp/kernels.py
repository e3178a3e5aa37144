"""Select the compiled simplex kernels when available, else the numpy fallback.

Set ``COALGRID_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels

BACKEND = "python"
pivot = _pykernels.pivot
select_entering = _pykernels.select_entering
ratio_test = _pykernels.ratio_test

if not os.environ.get("COALGRID_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        pivot = _ckernels.pivot
        select_entering = _ckernels.select_entering
        ratio_test = _ckernels.ratio_test

AT_LOWER = _pykernels.AT_LOWER
AT_UPPER = _pykernels.AT_UPPER
BASIC = _pykernels.BASIC
BARRED = _pykernels.BARRED
