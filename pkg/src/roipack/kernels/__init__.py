"""Hot pixel kernels with selectable backend.

Two interchangeable implementations exist: a numba-JIT one
(``nb_impl``) and a pure-numpy one (``np_impl``).  Selection is driven
by the ``ROIPACK_BACKEND`` environment variable:

* ``auto`` (default): numba when importable, numpy otherwise
* ``numba``: require the JIT backend, fail loudly if unavailable
* ``numpy``: force the pure-numpy fallback

``benchmarks/bench_kernels.py`` compares the two.
"""

import os

from . import np_impl

_choice = os.environ.get("ROIPACK_BACKEND", "auto").lower()

if _choice == "numpy":
    _impl = np_impl
    BACKEND = "numpy"
elif _choice == "numba":
    from . import nb_impl as _impl

    BACKEND = "numba"
elif _choice == "auto":
    try:
        from . import nb_impl as _impl

        BACKEND = "numba"
    except ImportError:
        _impl = np_impl
        BACKEND = "numpy"
else:
    raise RuntimeError(
        f"ROIPACK_BACKEND={_choice!r} not understood (use auto, numba or numpy)"
    )

blockwise_dct = _impl.blockwise_dct
blockwise_idct = _impl.blockwise_idct
resize_axis0_box = _impl.resize_axis0_box
resize_axis0_bilinear = _impl.resize_axis0_bilinear
rle_encode = _impl.rle_encode
rle_decode = _impl.rle_decode

BLOCK = np_impl.BLOCK
