"""JIT selection layer.

Hot numerical kernels in this package are decorated with ``njit`` imported
from here. By default that is numba's ``njit``; setting the environment
variable ``RABICAT_DISABLE_NUMBA=1`` (or numba being absent) replaces it
with a no-op decorator so the same kernels run as plain Python/numpy code.
The fallback runs the very same kernel source, just uncompiled, which is
what the benchmark in ``benchmarks/bench_kernels.py`` compares against.
"""

import os

NUMBA_ENABLED = False

if os.environ.get("RABICAT_DISABLE_NUMBA", "0") != "1":
    try:
        from numba import njit, prange  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        pass

if not NUMBA_ENABLED:

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap

    def prange(n):
        return range(n)
