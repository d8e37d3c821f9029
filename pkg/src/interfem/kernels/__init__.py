"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is chosen once at import time from the INTERFACE_FEM_NUMBA
environment variable: "1"/"on" forces numba (ImportError if unavailable),
"0"/"off" forces the vectorized numpy path, anything else tries numba first.
Both backends implement the same array contracts and agree to roundoff;
benchmarks/bench_kernels.py compares them head to head.
"""

import os

_FLAG = os.environ.get("INTERFACE_FEM_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "off", "false", "no"):
    from . import numpy_backend as _backend
elif _FLAG in ("1", "on", "true", "yes"):
    from . import numba_backend as _backend
else:
    try:
        from . import numba_backend as _backend
    except ImportError:
        from . import numpy_backend as _backend

BACKEND = _backend.NAME

cell_stiffness = _backend.cell_stiffness
cell_mass = _backend.cell_mass
cell_load = _backend.cell_load
dg_face_blocks = _backend.dg_face_blocks
matvec = _backend.matvec
