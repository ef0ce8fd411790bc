"""Kernel backend selection.

The hot kernels (PLV/PLI pair grids, grouped conv2d) exist twice: a compiled
Cython extension and a pure-numpy fallback. The compiled module is preferred
when importable; NEUROCONN_BACKEND=python|compiled forces the choice.
"""

import os

from . import _kernels_py

try:
    from . import _kernels_c
except ImportError:
    _kernels_c = None


def get_backend(name: str | None = None):
    """Return a kernel module by name ('compiled', 'python', or None for default)."""
    if name in (None, ""):
        return _kernels_c if _kernels_c is not None else _kernels_py
    if name == "python":
        return _kernels_py
    if name == "compiled":
        if _kernels_c is None:
            raise ImportError(
                "compiled kernels requested but neuroconn._kernels_c is not built; "
                "run 'pip install -e .' or 'python setup.py build_ext --inplace'"
            )
        return _kernels_c
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'python'")


def available_backends() -> list[str]:
    names = ["python"]
    if _kernels_c is not None:
        names.insert(0, "compiled")
    return names


_impl = get_backend(os.environ.get("NEUROCONN_BACKEND", "").strip().lower())

BACKEND: str = "compiled" if _impl is _kernels_c else "python"

plv_matrix = _impl.plv_matrix
pli_matrix = _impl.pli_matrix
conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_kernel = _impl.conv2d_backward_kernel
