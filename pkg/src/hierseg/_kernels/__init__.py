"""Hot-kernel backend selection.

The compiled Cython core is used when importable; otherwise the pure
numpy/scipy fallback. Override with HIERSEG_KERNELS=pure|compiled|auto.
Both backends produce bit-identical results.
"""

import os

from . import _pure

_requested = os.environ.get("HIERSEG_KERNELS", "auto")
if _requested not in ("auto", "pure", "compiled"):
    raise ImportError(f"HIERSEG_KERNELS must be auto, pure or compiled, not {_requested!r}")

_compiled = None
if _requested in ("auto", "compiled"):
    try:
        from . import _core as _compiled
    except ImportError:
        if _requested == "compiled":
            raise ImportError(
                "HIERSEG_KERNELS=compiled but the hierseg._kernels._core "
                "extension is not built"
            ) from None

_backend = _compiled if _compiled is not None else _pure

watershed_labels = _backend.watershed_labels
barrier_labels = _backend.barrier_labels
dense_merge_loop = _backend.dense_merge_loop


def backend_name() -> str:
    """Name of the active kernel backend ("compiled" or "pure")."""
    return "compiled" if _backend is _compiled else "pure"


def available_backends() -> dict:
    """Importable backend modules by name (for tests and benchmarks)."""
    out = {"pure": _pure}
    if _compiled is not None:
        out["compiled"] = _compiled
    else:
        try:
            from . import _core

            out["compiled"] = _core
        except ImportError:
            pass
    return out
