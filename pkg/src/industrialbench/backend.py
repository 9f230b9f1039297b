"""Rollout backend selection: compiled kernel when built, pure Python otherwise.

The two kernels are bit-identical by contract (asserted by the parity tests
and the benchmark), so the choice only affects speed.  Selection order:

1. explicit ``backend=`` argument ("compiled" / "python"),
2. the ``INDUSTRIALBENCH_BACKEND`` environment variable,
3. "auto": compiled if the extension imported, else python.
"""

from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _kernel_c
except ImportError:  # extension not built; pure fallback
    _kernel_c = None

_CHOICES = ("auto", "compiled", "python")


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _kernel_c is not None else ("python",)


def get_backend(name: str = "auto"):
    """Resolve a backend module from a selector name."""
    if name == "auto":
        name = os.environ.get("INDUSTRIALBENCH_BACKEND", "auto")
    if name not in _CHOICES:
        raise ValueError(f"backend must be one of {_CHOICES}, got {name!r}")
    if name == "python":
        return _kernel_py
    if name == "compiled":
        if _kernel_c is None:
            raise RuntimeError("compiled kernel requested but the extension is not built")
        return _kernel_c
    return _kernel_c if _kernel_c is not None else _kernel_py


def backend_name(name: str = "auto") -> str:
    return get_backend(name).BACKEND_NAME


def rollout(*args, backend: str = "auto", **kwargs):
    return get_backend(backend).rollout(*args, **kwargs)
