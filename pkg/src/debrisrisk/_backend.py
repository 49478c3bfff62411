"""Pick the compiled kernels when they were built, else the numpy fallback."""
from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

kernels = _compiled if _compiled is not None else _kernels_py


def available() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def use(name: str) -> None:
    """Switch backend at runtime: ``"cython"`` or ``"python"``."""
    global kernels
    if name == "python":
        kernels = _kernels_py
    elif name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        kernels = _compiled
    else:
        raise ValueError(f"unknown backend {name!r}")


def get(name: str):
    if name == "python":
        return _kernels_py
    if name == "cython" and _compiled is not None:
        return _compiled
    raise RuntimeError(f"backend {name!r} unavailable")
