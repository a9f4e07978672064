"""Kernel backend selection.

The hot inner loops (single-example loss/input-gradient, the iterated
signed-gradient attack, and the ranking-loss SGD epoch) exist twice: a
compiled Cython extension (attrex.backends._core) and a numpy fallback
(attrex.backends.pyfallback). The compiled one is preferred when importable;
set ATTREX_BACKEND=python or ATTREX_BACKEND=compiled to force a choice.
"""

from __future__ import annotations

import os


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name."""
    from attrex.backends import pyfallback

    found: dict[str, object] = {"python": pyfallback}
    try:
        from attrex.backends import _core

        found["compiled"] = _core
    except ImportError:
        pass
    return found


def _select() -> tuple[str, object]:
    requested = os.environ.get("ATTREX_BACKEND", "auto").strip().lower() or "auto"
    found = available_backends()
    if requested == "auto":
        name = "compiled" if "compiled" in found else "python"
        return name, found[name]
    aliases = {"compiled": "compiled", "cython": "compiled",
               "python": "python", "fallback": "python"}
    if requested not in aliases:
        raise ImportError(
            f"ATTREX_BACKEND={requested!r} not recognized (use 'compiled', "
            f"'python', or 'auto')"
        )
    name = aliases[requested]
    if name not in found:
        raise ImportError(
            f"ATTREX_BACKEND={requested!r} but the compiled extension is not "
            f"available; reinstall the package or use ATTREX_BACKEND=python"
        )
    return name, found[name]


BACKEND_NAME, _impl = _select()

loss_input_grad = _impl.loss_input_grad
attack_steps = _impl.attack_steps
sje_epoch = _impl.sje_epoch
