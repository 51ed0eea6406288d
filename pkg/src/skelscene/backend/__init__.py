"""Hot convolution kernels with a compiled core and a numpy fallback.

The classifier's cost is dominated by the fused conv + rectifier + max-over-
rows pooling pass. A Cython extension implements it; if the extension is
missing (build skipped or failed) the numpy reference implementation is used
instead. Both exploit the sparsity of feature matrices: windows made entirely
of padding rows contribute only the filter bias, so only windows touching a
nonzero row (plus one representative all-zero window) are evaluated. The
semantics are identical either way.

Set SKELSCENE_BACKEND=reference or =compiled to force a choice.
"""

import os

from . import reference

_requested = os.environ.get("SKELSCENE_BACKEND", "").strip().lower()

if _requested == "reference":
    _impl = reference
    BACKEND = "reference"
elif _requested in ("", "compiled"):
    try:
        from . import _convkernel as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = reference
        BACKEND = "reference"
else:
    raise ValueError(
        f"SKELSCENE_BACKEND={_requested!r}: expected 'compiled' or 'reference'"
    )

conv_pool_forward = _impl.conv_pool_forward
conv_pool_backward = _impl.conv_pool_backward


def available_backends() -> dict:
    """Name -> module for every backend importable in this environment."""
    out = {"reference": reference}
    try:
        from . import _convkernel  # type: ignore[attr-defined]

        out["compiled"] = _convkernel
    except ImportError:
        pass
    return out
