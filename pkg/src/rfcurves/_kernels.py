"""Kernel backend selection: compiled extension if available, numpy otherwise.

Set RFCURVES_PURE_PYTHON=1 to force the numpy fallback (used by the
kernel benchmark and as an escape hatch on platforms without a compiler).
"""

import os

if os.environ.get("RFCURVES_PURE_PYTHON", "").strip() not in ("", "0"):
    from . import _kernels_py as _impl
else:
    try:
        from . import _kernels_cy as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

BACKEND = _impl.BACKEND
logistic_prox_shift = _impl.logistic_prox_shift
hat_channel_moments = _impl.hat_channel_moments
training_loss_moment = _impl.training_loss_moment
