"""Binary erosion, dilation, and opening with square structuring elements.

Both operators read the same window: the side x side square anchored at
(side // 2, side // 2), translated to the output pixel. Dilation ORs the
window treating out-of-bounds input as background; erosion ANDs it treating
out-of-bounds as foreground. That pairing makes the duality
erode(m, se) == ~dilate(~m, se) exact for every mask and kernel, matching
OpenCV's behaviour for the same kernels.

Side 0 is the identity element, so a "no morphology" stage is expressible
in the same configuration as any other kernel size.

Note on even sides: an even square has no symmetric anchor, so its opening
is not idempotent (a width-2 run drifts one pixel per application). Odd
kernels carry the full opening algebra.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StructuringElement:
    """Filled square kernel; side 0 denotes the identity (no-op) element."""

    side: int

    def __post_init__(self):
        if self.side < 0:
            raise ValueError(f"structuring element side must be >= 0, got {self.side}")

    @property
    def anchor(self) -> tuple[int, int]:
        return (self.side // 2, self.side // 2)


def _side_of(se: StructuringElement | int) -> int:
    if isinstance(se, StructuringElement):
        return se.side
    side = int(se)
    if side < 0:
        raise ValueError(f"structuring element side must be >= 0, got {side}")
    return side


def _require_mask(mask: np.ndarray) -> None:
    if not isinstance(mask, np.ndarray) or mask.ndim != 2 or mask.dtype != np.bool_:
        raise ValueError("expected a bool mask with shape (H, W)")


def _window_reduce(mask: np.ndarray, side: int, pad_value: bool) -> np.ndarray:
    # Square windows are separable: reduce along each axis in turn.
    c = side // 2
    before, after = c, side - 1 - c
    out = mask
    for axis in (0, 1):
        pad = [(0, 0), (0, 0)]
        pad[axis] = (before, after)
        padded = np.pad(out, pad, mode="constant", constant_values=pad_value)
        n = mask.shape[axis]
        acc = None
        for i in range(side):
            sl = [slice(None), slice(None)]
            sl[axis] = slice(i, i + n)
            window = padded[tuple(sl)]
            if acc is None:
                acc = window.copy()
            elif pad_value:
                acc &= window
            else:
                acc |= window
        out = acc
    return out


def dilate(mask: np.ndarray, se: StructuringElement | int) -> np.ndarray:
    """Set a pixel when any foreground pixel lies under the kernel anchored there."""
    _require_mask(mask)
    side = _side_of(se)
    if side == 0:
        return mask.copy()
    return _window_reduce(mask, side, pad_value=False)


def erode(mask: np.ndarray, se: StructuringElement | int) -> np.ndarray:
    """Set a pixel when the kernel anchored there covers only foreground."""
    _require_mask(mask)
    side = _side_of(se)
    if side == 0:
        return mask.copy()
    return _window_reduce(mask, side, pad_value=True)


def open_mask(mask: np.ndarray, se: StructuringElement | int) -> np.ndarray:
    """Erode then dilate; removes foreground regions the kernel cannot fit inside."""
    return dilate(erode(mask, se), se)
