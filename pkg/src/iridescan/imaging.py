"""Deterministic CPU reference algorithms for the imaging pipeline.

Three stages operate per frame:

* ``flatten`` removes low-frequency illumination by subtracting the local
  window mean from every channel, so iridescence structure is comparable
  across unevenly lit frames.
* ``rainbow_mask`` scores every pixel for multi-hue iridescence.  The score
  of a pixel is ``hue_coverage * mean_saturation`` over its window
  neighborhood, where hue coverage counts occupied 30-degree hue bins (out
  of 12) among pixels with saturation >= 0.2 and value >= 0.1, and the mean
  saturation is taken over the whole neighborhood.
* ``propose_regions`` extracts candidate defect areas as 4-connected
  components of super-threshold mask pixels.

All neighborhoods are clamped at image borders via edge replication, so
output dimensions always equal input dimensions.  Everything here is a pure
function over immutable inputs; callers may parallelize over frames freely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .domain import BoundingBox, Frame

SATURATION_FLOOR = 0.2
VALUE_FLOOR = 0.1
HUE_BIN_COUNT = 12
HUE_BIN_WIDTH = 360.0 / HUE_BIN_COUNT


class ParameterError(ValueError):
    """An imaging operation was called with an invalid parameter."""


@dataclass(frozen=True, eq=False)
class FlattenedFrame:
    """Signed per-channel deviations from the local window mean."""

    width: int
    height: int
    values: np.ndarray  # (height, width, 3) float64

    def __post_init__(self) -> None:
        if self.values.shape != (self.height, self.width, 3):
            raise ValueError("value array shape disagrees with dimensions")


@dataclass(frozen=True, eq=False)
class RainbowMask:
    """Per-pixel iridescence scores in [0, 1]."""

    width: int
    height: int
    scores: np.ndarray  # (height, width) float64

    def __post_init__(self) -> None:
        if self.scores.shape != (self.height, self.width):
            raise ValueError("score array shape disagrees with dimensions")


@dataclass(frozen=True)
class RegionProposal:
    """A candidate defect region: tight box, mean mask score, pixel area."""

    box: BoundingBox
    mean_score: float
    area: int


def frame_to_array(frame: Frame) -> np.ndarray:
    """View a frame as an (height, width, 3) uint8 array."""
    arr = np.frombuffer(frame.pixels, dtype=np.uint8)
    return arr.reshape(frame.height, frame.width, 3)


def array_to_frame(arr: np.ndarray) -> Frame:
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError("expected an (h, w, 3) array")
    data = np.ascontiguousarray(arr, dtype=np.uint8)
    return Frame(width=arr.shape[1], height=arr.shape[0], pixels=data.tobytes())


def _check_window(frame_width: int, frame_height: int, window: int) -> None:
    if window < 1 or window % 2 == 0:
        raise ParameterError(f"window must be odd and >= 1, got {window}")
    if window > min(frame_width, frame_height):
        raise ParameterError(
            f"window {window} exceeds frame dimensions "
            f"{frame_width}x{frame_height}"
        )


def _window_sums(arr: np.ndarray, window: int) -> np.ndarray:
    """Sum of each window x window neighborhood, borders edge-replicated."""
    radius = window // 2
    pad = ((radius, radius), (radius, radius)) + ((0, 0),) * (arr.ndim - 2)
    padded = np.pad(arr, pad, mode="edge")
    integral = padded.cumsum(axis=0).cumsum(axis=1)
    zero_row = np.zeros((1,) + integral.shape[1:], dtype=integral.dtype)
    integral = np.concatenate([zero_row, integral], axis=0)
    zero_col = np.zeros((integral.shape[0], 1) + integral.shape[2:], dtype=integral.dtype)
    integral = np.concatenate([zero_col, integral], axis=1)
    h, w = arr.shape[:2]
    return (
        integral[window : window + h, window : window + w]
        - integral[:h, window : window + w]
        - integral[window : window + h, :w]
        + integral[:h, :w]
    )


def box_mean(frame: Frame, window: int) -> np.ndarray:
    """Per-channel window mean at every pixel, as (h, w, 3) float64."""
    _check_window(frame.width, frame.height, window)
    sums = _window_sums(frame_to_array(frame).astype(np.int64), window)
    return sums / float(window * window)


def flatten(frame: Frame, window: int) -> FlattenedFrame:
    """Subtract the local window mean from every channel."""
    mean = box_mean(frame, window)
    values = frame_to_array(frame).astype(np.float64) - mean
    values.setflags(write=False)
    return FlattenedFrame(width=frame.width, height=frame.height, values=values)


def rgb_to_hsv(arr: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized HSV: hue in [0, 360), saturation and value in [0, 1].

    Hue of achromatic pixels is 0 by convention; when the max channel is
    shared, red wins over green over blue.
    """
    rgb = arr.astype(np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    maxc = rgb.max(axis=-1)
    minc = rgb.min(axis=-1)
    value = maxc / 255.0
    delta = maxc - minc
    safe_max = np.where(maxc > 0, maxc, 1.0)
    saturation = np.where(maxc > 0, delta / safe_max, 0.0)
    safe_delta = np.where(delta > 0, delta, 1.0)
    hue_r = np.mod((g - b) / safe_delta, 6.0)
    hue_g = (b - r) / safe_delta + 2.0
    hue_b = (r - g) / safe_delta + 4.0
    hue = np.select([maxc == r, maxc == g], [hue_r, hue_g], default=hue_b) * 60.0
    hue = np.where(delta > 0, hue, 0.0)
    return hue, saturation, value


def rainbow_mask(frame: Frame, window: int) -> RainbowMask:
    """Score every pixel for local multi-hue iridescence."""
    _check_window(frame.width, frame.height, window)
    hue, saturation, value = rgb_to_hsv(frame_to_array(frame))
    qualifying = (saturation >= SATURATION_FLOOR) & (value >= VALUE_FLOOR)
    bins = np.minimum((hue / HUE_BIN_WIDTH).astype(np.int64), HUE_BIN_COUNT - 1)
    occupied = np.zeros((frame.height, frame.width), dtype=np.int64)
    for b in range(HUE_BIN_COUNT):
        members = (qualifying & (bins == b)).astype(np.int64)
        occupied += _window_sums(members, window) > 0
    coverage = occupied / float(HUE_BIN_COUNT)
    mean_saturation = _window_sums(saturation, window) / float(window * window)
    scores = np.clip(coverage * mean_saturation, 0.0, 1.0)
    scores.setflags(write=False)
    return RainbowMask(width=frame.width, height=frame.height, scores=scores)


def frame_rainbow_score(mask: RainbowMask) -> float:
    """Nearest-rank 95th percentile of the pixel scores.

    The client compares this against the configured rainbow threshold to
    decide whether to raise the per-frame alert.
    """
    flat = mask.scores.reshape(-1)
    if flat.size == 0:
        raise ParameterError("cannot score an empty mask")
    rank = -(-95 * flat.size // 100)  # ceil(0.95 * n) in exact integer math
    return float(np.sort(flat)[rank - 1])


def propose_regions(
    mask: RainbowMask, pixel_threshold: float, min_area: int
) -> list[RegionProposal]:
    """Candidate regions: 4-connected super-threshold components.

    Components smaller than ``min_area`` are dropped.  Output is sorted by
    mean score descending, ties broken by (y_min, x_min) ascending.
    """
    if not 0.0 <= pixel_threshold <= 1.0:
        raise ParameterError("pixel_threshold must lie in [0,1]")
    binary = mask.scores >= pixel_threshold
    structure = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int64)
    labels, count = ndimage.label(binary, structure=structure)
    proposals: list[RegionProposal] = []
    for index, slices in enumerate(ndimage.find_objects(labels), start=1):
        if slices is None:
            continue
        component = labels[slices] == index
        area = int(component.sum())
        if area < min_area:
            continue
        box = BoundingBox(
            x_min=slices[1].start,
            y_min=slices[0].start,
            x_max=slices[1].stop,
            y_max=slices[0].stop,
        )
        # fsum keeps the mean independent of pixel visit order
        mean_score = math.fsum(mask.scores[slices][component].tolist()) / area
        proposals.append(RegionProposal(box=box, mean_score=mean_score, area=area))
    proposals.sort(key=lambda p: (-p.mean_score, p.box.y_min, p.box.x_min))
    return proposals


# --- PPM / PGM encoding ----------------------------------------------------
# Frames travel as binary PPM (P6, maxval 255).  Masks can be dumped as PGM
# (P5) with scores quantized to [0, 255]; the quantized form is debug output
# only and never feeds back into computation.


def write_ppm(frame: Frame) -> bytes:
    header = f"P6\n{frame.width} {frame.height}\n255\n".encode("ascii")
    return header + frame.pixels


def read_ppm(data: bytes) -> Frame:
    magic, pos = _next_token(data, 0)
    if magic != b"P6":
        raise ValueError("not a binary PPM (P6) file")
    width_tok, pos = _next_token(data, pos)
    height_tok, pos = _next_token(data, pos)
    maxval_tok, pos = _next_token(data, pos)
    try:
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError as exc:
        raise ValueError(f"malformed PPM header: {exc}") from None
    if maxval != 255:
        raise ValueError(f"unsupported PPM maxval {maxval}, expected 255")
    pixels = data[pos : pos + width * height * 3]
    if len(pixels) != width * height * 3:
        raise ValueError("PPM pixel data truncated")
    return Frame(width=width, height=height, pixels=pixels)


def write_pgm(mask: RainbowMask) -> bytes:
    header = f"P5\n{mask.width} {mask.height}\n255\n".encode("ascii")
    quantized = np.rint(mask.scores * 255.0).astype(np.uint8)
    return header + quantized.tobytes()


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    """Read one whitespace-delimited header token, skipping # comments."""
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ValueError("unexpected end of PPM header")
    return data[start:pos], pos + 1
