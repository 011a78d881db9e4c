import colorsys
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from iridescan import imaging
from iridescan.domain import Frame


def hsv_pixel(hue_deg: float, saturation: float = 1.0, value: float = 1.0):
    """8-bit RGB for an HSV color; fully saturated hues keep S = 1 exactly."""
    r, g, b = colorsys.hsv_to_rgb(hue_deg / 360.0, saturation, value)
    return (round(r * 255), round(g * 255), round(b * 255))


# centers of the twelve 30-degree hue bins
RAINBOW_PALETTE = [hsv_pixel(15.0 + 30.0 * k) for k in range(12)]


def build_frame(arr) -> Frame:
    return imaging.array_to_frame(np.asarray(arr, dtype=np.uint8))


def gray_frame(width: int, height: int, level: int = 128) -> Frame:
    return build_frame(np.full((height, width, 3), level, dtype=np.uint8))


@pytest.fixture
def rng():
    import random

    return random.Random(0xC0FFEE)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion."""
    reports = []
    for key in ("passed", "failed"):
        reports.extend(
            r for r in terminalreporter.stats.get(key, [])
            if "test_acceptance" in r.nodeid and r.when == "call"
        )
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for report in sorted(reports, key=lambda r: r.nodeid):
        status = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        terminalreporter.write_line(f"{status}  {name}")
