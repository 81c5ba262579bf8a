"""Beam-sweeping baseline (EBS) and its nearest-state discrete version."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channel import ris_steering
from .geometry import GeometryError, angles_from_panel
from .scenario import RisPanel, Scenario
from .schedule import PhaseSchedule

HALF_PI = math.pi / 2
TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class SweepRegion:
    """Elevation/azimuth rectangle (radians). The azimuth interval may wrap past 2 pi."""

    el_min: float = 0.0
    el_max: float = HALF_PI
    az_min: float = 0.0
    az_max: float = TWO_PI

    def __post_init__(self):
        if self.el_max < self.el_min or self.az_max < self.az_min:
            raise ValueError("empty sweep region")
        if self.el_min < 0 or self.el_max > HALF_PI + 1e-12:
            raise ValueError("sweep region must stay in the front hemisphere")

    @classmethod
    def point(cls, elevation: float, azimuth: float) -> "SweepRegion":
        return cls(elevation, elevation, azimuth, azimuth)


FRONT_HEMISPHERE = SweepRegion()


def grid_shape(n: int) -> tuple[int, int]:
    """Most-square r x c grid with r * c >= n, r = floor(sqrt(n))."""
    if n < 1:
        raise ValueError("need at least one sweep direction")
    r = math.isqrt(n)
    c = -(-n // r)
    return r, c


def sweep_directions(region: SweepRegion, n: int) -> list[tuple[float, float]]:
    """``n`` directions at cell centers of the grid, row-major over
    (elevation, azimuth), surplus cells dropped from the end."""
    r, c = grid_shape(n)
    els = region.el_min + (np.arange(r) + 0.5) * (region.el_max - region.el_min) / r
    azs = region.az_min + (np.arange(c) + 0.5) * (region.az_max - region.az_min) / c
    return [(float(e), float(a)) for e, a in itertools.product(els, azs)][:n]


def region_from_box(panel: RisPanel, lo, hi, samples: int = 9) -> SweepRegion:
    """Angular bounding rectangle of an axis-aligned box as seen from ``panel``.

    Samples a ``samples``^3 lattice of the box; points behind the panel are
    ignored. The azimuth range is the smallest arc covering all samples.
    """
    axes = [np.linspace(a, b, samples) for a, b in zip(lo, hi)]
    els, azs = [], []
    for p in itertools.product(*axes):
        try:
            ang = angles_from_panel(panel, p)
        except GeometryError:
            continue
        if ang.elevation > HALF_PI or ang.degenerate:
            continue
        els.append(ang.elevation)
        azs.append(ang.azimuth % TWO_PI)
    if not els:
        raise ValueError("box is entirely behind the panel")
    azs = np.sort(np.asarray(azs))
    gaps = np.diff(np.concatenate([azs, [azs[0] + TWO_PI]]))
    k = int(np.argmax(gaps))
    if gaps[k] <= TWO_PI / samples:
        az_min, az_max = 0.0, TWO_PI
    else:
        az_min = float(azs[(k + 1) % len(azs)])
        az_max = float(azs[k]) + (TWO_PI if k + 1 < len(azs) else 0.0)
    return SweepRegion(max(0.0, min(els)), min(HALF_PI, max(els)), az_min, az_max)


def default_regions(scenario: Scenario) -> list[SweepRegion]:
    if scenario.room_size is None:
        return [FRONT_HEMISPHERE] * scenario.num_ris
    return [region_from_box(p, (0.0, 0.0, 0.0), scenario.room_size) for p in scenario.ris_panels]


def ebs_schedule(scenario: Scenario, region: SweepRegion | list[SweepRegion] | None = None
                 ) -> PhaseSchedule:
    """Beam of RIS i in slot n points from the AP reflection toward sweep direction n."""
    if region is None:
        regions = default_regions(scenario)
    elif isinstance(region, SweepRegion):
        regions = [region] * scenario.num_ris
    else:
        regions = list(region)
    lam = scenario.wavelength
    blocks = []
    for panel, reg in zip(scenario.ris_panels, regions):
        ap = angles_from_panel(panel, scenario.ap.position)
        a_ap = ris_steering(panel, ap.elevation, ap.azimuth, lam)
        cols = [np.conj(ris_steering(panel, el, az, lam) * a_ap)
                for el, az in sweep_directions(reg, scenario.num_measurements)]
        blocks.append(np.column_stack(cols))
    return PhaseSchedule(tuple(blocks))


def quantize_angles(theta, bits: int) -> np.ndarray:
    """Nearest of the 2^bits states c * 2 pi / 2^bits; ties go to the smaller state
    and a rounded value of 2 pi wraps to 0."""
    if bits < 1:
        raise ValueError("need at least one bit")
    levels = 2 ** bits
    step = TWO_PI / levels
    v = np.mod(np.asarray(theta, dtype=float), TWO_PI) / step
    idx = np.ceil(v - 0.5)
    idx = np.where(idx >= levels, 0.0, idx)
    return step * idx


def quantize_schedule(schedule: PhaseSchedule, bits: int) -> PhaseSchedule:
    return PhaseSchedule.from_angles([quantize_angles(a, bits) for a in schedule.angles()])


def in_state_set(theta, bits: int, tol: float = 1e-12) -> bool:
    step = TWO_PI / 2 ** bits
    theta = np.asarray(theta, dtype=float)
    k = np.round(theta / step)
    return bool(np.all((k >= 0) & (k < 2 ** bits) & (np.abs(theta - step * k) <= tol)))
