"""Angles and distances between AP, RIS panels and UE, and the Jacobian of the
per-RIS channel parameters (elevation, azimuth, distance) w.r.t. UE position."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import ApConfig, RisPanel

TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Coincident points or a configuration where a derivative is undefined."""


class BranchPointError(GeometryError):
    """Target lies in the panel's e_x/e_z plane (sin of azimuth is zero)."""


class BoresightError(GeometryError):
    """Target lies on the panel normal; azimuth and its derivatives are undefined."""


@dataclass(frozen=True)
class PathAngles:
    elevation: float
    azimuth: float
    distance: float
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.elevation, self.azimuth, self.distance])


def _sign(x: float) -> float:
    # sign(0) := +1 keeps the azimuth continuous with the sin > 0 half-plane
    return -1.0 if x < 0 else 1.0


def angles_from_panel(panel: RisPanel, target) -> PathAngles:
    r = np.asarray(target, dtype=float) - panel.position
    d = float(np.linalg.norm(r))
    if d == 0.0:
        raise GeometryError("target coincides with the panel position")
    z = float(r @ panel.e_z)
    x = float(r @ panel.e_x)
    y = float(r @ panel.e_y)
    elevation = math.acos(min(1.0, max(-1.0, z / d)))
    rho = math.hypot(x, y)
    if rho <= 1e-15 * d:
        return PathAngles(elevation, 0.0, d, degenerate=True)
    cos_az = min(1.0, max(-1.0, x / rho))
    sin_az = y / rho
    base = math.acos(cos_az)
    azimuth = base + (1.0 - _sign(sin_az)) * (math.pi - base)
    if azimuth == 0.0:
        azimuth = TWO_PI
    return PathAngles(elevation, azimuth, d)


def aod_at_ap(ap: ApConfig, target) -> float:
    r = np.asarray(target, dtype=float) - ap.position
    d = float(np.linalg.norm(r))
    if d == 0.0:
        raise GeometryError("target coincides with the AP position")
    return math.acos(min(1.0, max(-1.0, float(ap.array_axis @ r) / d)))


def jacobian_xi(panel: RisPanel, p_u, tol: float = 1e-12) -> np.ndarray:
    """3x3 matrix whose row k is the gradient of (elevation, azimuth, distance)[k]
    with respect to the UE coordinates."""
    r = np.asarray(p_u, dtype=float) - panel.position
    d = float(np.linalg.norm(r))
    if d == 0.0:
        raise GeometryError("UE coincides with the panel position")
    e_x, e_y, e_z = panel.e_x, panel.e_y, panel.e_z
    z = float(r @ e_z)
    x = float(r @ e_x)
    y = float(r @ e_y)
    r_perp = r - z * e_z
    rho2 = float(r_perp @ r_perp)
    if rho2 <= (tol * d) ** 2:
        raise BoresightError("UE on the panel normal")
    if abs(y) <= tol * d:
        raise BranchPointError("UE in the e_x/e_z plane of the panel (sin azimuth = 0)")
    rho = math.sqrt(rho2)

    # elevation: d/dp arccos(z/|r|) = -(|r| e_z - z r/|r|) / (rho |r|)
    g_el = -(d * e_z - z * r / d) / (rho * d)

    # azimuth: derivative of the cos branch through the numerator, plus the
    # correction from the normalizing in-plane length
    sin_abs = abs(y) / rho
    g_az = (-_sign(y) / sin_abs) * (e_x / rho) \
        + _sign(y) * x * r_perp / (abs(y) * rho2)

    g_d = r / d
    return np.vstack([g_el, g_az, g_d])
