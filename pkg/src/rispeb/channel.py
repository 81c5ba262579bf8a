"""Steering vectors, VLoS path gain, AP beamformer, NLoS interference power and
the noiseless mean measurement of one RIS-assisted path."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import PathAngles, angles_from_panel, aod_at_ap
from .scenario import ApConfig, RisPanel, Scenario


@dataclass(frozen=True)
class PathGain:
    magnitude: float
    phase: float
    blocked: bool = False

    @property
    def complex(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))


def ap_steering(ap: ApConfig, theta: float, wavelength: float) -> np.ndarray:
    n = np.arange(1, ap.num_antennas + 1)
    alpha = ((ap.num_antennas + 1) / 2.0 - n) * ap.antenna_spacing / wavelength
    return np.exp(2j * np.pi * alpha * np.cos(theta))


def ris_steering(panel: RisPanel, elevation: float, azimuth: float,
                 wavelength: float) -> np.ndarray:
    u, v = panel.element_offsets()
    delta = (-math.sin(elevation) * math.cos(azimuth) * u * panel.dx
             - math.sin(elevation) * math.sin(azimuth) * v * panel.dy)
    return np.exp(2j * np.pi * delta / wavelength)


def radiation_pattern(elevation: float) -> float:
    """Front-side-only pattern: 1 for elevation in (0, pi/2], else 0."""
    return 1.0 if elevation <= math.pi / 2 else 0.0


def vlos_gain(panel: RisPanel, ap_angles: PathAngles, ue_angles: PathAngles,
              ap_gain: float, ue_gain: float, wavelength: float) -> PathGain:
    pattern = radiation_pattern(ap_angles.elevation) * radiation_pattern(ue_angles.elevation)
    magnitude = (math.sqrt(ap_gain * ue_gain * pattern) * panel.dx * panel.dy
                 * panel.amplitude_gain / (4 * math.pi * ap_angles.distance * ue_angles.distance))
    phase = 2 * math.pi * (ap_angles.distance + ue_angles.distance) / wavelength
    return PathGain(magnitude, phase, blocked=pattern == 0.0)


def los_gain_magnitude(scenario: Scenario) -> float:
    d_au = float(np.linalg.norm(scenario.ap.position - scenario.ue_position))
    return (math.sqrt(scenario.ap.antenna_gain * scenario.noise.ue_gain) * scenario.wavelength
            / (4 * math.pi * d_au))


def ap_beamformer(ap: ApConfig, theta_ai: float, wavelength: float) -> np.ndarray:
    return np.conj(ap_steering(ap, theta_ai, wavelength)) / math.sqrt(ap.num_antennas)


def beamformed_nlos_factor(scenario: Scenario, ris_index: int, draws: int | None = None,
                           rng: np.random.Generator | None = None) -> float:
    """Monte-Carlo estimate of E|a_A(theta)^T f_i|^2 for theta ~ U(0, pi]."""
    ap = scenario.ap
    panel = scenario.ris_panels[ris_index]
    draws = scenario.noise.kappa_draws if draws is None else draws
    if rng is None:
        rng = scenario.rng(f"nlos-kappa/{ris_index}")
    theta = math.pi * (1.0 - rng.random(draws))   # (0, pi]
    f = ap_beamformer(ap, aod_at_ap(ap, panel.position), scenario.wavelength)
    n = np.arange(1, ap.num_antennas + 1)
    alpha = ((ap.num_antennas + 1) / 2.0 - n) * ap.antenna_spacing / scenario.wavelength
    a = np.exp(2j * np.pi * np.outer(np.cos(theta), alpha))
    return float(np.mean(np.abs(a @ f) ** 2))


def nlos_power(scenario: Scenario, ris_index: int) -> float:
    """Aggregate beamformed NLoS interference power sigma_v^2 for one RIS block (mW)."""
    noise = scenario.noise
    if noise.num_nlos == 0 or noise.nlos_suppression_db == math.inf:
        return 0.0
    sigma_l2 = los_gain_magnitude(scenario) ** 2 * 10.0 ** (-noise.nlos_suppression_db / 10.0)
    if noise.kappa_mode == "monte-carlo":
        kappa = beamformed_nlos_factor(scenario, ris_index)
    else:
        kappa = 1.0
    return scenario.ap.transmit_power * noise.num_nlos * sigma_l2 * kappa


def nlos_variance(scenario: Scenario, ris_index: int) -> float:
    """Total interference-plus-noise variance of the measurements through RIS ``ris_index``."""
    return scenario.noise.noise_power + nlos_power(scenario, ris_index)


def los_leakage(scenario: Scenario, ris_index: int) -> float:
    """|a_A(theta_AU)^T f_i|: how much of the direct path survives the beamformer.

    Dropping the LoS interference is justified when this is small, i.e. when
    the AP sees the UE and the RIS at well separated angles.
    """
    ap = scenario.ap
    f = ap_beamformer(ap, aod_at_ap(ap, scenario.ris_panels[ris_index].position),
                      scenario.wavelength)
    a = ap_steering(ap, aod_at_ap(ap, scenario.ue_position), scenario.wavelength)
    return float(abs(a @ f))


@dataclass(frozen=True)
class PathGeometry:
    """Phase-independent quantities of one RIS path, reused by FIM and optimizers."""

    ue_angles: PathAngles
    ap_angles: PathAngles
    gain: PathGain
    cascade: np.ndarray       # a_I(UE) * a_I(AP), elementwise
    variance: float           # sigma_eta^2


def path_geometry(scenario: Scenario, ris_index: int) -> PathGeometry:
    panel = scenario.ris_panels[ris_index]
    lam = scenario.wavelength
    ue = angles_from_panel(panel, scenario.ue_position)
    ap = angles_from_panel(panel, scenario.ap.position)
    gain = vlos_gain(panel, ap, ue, scenario.ap.antenna_gain, scenario.noise.ue_gain, lam)
    cascade = (ris_steering(panel, ue.elevation, ue.azimuth, lam)
               * ris_steering(panel, ap.elevation, ap.azimuth, lam))
    return PathGeometry(ue, ap, gain, cascade, nlos_variance(scenario, ris_index))


def mean_signal(scenario: Scenario, ris_index: int, g) -> complex:
    """Noiseless received sample for phase vector ``g`` (one column accepted as 1-D)."""
    g = np.asarray(g)
    panel = scenario.ris_panels[ris_index]
    if g.shape[0] != panel.num_elements:
        raise ValueError(f"phase vector has {g.shape[0]} entries, panel has {panel.num_elements}")
    pg = path_geometry(scenario, ris_index)
    amp = math.sqrt(scenario.ap.num_antennas * scenario.ap.transmit_power)
    return amp * pg.gain.complex * (pg.cascade @ g)


def mean_signal_at(scenario: Scenario, ris_index: int, g, elevation: float, azimuth: float,
                   distance: float) -> complex:
    """Mean sample with the UE-side parameters overridden (used for derivative checks).

    The AP side and the radiation pattern stay those of ``scenario``.
    """
    panel = scenario.ris_panels[ris_index]
    lam = scenario.wavelength
    ap = angles_from_panel(panel, scenario.ap.position)
    ue = angles_from_panel(panel, scenario.ue_position)
    pattern = radiation_pattern(ap.elevation) * radiation_pattern(ue.elevation)
    mag = (math.sqrt(scenario.ap.antenna_gain * scenario.noise.ue_gain * pattern)
           * panel.dx * panel.dy * panel.amplitude_gain / (4 * math.pi * ap.distance * distance))
    delta = mag * np.exp(2j * np.pi * (ap.distance + distance) / lam)
    cascade = (ris_steering(panel, elevation, azimuth, lam)
               * ris_steering(panel, ap.elevation, ap.azimuth, lam))
    amp = math.sqrt(scenario.ap.num_antennas * scenario.ap.transmit_power)
    return amp * delta * (cascade @ np.asarray(g))


def coherent_profile(scenario: Scenario, ris_index: int) -> np.ndarray:
    """Phase vector that co-phases every element toward the true UE (maximal |mu|)."""
    return np.conj(path_geometry(scenario, ris_index).cascade)
