"""Fisher information of the RIS measurements and the positioning error bound."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import path_geometry
from .geometry import GeometryError, jacobian_xi
from .scenario import Scenario
from .schedule import PhaseSchedule

COND_LIMIT = 1e12
SYM_TOL = 1e-8


@dataclass(frozen=True)
class DerivativeBundle:
    """Per-RIS derivative data; ``kappa`` rows are (b_el, b_az, b_d) * cascade."""

    kappa: np.ndarray
    gain_sq: float
    prefactor: float
    b_elevation: np.ndarray
    b_azimuth: np.ndarray
    b_distance: complex

    @property
    def scale(self) -> float:
        return self.prefactor * self.gain_sq


def derivative_bundle(scenario: Scenario, ris_index: int) -> DerivativeBundle:
    panel = scenario.ris_panels[ris_index]
    lam = scenario.wavelength
    pg = path_geometry(scenario, ris_index)
    el, az, d = pg.ue_angles.elevation, pg.ue_angles.azimuth, pg.ue_angles.distance
    u, v = panel.element_offsets()
    b_el = -2j * np.pi * (math.cos(el) * math.cos(az) * u * panel.dx / lam
                          + math.cos(el) * math.sin(az) * v * panel.dy / lam)
    b_az = (2j * np.pi * math.sin(el) * math.sin(az) * u * panel.dx / lam
            - 2j * np.pi * math.sin(el) * math.cos(az) * v * panel.dy / lam)
    b_d = -1.0 / d + 2j * np.pi / lam
    kappa = np.vstack([b_el * pg.cascade, b_az * pg.cascade, b_d * pg.cascade])
    prefactor = 2.0 * scenario.ap.num_antennas * scenario.ap.transmit_power / pg.variance
    return DerivativeBundle(kappa, pg.gain.magnitude ** 2, prefactor, b_el, b_az, b_d)


def fim_per_ris(bundle: DerivativeBundle, block: np.ndarray) -> np.ndarray:
    """FIM of (elevation, azimuth, distance) for one RIS and its L x N phase block."""
    block = np.asarray(block)
    if block.ndim != 2 or block.shape[0] != bundle.kappa.shape[1]:
        raise ValueError(f"block shape {block.shape} does not match {bundle.kappa.shape[1]} elements")
    p = bundle.kappa @ block
    return bundle.scale * np.real(p @ p.conj().T)


def inv3(f: np.ndarray) -> tuple[np.ndarray, float]:
    """Adjugate inverse of a 3x3 matrix; returns (inverse, determinant)."""
    a, b, c = f[0]
    d, e, g = f[1]
    h, i, k = f[2]
    c00 = e * k - g * i
    c01 = g * h - d * k
    c02 = d * i - e * h
    det = a * c00 + b * c01 + c * c02
    adj = np.array([
        [c00, c * i - b * k, b * g - c * e],
        [c01, a * k - c * h, c * d - a * g],
        [c02, b * h - a * i, a * e - b * d],
    ])
    if det == 0.0:
        return np.full((3, 3), np.inf), 0.0
    return adj / det, det


def inverse_trace(f: np.ndarray) -> float:
    """trace(F^-1), or +inf when F is singular, indefinite or worse conditioned than 1e12
    (Frobenius condition number)."""
    inv, det = inv3(f)
    if not det > 0:
        return math.inf
    tr = float(inv[0, 0] + inv[1, 1] + inv[2, 2])
    if not tr > 0:
        return math.inf
    if np.linalg.norm(f) * np.linalg.norm(inv) > COND_LIMIT:
        return math.inf
    return tr


def peb(f) -> float:
    f = np.asarray(f, dtype=float)
    if f.shape != (3, 3):
        raise ValueError("FIM must be 3x3")
    scale = max(float(np.max(np.abs(f))), np.finfo(float).tiny)
    if np.max(np.abs(f - f.T)) > SYM_TOL * scale:
        raise ValueError("FIM is not symmetric")
    return math.sqrt(inverse_trace(0.5 * (f + f.T)))


@dataclass
class FimBundle:
    per_ris_fim: list[np.ndarray]
    jacobians: list[np.ndarray | None]
    position_fim: np.ndarray
    peb: float
    diagnostics: list[str] = field(default_factory=list)
    weak_direction: np.ndarray | None = None


def channel_to_position(jacobian: np.ndarray, f_xi: np.ndarray) -> np.ndarray:
    """Chain rule with rows of ``jacobian`` = gradients of (el, az, d): J^T F J."""
    return jacobian.T @ f_xi @ jacobian


def position_fim(scenario: Scenario, schedule: PhaseSchedule,
                 skip_degenerate: bool = False) -> FimBundle:
    """Assemble the UE-position FIM over all RISs (summed in index order) and its PEB.

    A panel whose Jacobian is undefined (UE on its normal, or on the azimuth
    branch plane) raises unless ``skip_degenerate`` is set, in which case it is
    dropped as uninformative and reported in ``diagnostics``.
    """
    schedule.check_against(scenario)
    per_ris, jacs, notes = [], [], []
    total = np.zeros((3, 3))
    for i, block in enumerate(schedule.blocks):
        try:
            jac = jacobian_xi(scenario.ris_panels[i], scenario.ue_position)
        except GeometryError as exc:
            if not skip_degenerate:
                raise
            notes.append(f"RIS {i}: {exc}; treated as uninformative")
            per_ris.append(np.zeros((3, 3)))
            jacs.append(None)
            continue
        f_xi = fim_per_ris(derivative_bundle(scenario, i), block)
        if not np.any(f_xi):
            notes.append(f"RIS {i}: UE or AP behind the panel; no information")
        per_ris.append(f_xi)
        jacs.append(jac)
        total = total + channel_to_position(jac, f_xi)
    total = 0.5 * (total + total.T)
    value = peb(total)
    weak = None
    if not math.isfinite(value):
        w, vecs = np.linalg.eigh(total)
        weak = vecs[:, 0]
        notes.append(f"position FIM singular (eigenvalues {w}); uninformative direction {weak}")
    return FimBundle(per_ris, jacs, total, value, notes, weak)


class PebModel:
    """Phase-independent precomputation of a scene for fast objective/gradient calls.

    Block i contributes ``c_i * Re{(W_i G_i)(W_i G_i)^H}`` to the position FIM,
    with ``W_i = J_i^T kappa_i`` and ``c_i`` the noise prefactor times |gain|^2.
    """

    def __init__(self, scenario: Scenario, skip_degenerate: bool = False):
        self.scenario = scenario
        self.element_counts = scenario.element_counts
        self.num_measurements = scenario.num_measurements
        self.weights: list[np.ndarray] = []
        self.scales: list[float] = []
        self.active: list[int] = []
        self.diagnostics: list[str] = []
        for i in range(scenario.num_ris):
            try:
                jac = jacobian_xi(scenario.ris_panels[i], scenario.ue_position)
            except GeometryError as exc:
                if not skip_degenerate:
                    raise
                self.diagnostics.append(f"RIS {i}: {exc}")
                jac = np.zeros((3, 3))
            bundle = derivative_bundle(scenario, i)
            self.weights.append(jac.T @ bundle.kappa)
            self.scales.append(bundle.scale)
            if bundle.scale > 0 and np.any(jac):
                self.active.append(i)

    @property
    def degenerate(self) -> bool:
        return not self.active

    def fim(self, blocks) -> np.ndarray:
        total = np.zeros((3, 3))
        for w, c, g in zip(self.weights, self.scales, blocks):
            if c == 0.0:
                continue
            p = w @ g
            total += c * np.real(p @ p.conj().T)
        return 0.5 * (total + total.T)

    def objective(self, blocks) -> float:
        """Squared PEB, trace(F^-1)."""
        return inverse_trace(self.fim(blocks))

    def peb(self, blocks) -> float:
        return math.sqrt(self.objective(blocks))

    def value_and_gradient(self, blocks):
        """trace(F^-1) and its Euclidean gradient per block.

        The gradient V satisfies d f = Re tr(V^H dG) for a perturbation dG.
        """
        f = self.fim(blocks)
        inv, det = inv3(f)
        value = inverse_trace(f)
        if not math.isfinite(value):
            return value, None
        inv2 = inv @ inv
        grads = []
        for w, c, g in zip(self.weights, self.scales, blocks):
            if c == 0.0:
                grads.append(np.zeros_like(g))
                continue
            grads.append(-2.0 * c * (w.conj().T @ (inv2 @ (w @ g))))
        return value, grads


def batch_inverse_trace(f: np.ndarray) -> np.ndarray:
    """Vectorized :func:`inverse_trace` over a stack of 3x3 matrices (..., 3, 3)."""
    a, b, c = f[..., 0, 0], f[..., 0, 1], f[..., 0, 2]
    d, e, g = f[..., 1, 0], f[..., 1, 1], f[..., 1, 2]
    h, i, k = f[..., 2, 0], f[..., 2, 1], f[..., 2, 2]
    c00 = e * k - g * i
    c01 = g * h - d * k
    c02 = d * i - e * h
    det = a * c00 + b * c01 + c * c02
    adj = np.stack([
        np.stack([c00, c * i - b * k, b * g - c * e], axis=-1),
        np.stack([c01, a * k - c * h, c * d - a * g], axis=-1),
        np.stack([c02, b * h - a * i, a * e - b * d], axis=-1),
    ], axis=-2)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = adj / det[..., None, None]
        tr = inv[..., 0, 0] + inv[..., 1, 1] + inv[..., 2, 2]
        cond = np.linalg.norm(f, axis=(-2, -1)) * np.linalg.norm(inv, axis=(-2, -1))
    bad = ~(det > 0) | ~(tr > 0) | ~(cond <= COND_LIMIT)
    return np.where(bad, np.inf, tr)


def batch_fim(model: PebModel, batch_blocks) -> np.ndarray:
    """Position FIMs for a batch; ``batch_blocks[i]`` has shape (B, L_i, N)."""
    total = 0.0
    for w, c, g in zip(model.weights, model.scales, batch_blocks):
        if c == 0.0:
            continue
        p = np.matmul(w, g)
        total = total + c * np.real(np.matmul(p, np.conj(np.swapaxes(p, -1, -2))))
    total = np.broadcast_to(total, (len(batch_blocks[0]), 3, 3))
    return 0.5 * (total + np.swapaxes(total, -1, -2))
