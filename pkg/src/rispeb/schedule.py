"""Phase schedules: one unit-modulus L_i x N block per RIS."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scenario import Scenario

UNIT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PhaseSchedule:
    """Column n of block i is the phase vector of RIS i in measurement slot n."""

    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=complex) for b in self.blocks)
        if not blocks:
            raise ValueError("schedule needs at least one block")
        n = blocks[0].shape[1]
        for b in blocks:
            if b.ndim != 2 or b.shape[1] != n:
                raise ValueError("all blocks must be 2-D with the same number of columns")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def from_angles(cls, angles) -> "PhaseSchedule":
        return cls(tuple(np.exp(1j * np.asarray(a, dtype=float)) for a in angles))

    @classmethod
    def from_stacked(cls, stacked: np.ndarray, element_counts) -> "PhaseSchedule":
        splits = np.cumsum(element_counts)[:-1]
        return cls(tuple(np.split(np.asarray(stacked), splits, axis=0)))

    @classmethod
    def random(cls, scenario: Scenario, rng: np.random.Generator) -> "PhaseSchedule":
        n = scenario.num_measurements
        return cls.from_angles(
            [rng.uniform(0.0, 2 * np.pi, size=(L, n)) for L in scenario.element_counts])

    @classmethod
    def repeated(cls, vectors, num_measurements: int) -> "PhaseSchedule":
        """Every slot uses the same phase vector per RIS."""
        return cls(tuple(np.repeat(np.asarray(v)[:, None], num_measurements, axis=1)
                         for v in vectors))

    @property
    def num_measurements(self) -> int:
        return self.blocks[0].shape[1]

    @property
    def element_counts(self) -> list[int]:
        return [b.shape[0] for b in self.blocks]

    def stacked(self) -> np.ndarray:
        return np.vstack(self.blocks)

    def angles(self) -> list[np.ndarray]:
        """Phase angles in [0, 2 pi)."""
        return [np.mod(np.angle(b), 2 * np.pi) for b in self.blocks]

    def is_unit_modulus(self, tol: float = UNIT_TOL) -> bool:
        return all(np.max(np.abs(np.abs(b) - 1.0)) <= tol for b in self.blocks)

    def append_columns(self, other: "PhaseSchedule") -> "PhaseSchedule":
        return PhaseSchedule(tuple(np.hstack([a, b]) for a, b in zip(self.blocks, other.blocks)))

    def select(self, indices) -> "PhaseSchedule":
        return PhaseSchedule(tuple(self.blocks[i] for i in indices))

    def check_against(self, scenario: Scenario) -> None:
        if len(self.blocks) != scenario.num_ris:
            raise ValueError(f"schedule has {len(self.blocks)} blocks, scene has {scenario.num_ris} RISs")
        for i, (b, L) in enumerate(zip(self.blocks, scenario.element_counts)):
            if b.shape[0] != L:
                raise ValueError(f"block {i} has {b.shape[0]} rows, RIS {i} has {L} elements")


@dataclass
class OptimizerReport:
    """Outcome of one optimizer run; ``trace`` holds the PEB (m) after each iteration."""

    method: str
    schedule: PhaseSchedule
    peb: float
    trace: list[float]
    iterations: int
    seed: int | None
    wall_time_s: float
    converged: bool = False
    flags: list[str] = field(default_factory=list)

    @property
    def angles(self) -> list[np.ndarray]:
        return self.schedule.angles()
