"""CPSOA-RM: Riemannian conjugate gradient on the complex circle manifold.

Minimizes trace(F^-1) (the squared PEB) over unit-modulus phase schedules.
Blocks of different RISs are kept as separate arrays; every inner product
below sums over all blocks, which is the same as working on the stacked
composite matrix.
"""
from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .fim import PebModel
from .scenario import Scenario, derive_rng
from .schedule import OptimizerReport, PhaseSchedule

log = logging.getLogger(__name__)

METHOD = "CPSOA-RM"


class DegenerateScenarioError(RuntimeError):
    """No RIS carries position information for this scene."""


@dataclass(frozen=True)
class ManifoldConfig:
    tolerance: float = 1e-6        # stop when ||v_R|| <= tolerance
    step0: float = 1e5             # Armijo initial step alpha_A
    shrink: float = 0.5            # Armijo factor beta_A
    sufficient_decrease: float = 0.1
    max_backtracks: int = 200
    max_iterations: int = 2000
    restart_pr: bool = True        # clamp Polak-Ribiere coefficient at zero
    relative: bool = False         # stop on ||v_R|| <= tolerance * f instead (scale-free)


@dataclass
class ManifoldState:
    point: list[np.ndarray]
    riemannian_grad: list[np.ndarray]
    direction: list[np.ndarray]
    objective: float
    iteration: int = 0
    flags: list[str] = field(default_factory=list)


def tangent_project(vector, point):
    """Project onto the tangent space at ``point``: v - Re{v * conj(x)} * x.

    Also serves as the vector transport into the tangent space at ``point``.
    Accepts single arrays or lists of per-RIS blocks.
    """
    if isinstance(vector, (list, tuple)):
        return [tangent_project(v, x) for v, x in zip(vector, point)]
    return vector - np.real(vector * np.conj(point)) * point


def retract(point, step):
    """unit{x + step}: entrywise renormalization back onto the circle manifold."""
    if isinstance(point, (list, tuple)):
        return [retract(x, s) for x, s in zip(point, step)]
    y = point + step
    mag = np.abs(y)
    # a cancelled entry keeps its previous phase
    return np.where(mag > 0, y / np.where(mag > 0, mag, 1.0), point)


def inner(a, b) -> float:
    """Real inner product Re tr(a^H b), summed over blocks."""
    return float(sum(np.real(np.vdot(x, y)) for x, y in zip(a, b)))


def norm(a) -> float:
    return math.sqrt(inner(a, a))


def conjugate_direction(state: ManifoldState, new_grad, new_point, restart: bool = True):
    """Polak-Ribiere direction at ``new_point`` from the previous state.

    ``new_grad`` is the Riemannian gradient at ``new_point``; the previous
    gradient and direction are transported there first.
    """
    prev_sq = inner(state.riemannian_grad, state.riemannian_grad)
    if prev_sq == 0.0:
        return [-g for g in new_grad], 0.0
    moved_grad = tangent_project(state.riemannian_grad, new_point)
    moved_dir = tangent_project(state.direction, new_point)
    alpha = inner(new_grad, [g - h for g, h in zip(new_grad, moved_grad)]) / prev_sq
    if restart:
        alpha = max(alpha, 0.0)
    return [-g + alpha * d for g, d in zip(new_grad, moved_dir)], alpha


def line_search(model: PebModel, state: ManifoldState, direction, config: ManifoldConfig):
    """Armijo backtracking along ``direction`` followed by retraction.

    Returns (step, new_point, new_value, satisfied). ``step`` is 0 and the
    point unchanged when even the last backtrack fails to decrease the
    objective.
    """
    slope = inner(direction, state.riemannian_grad)
    f0 = state.objective
    step = config.step0
    candidate, value = state.point, f0
    for m in range(config.max_backtracks + 1):
        step = config.step0 * config.shrink ** m
        candidate = retract(state.point, [step * d for d in direction])
        value = model.objective(candidate)
        if value - f0 <= config.sufficient_decrease * step * slope:
            return step, candidate, value, True
    if value < f0:
        return step, candidate, value, False
    return 0.0, state.point, f0, False


def riemannian_gradient(model: PebModel, point):
    value, egrad = model.value_and_gradient(point)
    if egrad is None:
        return value, None
    return value, tangent_project(egrad, point)


def initial_point(scenario: Scenario, init, seed: int | None) -> tuple[list[np.ndarray], int]:
    if isinstance(init, PhaseSchedule):
        init.check_against(scenario)
        return [b.copy() for b in init.blocks], scenario.rng_seed if seed is None else seed
    seed = scenario.rng_seed if seed is None else seed
    rng = derive_rng(seed, "manifold-init")
    return list(PhaseSchedule.random(scenario, rng).blocks), seed


def optimize(scenario: Scenario, init: PhaseSchedule | None = None, seed: int | None = None,
             config: ManifoldConfig = ManifoldConfig(), model: PebModel | None = None,
             callback=None) -> OptimizerReport:
    """Run the conjugate-gradient loop from ``init`` (or seeded random phases)."""
    t_start = time.perf_counter()
    model = PebModel(scenario) if model is None else model
    if model.degenerate:
        raise DegenerateScenarioError("no RIS provides position information: "
                                      + "; ".join(model.diagnostics))
    point, seed = initial_point(scenario, init, seed)
    value, grad = riemannian_gradient(model, point)
    if grad is None:
        raise DegenerateScenarioError("position FIM is singular at the initial schedule")
    state = ManifoldState(point, grad, [-g for g in grad], value)
    trace = [math.sqrt(value)]
    converged = False
    while state.iteration < config.max_iterations:
        scale = state.objective if config.relative else 1.0
        if norm(state.riemannian_grad) <= config.tolerance * scale:
            converged = True
            break
        direction = state.direction
        if inner(direction, state.riemannian_grad) >= 0:
            direction = [-g for g in state.riemannian_grad]
            state.flags.append(f"iter {state.iteration}: direction reset to steepest descent")
        step, new_point, new_value, ok = line_search(model, state, direction, config)
        if step == 0.0:
            state.flags.append(f"iter {state.iteration}: line search stalled")
            log.warning("Armijo search exhausted without decrease at iteration %d", state.iteration)
            break
        if not ok:
            state.flags.append(f"iter {state.iteration}: Armijo test failed at m_max, decrease accepted")
        new_value, new_grad = riemannian_gradient(model, new_point)
        state.direction = direction
        next_dir, _ = conjugate_direction(state, new_grad, new_point, restart=config.restart_pr)
        state = ManifoldState(new_point, new_grad, next_dir, new_value,
                              state.iteration + 1, state.flags)
        trace.append(math.sqrt(new_value))
        if callback is not None:
            callback(state)
    schedule = PhaseSchedule(tuple(state.point))
    return OptimizerReport(METHOD, schedule, math.sqrt(state.objective), trace, state.iteration,
                           seed, time.perf_counter() - t_start, converged, state.flags)
