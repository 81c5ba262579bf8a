"""DPSOA-I-GWO: improved grey wolf optimizer over discrete RIS phase states.

A wolf is a flat vector of D = N * sum(L_i) phase angles. RIS i owns the
segment starting at N * sum(L_<i); inside it, entries are grouped by slot,
so angle (slot n, element l) sits at offset n * L_i + l (0-based).

All randomness comes from the ``"gwo"`` stream of the seed. Every iteration
draws one row of 7D + 2 uniforms per wolf, in wolf order; within a row the
layout is A (3 x D, leader-major), C (3 x D), the neighbour pick, the
random-wolf pick, then the D learning factors. Picks map a uniform u to
index floor(u * count). Because the generator fills arrays sequentially, the
whole pack draws with one call and gives the same numbers as a per-wolf loop.

Internally positions are held as state codes c (angle = c * 2 pi / 2^bits).
Every update rule is homogeneous of degree one, so running it in code units
is the same algorithm with t_bit reduced to rounding modulo 2^bits.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass

import numpy as np

from .fim import PebModel, batch_fim, batch_inverse_trace
from .manifold import DegenerateScenarioError
from .scenario import Scenario, derive_rng
from .schedule import OptimizerReport, PhaseSchedule

METHOD = "DPSOA-I-GWO"
TWO_PI = 2 * math.pi
MAX_BITS = 16


def t_bit(x, bits: int) -> np.ndarray:
    """Retract real angles onto the 2^bits-state grid (rounded top state wraps to 0).
    Exact halves round down, matching :func:`rispeb.baseline.quantize_angles`."""
    levels = 2 ** bits
    v = np.mod(levels * np.asarray(x, dtype=float) / TWO_PI, levels)
    idx = np.ceil(v - 0.5)
    idx = np.where(idx >= levels, 0.0, idx)
    return (TWO_PI / levels) * idx


def round_codes(v, bits: int) -> np.ndarray:
    """t_bit in code units: nearest integer (halves down) modulo 2^bits."""
    idx = np.ceil(np.asarray(v) - 0.5).astype(np.int64)
    return (idx & (2 ** bits - 1)).astype(code_dtype(bits))


def code_dtype(bits: int):
    return np.int8 if bits <= 6 else np.int32


def angles_to_codes(x, bits: int) -> np.ndarray:
    return round_codes(np.asarray(x, dtype=float) * (2 ** bits / TWO_PI), bits)


def codes_to_angles(codes, bits: int) -> np.ndarray:
    return np.asarray(codes, dtype=float) * (TWO_PI / 2 ** bits)


def decode(position: np.ndarray, element_counts, num_measurements: int) -> list[np.ndarray]:
    """Per-RIS angle blocks (L_i x N) from a flat wolf position."""
    position = np.asarray(position)
    n = num_measurements
    if position.shape[-1] != n * sum(element_counts):
        raise ValueError(f"position has {position.shape[-1]} entries, expected "
                         f"{n * sum(element_counts)}")
    blocks, start = [], 0
    for L in element_counts:
        seg = position[..., start:start + n * L]
        blocks.append(np.swapaxes(seg.reshape(seg.shape[:-1] + (n, L)), -1, -2))
        start += n * L
    return blocks


def encode(angle_blocks) -> np.ndarray:
    return np.concatenate([np.asarray(b).T.reshape(-1) for b in angle_blocks])


def decode_schedule(position, element_counts, num_measurements) -> PhaseSchedule:
    return PhaseSchedule.from_angles(decode(position, element_counts, num_measurements))


class Fitness:
    """PEB of wolves given as state codes, batched, with a digest-keyed cache."""

    def __init__(self, model: PebModel, bits: int, cache: bool = True):
        self.model = model
        self.bits = bits
        self.table = np.exp(1j * TWO_PI * np.arange(2 ** bits) / 2 ** bits)
        self.cache: dict[bytes, float] | None = {} if cache else None
        self.evaluations = 0

    def evaluate(self, codes: np.ndarray) -> np.ndarray:
        blocks = [self.table[b] for b in decode(codes, self.model.element_counts,
                                                self.model.num_measurements)]
        self.evaluations += len(codes)
        return np.sqrt(batch_inverse_trace(batch_fim(self.model, blocks)))

    def __call__(self, codes) -> np.ndarray:
        codes = np.atleast_2d(np.asarray(codes, dtype=code_dtype(self.bits)))
        if self.cache is None:
            return self.evaluate(codes)
        out = np.empty(len(codes))
        todo, keys, fresh = [], [], {}
        for j, row in enumerate(codes):
            key = hashlib.blake2b(row.tobytes(), digest_size=16).digest()
            if key in self.cache:
                out[j] = self.cache[key]
            elif key in fresh:       # duplicate inside this batch
                fresh[key].append(j)
            else:
                fresh[key] = [j]
                todo.append(j)
                keys.append(key)
        if todo:
            values = self.evaluate(codes[todo])
            for key, v in zip(keys, values):
                self.cache[key] = float(v)
                out[fresh[key]] = v
        return out


def decode_fitness(scenario: Scenario, position) -> float:
    """PEB of the schedule encoded by the angle vector ``position`` (wrapped by exp)."""
    model = PebModel(scenario)
    blocks = [np.exp(1j * a) for a in decode(np.asarray(position, dtype=float),
                                              model.element_counts, model.num_measurements)]
    return model.peb(blocks)


@dataclass
class PackState:
    codes: np.ndarray              # (M, D) integer state codes
    fitness: np.ndarray            # (M,)
    iteration: int
    horizon: int
    bits: int

    @property
    def positions(self) -> np.ndarray:
        """Wolf positions as angles."""
        return codes_to_angles(self.codes, self.bits)

    @property
    def leaders(self) -> np.ndarray:
        """Indices of the three fittest wolves; ties go to the lower index."""
        return np.argsort(self.fitness, kind="stable")[:3]

    @property
    def a_coefficient(self) -> float:
        return 2.0 - 2.0 * (self.iteration / self.horizon) ** 2


def pairwise_sq_distances(codes: np.ndarray) -> np.ndarray:
    """Squared code-unit distances between rows (exact: integer sums in float64)."""
    x = np.asarray(codes, dtype=float)
    sq = np.einsum("ij,ij->i", x, x)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.fill_diagonal(d2, 0.0)
    return np.maximum(d2, 0.0)


def draw_row_length(dim: int) -> int:
    return 7 * dim + 2


def draw_rows(rng: np.random.Generator, wolves: int, dim: int) -> np.ndarray:
    return rng.random((wolves, draw_row_length(dim)), dtype=np.float32)


def _pick(u, count):
    return np.minimum((u * count).astype(np.int64), count - 1)


def candidates_from_draws(pack: PackState, draws: np.ndarray):
    """Both candidates for every wolf given its draw rows (M, 7D + 2).

    Returns (group, learn) as (M, D) code arrays.
    """
    x = pack.codes.astype(np.float32)
    m_count, dim = x.shape
    a = np.float32(pack.a_coefficient)
    big_a = (2.0 * draws[:, :3 * dim] - 1.0).reshape(m_count, 3, dim) * a
    big_c = 2.0 * draws[:, 3 * dim:6 * dim].reshape(m_count, 3, dim)
    u_neigh = draws[:, 6 * dim].astype(float)
    u_rand = draws[:, 6 * dim + 1].astype(float)
    u_learn = draws[:, 6 * dim + 2:]

    leaders = x[pack.leaders][None]                     # (1, 3, D)
    big_c *= leaders
    big_c -= x[:, None, :]
    np.abs(big_c, out=big_c)
    big_c *= big_a
    guided = leaders.sum(axis=1) - big_c.sum(axis=1)
    group = round_codes(guided / np.float32(3.0), pack.bits)

    diff = x - group
    radius_sq = np.einsum("ij,ij->i", diff, diff, dtype=float)
    hood = pairwise_sq_distances(pack.codes) <= radius_sq[:, None]
    hood[np.arange(m_count), np.arange(m_count)] = True  # self always qualifies
    counts = hood.sum(axis=1)
    k = _pick(u_neigh, counts)
    # index of the k-th member of each neighbourhood (members in wolf order)
    neigh = np.argmax(np.cumsum(hood, axis=1) > k[:, None], axis=1)
    rand = _pick(u_rand, m_count)
    learn = round_codes(x + u_learn * (x[neigh] - x[rand]), pack.bits)
    return group, learn


def propose_candidates(pack: PackState, m: int, rng: np.random.Generator):
    """Group-hunting and neighbourhood-learning candidates (codes) for wolf ``m``.

    Consumes one draw row from ``rng``.
    """
    dim = pack.codes.shape[1]
    draws = np.zeros((pack.codes.shape[0], draw_row_length(dim)), dtype=np.float32)
    draws[m] = draw_rows(rng, 1, dim)[0]
    group, learn = candidates_from_draws(pack, draws)
    return group[m], learn[m]


def greedy_update(current: np.ndarray, f_current: float, x_group: np.ndarray, f_group: float,
                  x_learn: np.ndarray, f_learn: float) -> tuple[np.ndarray, float]:
    """Better of the two candidates (ties favour the learning candidate), then keep
    the current wolf only if it is strictly better than that."""
    if f_group < f_learn:
        best, f_best = x_group, f_group
    else:
        best, f_best = x_learn, f_learn
    if f_current < f_best:
        return current, f_current
    return best, f_best


def greedy_update_all(current, f_current, group, f_group, learn, f_learn):
    """:func:`greedy_update` applied to every wolf at once."""
    take_group = f_group < f_learn
    best = np.where(take_group[:, None], group, learn)
    f_best = np.where(take_group, f_group, f_learn)
    keep = f_current < f_best
    return np.where(keep[:, None], current, best), np.where(keep, f_current, f_best)


@dataclass(frozen=True)
class GwoConfig:
    bits: int = 2
    wolves: int = 100
    iterations: int = 1000
    cache: bool = True


def initial_pack(fitness: Fitness, dim: int, config: GwoConfig, rng) -> PackState:
    levels = 2 ** config.bits
    # integers 0..levels inclusive; the top state is 2 pi and wraps to 0
    codes = round_codes(rng.integers(0, levels + 1, size=(config.wolves, dim)), config.bits)
    return PackState(codes, fitness(codes), 0, config.iterations, config.bits)


def optimize(scenario: Scenario, config: GwoConfig = GwoConfig(), seed: int | None = None,
             model: PebModel | None = None, callback=None) -> OptimizerReport:
    """Run the pack for ``config.iterations`` rounds; the report trace holds the
    best fitness before the first round and after each one."""
    if config.wolves < 3:
        raise ValueError("need at least three wolves")
    if config.iterations < 1:
        raise ValueError("need at least one iteration")
    if not 1 <= config.bits <= MAX_BITS:
        raise ValueError(f"bits must be between 1 and {MAX_BITS}")
    t_start = time.perf_counter()
    model = PebModel(scenario) if model is None else model
    if model.degenerate:
        raise DegenerateScenarioError("no RIS provides position information: "
                                      + "; ".join(model.diagnostics))
    seed = scenario.rng_seed if seed is None else seed
    rng = derive_rng(seed, "gwo")
    fitness = Fitness(model, config.bits, cache=config.cache)
    dim = scenario.num_measurements * sum(model.element_counts)
    pack = initial_pack(fitness, dim, config, rng)
    trace = [float(np.min(pack.fitness))]
    m_count = config.wolves
    for t in range(1, config.iterations + 1):
        pack.iteration = t
        group, learn = candidates_from_draws(pack, draw_rows(rng, m_count, dim))
        scores = fitness(np.vstack([group, learn]))
        pack.codes, pack.fitness = greedy_update_all(
            pack.codes, pack.fitness, group, scores[:m_count], learn, scores[m_count:])
        trace.append(float(np.min(pack.fitness)))
        if callback is not None:
            callback(pack)
    best = int(pack.leaders[0])
    angles = codes_to_angles(pack.codes[best], config.bits)
    schedule = decode_schedule(angles, model.element_counts, scenario.num_measurements)
    flags = [f"fitness evaluations: {fitness.evaluations}"]
    return OptimizerReport(METHOD, schedule, float(pack.fitness[best]), trace, config.iterations,
                           seed, time.perf_counter() - t_start, True, flags)
