"""Scene description, unit conversion, defaults and config-file ingestion.

Internal units are linear milliwatts, meters and radians. Decibel values only
appear at the config-file boundary (``*_dbm``, ``*_dbi``, ``*_db`` keys).
"""
from __future__ import annotations

import hashlib
import math
import sys
import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
import tomli_w

ORTHO_TOL = 1e-10
UNIT_TOL = 1e-12


class ScenarioError(ValueError):
    """Invalid scenario: bad field value, broken invariant or unparsable file."""

    def __init__(self, field_name: str, reason: str):
        self.field = field_name
        self.reason = reason
        super().__init__(f"{field_name}: {reason}")


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def _vec3(value, name: str) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.shape != (3,):
        raise ScenarioError(name, f"expected a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioError(name, "non-finite component")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ApConfig:
    """Access point with a uniform linear array."""

    position: np.ndarray
    array_axis: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0, 0.0]))
    num_antennas: int = 16
    antenna_spacing: float = 0.0054
    antenna_gain: float = 10.0 ** 0.8
    transmit_power: float = 10.0 ** 0.5

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position, "ap.position_m"))
        object.__setattr__(self, "array_axis", _vec3(self.array_axis, "ap.array_axis"))
        if abs(np.linalg.norm(self.array_axis) - 1.0) > UNIT_TOL:
            raise ScenarioError("ap.array_axis", "must have unit norm")
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 1:
            raise ScenarioError("ap.num_antennas", "must be a positive integer")
        object.__setattr__(self, "num_antennas", int(self.num_antennas))
        if not self.antenna_spacing > 0:
            raise ScenarioError("ap.antenna_spacing_m", "must be positive")
        if not self.antenna_gain > 0:
            raise ScenarioError("ap.gain", "must be positive")
        if not (self.transmit_power > 0 and math.isfinite(self.transmit_power)):
            raise ScenarioError("ap.transmit_power", "must be positive and finite")


@dataclass(frozen=True, eq=False)
class RisPanel:
    """One planar RIS.

    ``e_x``/``e_y`` span the panel (horizontal/vertical), ``e_z`` is the
    normal pointing into the room. Elements are enumerated row-major:
    element ``l`` (0-based) sits in row ``l // cols`` and column ``l % cols``.
    """

    position: np.ndarray
    e_x: np.ndarray
    e_y: np.ndarray
    e_z: np.ndarray
    rows: int = 8
    cols: int = 8
    dx: float = 0.01
    dy: float = 0.01
    amplitude_gain: float = 1.0

    def __post_init__(self):
        for name in ("position", "e_x", "e_y", "e_z"):
            object.__setattr__(self, name, _vec3(getattr(self, name), f"ris.{name}"))
        for name in ("e_x", "e_y", "e_z"):
            if abs(np.linalg.norm(getattr(self, name)) - 1.0) > ORTHO_TOL:
                raise ScenarioError(f"ris.{name}", "must have unit norm")
        if (abs(self.e_x @ self.e_y) > ORTHO_TOL or abs(self.e_x @ self.e_z) > ORTHO_TOL
                or abs(self.e_y @ self.e_z) > ORTHO_TOL):
            raise ScenarioError("ris.e_x|e_y|e_z", "triad must be pairwise orthogonal")
        # handedness is not enforced: the default RIS 1 triad is left-handed
        if abs(abs(float(np.cross(self.e_x, self.e_y) @ self.e_z)) - 1.0) > ORTHO_TOL:
            raise ScenarioError("ris.e_x|e_y|e_z", "triad must be orthonormal")
        for name in ("rows", "cols"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ScenarioError(f"ris.{name}", "must be a positive integer")
            object.__setattr__(self, name, int(v))
        if not (self.dx > 0 and self.dy > 0):
            raise ScenarioError("ris.dx_m|dy_m", "element size must be positive")
        if not 0 < self.amplitude_gain <= 1:
            raise ScenarioError("ris.amplitude_gain", "must lie in (0, 1]")

    @property
    def right_handed(self) -> bool:
        return float(np.cross(self.e_x, self.e_y) @ self.e_z) > 0

    @property
    def num_elements(self) -> int:
        return self.rows * self.cols

    def element_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Centered column/row offsets ``(m - (M+1)/2, n - (N+1)/2)`` per element."""
        idx = np.arange(self.num_elements)
        m = idx % self.cols + 1
        n = idx // self.cols + 1
        return m - (self.cols + 1) / 2.0, n - (self.rows + 1) / 2.0


@dataclass(frozen=True)
class NoiseModel:
    noise_power: float = 1e-9
    num_nlos: int = 5
    nlos_suppression_db: float = 40.0
    ue_gain: float = 1.0
    # "unity" uses the diagonal term of the beamformed NLoS power (deterministic);
    # "monte-carlo" estimates it from seeded AoD draws.
    kappa_mode: str = "unity"
    kappa_draws: int = 10_000

    def __post_init__(self):
        if not (self.noise_power > 0 and math.isfinite(self.noise_power)):
            raise ScenarioError("noise_power", "must be positive and finite")
        if int(self.num_nlos) != self.num_nlos or self.num_nlos < 0:
            raise ScenarioError("nlos.count", "must be a nonnegative integer")
        object.__setattr__(self, "num_nlos", int(self.num_nlos))
        if math.isnan(self.nlos_suppression_db) or self.nlos_suppression_db == -math.inf:
            raise ScenarioError("nlos.suppression_db", "must be finite or +inf")
        if not self.ue_gain > 0:
            raise ScenarioError("ue.gain", "must be positive")
        if self.kappa_mode not in ("unity", "monte-carlo"):
            raise ScenarioError("nlos.kappa_mode", "must be 'unity' or 'monte-carlo'")
        if self.kappa_draws < 1:
            raise ScenarioError("nlos.kappa_draws", "must be positive")


DEFAULT_ROOM = (8.0, 5.0, 4.0)


@dataclass(frozen=True, eq=False)
class Scenario:
    ap: ApConfig
    ris_panels: tuple[RisPanel, ...]
    ue_position: np.ndarray
    wavelength: float = 0.0108
    noise: NoiseModel = field(default_factory=NoiseModel)
    num_measurements: int = 50
    rng_seed: int = 0
    room_size: tuple[float, float, float] | None = DEFAULT_ROOM

    def __post_init__(self):
        object.__setattr__(self, "ris_panels", tuple(self.ris_panels))
        object.__setattr__(self, "ue_position", _vec3(self.ue_position, "ue.position_m"))
        if len(self.ris_panels) < 1:
            raise ScenarioError("ris", "at least one RIS panel is required")
        if not self.wavelength > 0:
            raise ScenarioError("wavelength_m", "must be positive")
        if int(self.num_measurements) != self.num_measurements or self.num_measurements < 1:
            raise ScenarioError("measurements", "must be a positive integer")
        object.__setattr__(self, "num_measurements", int(self.num_measurements))
        if not 0 <= int(self.rng_seed) < 2 ** 64:
            raise ScenarioError("seed", "must fit in an unsigned 64-bit integer")
        object.__setattr__(self, "rng_seed", int(self.rng_seed))
        if self.room_size is not None:
            room = tuple(float(v) for v in self.room_size)
            if len(room) != 3 or min(room) <= 0:
                raise ScenarioError("room.size_m", "must be three positive lengths")
            object.__setattr__(self, "room_size", room)

    @property
    def num_ris(self) -> int:
        return len(self.ris_panels)

    @property
    def element_counts(self) -> list[int]:
        return [p.num_elements for p in self.ris_panels]

    def front_mask(self) -> list[bool]:
        return [float((self.ue_position - p.position) @ p.e_z) > 0 for p in self.ris_panels]

    @property
    def degenerate(self) -> bool:
        """True when the UE is in front of no panel at all."""
        return not any(self.front_mask())

    def with_ue(self, position) -> "Scenario":
        return replace(self, ue_position=np.asarray(position, dtype=float))

    def with_panels(self, panels) -> "Scenario":
        return replace(self, ris_panels=tuple(panels))

    def rng(self, stream: str) -> np.random.Generator:
        return derive_rng(self.rng_seed, stream)


def derive_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for a named consumer.

    The stream key is the CRC-32 of the consumer name, appended as the
    ``spawn_key`` of a :class:`numpy.random.SeedSequence` rooted at ``seed``.
    Known consumers: ``"manifold-init"``, ``"gwo"``, ``"random-schedule"``,
    ``"nlos-kappa"``.
    """
    key = zlib.crc32(stream.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(key,)))


# Wall triads used by the default room: x = 0 wall faces +x, x = 8 wall faces -x.
WEST_WALL = dict(e_x=[0.0, -1.0, 0.0], e_y=[0.0, 0.0, 1.0], e_z=[1.0, 0.0, 0.0])
EAST_WALL = dict(e_x=[0.0, -1.0, 0.0], e_y=[0.0, 0.0, 1.0], e_z=[-1.0, 0.0, 0.0])

RIS_PRESETS = {
    "ris1": dict(position=[0.0, 3.0, 2.0], **WEST_WALL),
    "ris2": dict(position=[8.0, 3.0, 3.0], **EAST_WALL),
    "ris3": dict(position=[0.0, 1.0, 3.0], **WEST_WALL),
    "ris3-b": dict(position=[0.0, 2.0, 3.0], **WEST_WALL),
    "ris4": dict(position=[8.0, 4.0, 2.0], **EAST_WALL),
}


def make_panel(name: str, rows: int = 8, cols: int = 8, **overrides) -> RisPanel:
    kw = dict(RIS_PRESETS[name])
    kw.update(overrides)
    return RisPanel(rows=rows, cols=cols, **kw)


def default_scenario() -> Scenario:
    """Two wall-mounted 8x8 RISs, 16-antenna AP at 5 dBm, N = 50 measurements."""
    return Scenario(
        ap=ApConfig(position=[5.0, 1.0, 0.0]),
        ris_panels=(make_panel("ris1"), make_panel("ris2")),
        ue_position=[4.0, 4.0, 1.0],
    )


def named_preset(name: str) -> Scenario:
    """Scene presets: ``default``/``scenarioA`` (RIS 1+2), ``scenarioB-a`` (RIS 1 +
    RIS 3 at [0,1,3]), ``scenarioB-b`` (RIS 1 + RIS 3 at [0,2,3]), and
    ``ris1``..``ris4`` with the first k panels of the heatmap progression."""
    base = default_scenario()
    if name in ("default", "scenarioA"):
        return base
    if name == "scenarioB-a":
        return base.with_panels([make_panel("ris1"), make_panel("ris3")])
    if name == "scenarioB-b":
        return base.with_panels([make_panel("ris1"), make_panel("ris3-b")])
    if name in ("ris1", "ris2", "ris3", "ris4"):
        return base.with_panels(ris_progression(int(name[-1])))
    raise ScenarioError("preset", f"unknown preset {name!r}")


def ris_progression(count: int, rows: int = 8, cols: int = 8) -> list[RisPanel]:
    """First ``count`` panels of the RIS-count study: RIS 1, 2, 3 at [0,1,3], 4 at [8,4,2]."""
    if not 1 <= count <= 4:
        raise ScenarioError("ris-count", "must be between 1 and 4")
    names = ["ris1", "ris2", "ris3", "ris4"][:count]
    return [make_panel(n, rows=rows, cols=cols) for n in names]


# ---------------------------------------------------------------------------
# config files (TOML)

_PAIRED = {
    # (section, linear key, dB key)
    "transmit_power": ("ap", "transmit_power_mw", "transmit_power_dbm"),
    "antenna_gain": ("ap", "gain_linear", "gain_dbi"),
    "ue_gain": ("ue", "gain_linear", "gain_dbi"),
}


def _pick(section: dict, lin_key: str, db_key: str, where: str, default: float) -> float:
    if lin_key in section and db_key in section:
        raise ScenarioError(f"{where}.{db_key}", f"conflicts with {where}.{lin_key}")
    if lin_key in section:
        return float(section[lin_key])
    if db_key in section:
        value = float(section[db_key])
        if not math.isfinite(value) or abs(value) > 400:
            raise ScenarioError(f"{where}.{db_key}", "decibel value out of range")
        return db_to_linear(value)
    return default


def scenario_from_dict(data: dict[str, Any]) -> Scenario:
    """Build a validated scenario from parsed config data; missing keys take defaults."""
    base = default_scenario()
    known = {"ap", "ris", "ue", "wavelength_m", "noise_power_dbm", "noise_power_mw",
             "nlos", "measurements", "seed", "room"}
    unknown = set(data) - known
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown key")

    ap_d = dict(data.get("ap", {}))
    ap = ApConfig(
        position=ap_d.get("position_m", base.ap.position),
        array_axis=ap_d.get("array_axis", base.ap.array_axis),
        num_antennas=ap_d.get("num_antennas", base.ap.num_antennas),
        antenna_spacing=float(ap_d.get("antenna_spacing_m", base.ap.antenna_spacing)),
        antenna_gain=_pick(ap_d, "gain_linear", "gain_dbi", "ap", base.ap.antenna_gain),
        transmit_power=_pick(ap_d, "transmit_power_mw", "transmit_power_dbm", "ap",
                             base.ap.transmit_power),
    )

    if "ris" in data:
        panels = []
        for k, r in enumerate(data["ris"]):
            try:
                panels.append(RisPanel(
                    position=r["position_m"], e_x=r["e_x"], e_y=r["e_y"], e_z=r["e_z"],
                    rows=r.get("rows", 8), cols=r.get("cols", 8),
                    dx=float(r.get("dx_m", 0.01)), dy=float(r.get("dy_m", 0.01)),
                    amplitude_gain=float(r.get("amplitude_gain", 1.0)),
                ))
            except KeyError as exc:
                raise ScenarioError(f"ris[{k}].{exc.args[0]}", "missing required key") from None
            except ScenarioError as exc:
                raise ScenarioError(f"ris[{k}].{exc.field.split('.', 1)[-1]}", exc.reason) from None
        panels = tuple(panels)
    else:
        panels = base.ris_panels

    ue_d = dict(data.get("ue", {}))
    nlos_d = dict(data.get("nlos", {}))
    noise = NoiseModel(
        noise_power=_pick(data, "noise_power_mw", "noise_power_dbm", "", base.noise.noise_power),
        num_nlos=nlos_d.get("count", base.noise.num_nlos),
        nlos_suppression_db=float(nlos_d.get("suppression_db", base.noise.nlos_suppression_db)),
        ue_gain=_pick(ue_d, "gain_linear", "gain_dbi", "ue", base.noise.ue_gain),
        kappa_mode=nlos_d.get("kappa_mode", base.noise.kappa_mode),
        kappa_draws=int(nlos_d.get("kappa_draws", base.noise.kappa_draws)),
    )
    room = data.get("room", {}).get("size_m", base.room_size)
    return Scenario(
        ap=ap,
        ris_panels=panels,
        ue_position=ue_d.get("position_m", base.ue_position),
        wavelength=float(data.get("wavelength_m", base.wavelength)),
        noise=noise,
        num_measurements=data.get("measurements", base.num_measurements),
        rng_seed=data.get("seed", base.rng_seed),
        room_size=tuple(room) if room is not None else None,
    )


def load_scenario(path) -> Scenario:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(str(path), f"parse error: {exc}") from None
    return scenario_from_dict(data)


def scenario_to_dict(s: Scenario) -> dict[str, Any]:
    """Canonical dict in linear units; floats are kept exactly."""

    def vec(a):
        return [float(v) for v in a]

    out: dict[str, Any] = {
        "wavelength_m": float(s.wavelength),
        "noise_power_mw": float(s.noise.noise_power),
        "measurements": s.num_measurements,
        "seed": s.rng_seed,
        "ap": {
            "position_m": vec(s.ap.position),
            "array_axis": vec(s.ap.array_axis),
            "num_antennas": s.ap.num_antennas,
            "antenna_spacing_m": float(s.ap.antenna_spacing),
            "gain_linear": float(s.ap.antenna_gain),
            "transmit_power_mw": float(s.ap.transmit_power),
        },
        "ue": {"position_m": vec(s.ue_position), "gain_linear": float(s.noise.ue_gain)},
        "nlos": {
            "count": s.noise.num_nlos,
            "suppression_db": float(s.noise.nlos_suppression_db),
            "kappa_mode": s.noise.kappa_mode,
            "kappa_draws": s.noise.kappa_draws,
        },
        "ris": [
            {
                "position_m": vec(p.position), "e_x": vec(p.e_x), "e_y": vec(p.e_y),
                "e_z": vec(p.e_z), "rows": p.rows, "cols": p.cols,
                "dx_m": float(p.dx), "dy_m": float(p.dy),
                "amplitude_gain": float(p.amplitude_gain),
            }
            for p in s.ris_panels
        ],
    }
    if s.room_size is not None:
        out["room"] = {"size_m": list(s.room_size)}
    return out


def dumps_scenario(s: Scenario) -> str:
    return tomli_w.dumps(scenario_to_dict(s))


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(dumps_scenario(s), encoding="utf-8")


def fingerprint(s: Scenario) -> str:
    """Short stable hash of the canonical serialization."""
    return hashlib.sha256(dumps_scenario(s).encode("utf-8")).hexdigest()[:12]


def scenario_equal(a: Scenario, b: Scenario) -> bool:
    return scenario_to_dict(a) == scenario_to_dict(b)

