"""Synthetic landing data from a simple ballistic model.

Each fragment is flown as a drag-only point mass over a spherical,
non-rotating Earth with an exponential atmosphere, integrated with
fixed-step RK4 from the entry state described by a FeatureVector.

Lift, winds, Earth rotation and ablation are deliberately absent; the
output only needs the dataset schema and plausible structure, not
fidelity.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import _backend
from .core import (DataError, Dataset, FeatureVector, FragmentSpec, GeometryClass,
                   LabelVector, coerce, format_value, normalize_lon, parse_kv)
from .fragments import default_fragment_set

# Per-shape drag coefficients used when the config gives none.
DEFAULT_DRAG = {
    GeometryClass.BallBlock: 0.92,
    GeometryClass.CuboidBlock: 1.05,
    GeometryClass.Flake: 1.2,
    GeometryClass.Rhabditiform5: 1.0,
    GeometryClass.Rhabditiform10: 1.0,
}

# Uniform sampling ranges (low, high) for the entry-state fields that are
# not fixed by the orbit geometry. Altitudes bracket typical breakup heights.
FEATURE_RANGES = {
    "initial_altitude": (75e3, 85e3),
    "initial_velocity": (6e3, 8e3),
    "initial_trajectory_inclination": (-10.0, -2.0),
}


class NoImpact(RuntimeError):
    """The trajectory did not reach the ground within the step budget."""


@dataclass(frozen=True)
class BallisticConfig:
    drag_coefficients: tuple[float, ...] = ()
    atmosphere_scale_height: float = 7200.0
    sea_level_density: float = 1.225
    earth_radius: float = 6371e3
    gravity: float = 9.80665
    integration_step: float = 0.1
    max_flight_time: float = 3600.0
    orbital_inclination: float = 42.0
    uniform_gravity: bool = False

    def __post_init__(self):
        object.__setattr__(self, "drag_coefficients",
                           tuple(float(c) for c in self.drag_coefficients))
        for name in ("atmosphere_scale_height", "earth_radius", "gravity",
                     "integration_step", "max_flight_time"):
            if not getattr(self, name) > 0:
                raise DataError(f"{name} must be positive, got {getattr(self, name)}")
        if self.sea_level_density < 0:
            raise DataError(f"sea_level_density must be >= 0, got {self.sea_level_density}")
        if any(c < 0 for c in self.drag_coefficients):
            raise DataError("drag_coefficients must be >= 0")

    @property
    def mu(self) -> float:
        return self.gravity * self.earth_radius ** 2

    @property
    def max_steps(self) -> int:
        return int(math.ceil(self.max_flight_time / self.integration_step))

    def drag_coefficient(self, fragment: FragmentSpec) -> float:
        if self.drag_coefficients:
            if fragment.id > len(self.drag_coefficients):
                raise DataError(f"no drag coefficient for fragment {fragment.id}")
            return self.drag_coefficients[fragment.id - 1]
        return DEFAULT_DRAG[fragment.geometry_class]

    def to_kv(self) -> str:
        return "".join(f"{k}={format_value(v)}\n" for k, v in asdict(self).items())

    @classmethod
    def from_kv(cls, text: str) -> "BallisticConfig":
        raw = parse_kv(text)
        defaults = cls()
        known = {f.name for f in fields(cls)}
        kw = {}
        for key, value in raw.items():
            if key not in known:
                raise DataError(f"unknown config key {key!r}")
            like = getattr(defaults, key)
            try:
                kw[key] = coerce(value, like if like != () else (0.0,))
            except ValueError as exc:
                raise DataError(f"{key}: {exc}") from None
        return cls(**kw)


def capped_heading(lat_deg: float, azimuth_deg: float, cap_deg: float) -> float:
    """Heading (deg from north) closest to ``azimuth`` whose great circle
    stays within ``cap_deg`` of the equator.

    A great circle through latitude ``lat`` with heading ``psi`` reaches
    ``acos(cos(lat) * |sin(psi)|)`` at most; headings too close to the
    meridian are rotated toward east/west, keeping their quadrant.
    """
    if cap_deg >= 90.0:
        return azimuth_deg
    psi = math.radians(azimuth_deg)
    cos_lat = math.cos(math.radians(lat_deg))
    s_min = math.cos(math.radians(cap_deg)) / cos_lat if cos_lat > 0 else 1.0
    s_min = min(s_min, 1.0)
    s, c = math.sin(psi), math.cos(psi)
    if abs(s) >= s_min:
        return azimuth_deg
    sgn_s = 1.0 if s >= 0 else -1.0
    sgn_c = 1.0 if c >= 0 else -1.0
    return math.degrees(math.atan2(sgn_s * s_min, sgn_c * math.sqrt(1.0 - s_min * s_min))) % 360.0


def entry_state(x: FeatureVector, cfg: BallisticConfig) -> np.ndarray:
    """Earth-centred Cartesian position and velocity for an entry state."""
    lam = math.radians(x.origin_lon)
    phi = math.radians(x.origin_lat)
    psi = math.radians(capped_heading(x.origin_lat, x.azimuth, cfg.orbital_inclination))
    gam = math.radians(x.initial_trajectory_inclination)
    r = cfg.earth_radius + x.initial_altitude
    sl, cl, sp, cp = math.sin(lam), math.cos(lam), math.sin(phi), math.cos(phi)
    up = np.array([cp * cl, cp * sl, sp])
    east = np.array([-sl, cl, 0.0])
    north = np.array([-sp * cl, -sp * sl, cp])
    v = x.initial_velocity
    vel = v * (math.cos(gam) * math.sin(psi) * east
               + math.cos(gam) * math.cos(psi) * north
               + math.sin(gam) * up)
    return np.concatenate([r * up, vel])


def drag_factor(fragment: FragmentSpec, cfg: BallisticConfig) -> float:
    """``0.5 * Cd * A / m`` so that drag acceleration is ``factor * rho * |v| * v``."""
    return 0.5 * cfg.drag_coefficient(fragment) * fragment.cross_section_area / fragment.mass


def _to_labels(final: np.ndarray, cap: float) -> np.ndarray:
    x, y, z = final[:, 0], final[:, 1], final[:, 2]
    r = np.sqrt(x * x + y * y + z * z)
    lat = np.degrees(np.arcsin(np.clip(z / r, -1.0, 1.0)))
    if cap < 90.0:
        # great-circle motion keeps |lat| <= cap; clip only removes roundoff
        lat = np.clip(lat, -cap, cap)
    lon = normalize_lon(np.degrees(np.arctan2(y, x)))
    vx, vy, vz = final[:, 3], final[:, 4], final[:, 5]
    speed = np.sqrt(vx * vx + vy * vy + vz * vz)
    return np.stack([lon, lat, speed], axis=1)


def _simulate_batch(X: np.ndarray, fragments, cfg: BallisticConfig):
    """Fly every (row, fragment) pair; returns labels (n, F, 3) and landed mask (n, F)."""
    n, nf = X.shape[0], len(fragments)
    states = np.empty((n * nf, 6))
    drag = np.empty(n * nf)
    for i in range(n):
        st = entry_state(FeatureVector.from_array(X[i]), cfg)
        for k, frag in enumerate(fragments):
            states[i * nf + k] = st
            drag[i * nf + k] = drag_factor(frag, cfg)
    ker = _backend.kernels
    final, status = ker.integrate_landing(
        states, drag, cfg.mu, cfg.gravity, cfg.earth_radius, cfg.sea_level_density,
        cfg.atmosphere_scale_height, cfg.uniform_gravity, cfg.integration_step,
        cfg.max_steps)
    labels = _to_labels(final, cfg.orbital_inclination).reshape(n, nf, 3)
    return labels, (status == 0).reshape(n, nf)


def simulate_landing(x: FeatureVector, f: FragmentSpec,
                     cfg: BallisticConfig | None = None) -> LabelVector:
    cfg = cfg or BallisticConfig()
    x.validate()
    labels, landed = _simulate_batch(x.as_array()[None, :], [f], cfg)
    if not landed[0, 0]:
        raise NoImpact(f"fragment {f.id} still airborne after {cfg.max_flight_time} s")
    return LabelVector(*(float(v) for v in labels[0, 0]))


def orbit_entry_point(node_lon: float, arg_lat: float, inclination: float):
    """Ground position and heading of a prograde circular orbit.

    ``node_lon`` is the ascending-node longitude (deg), ``arg_lat`` the
    angle travelled from the node (rad). Returns ``(lon, lat, azimuth)``
    in degrees.
    """
    i = math.radians(inclination)
    si, ci = math.sin(i), math.cos(i)
    su, cu = math.sin(arg_lat), math.cos(arg_lat)
    lat = math.degrees(math.asin(si * su))
    lon = normalize_lon(node_lon + math.degrees(math.atan2(ci * su, cu)))
    az = math.degrees(math.atan2(ci, si * cu)) % 360.0
    return lon, lat, az


def _draw_row(rng: np.random.Generator, inclination: float) -> np.ndarray:
    # entry points lie on the ground track of a single inclined orbit
    lon, lat, az = orbit_entry_point(rng.uniform(-180.0, 180.0),
                                     rng.uniform(0.0, 2.0 * math.pi), inclination)
    rest = [rng.uniform(lo, hi) for lo, hi in FEATURE_RANGES.values()]
    return np.array([lon, lat, az, *rest])


def generate_dataset(n: int = 1489, seed: int = 1, cfg: BallisticConfig | None = None,
                     fragments: list[FragmentSpec] | None = None,
                     max_redraws: int = 1000) -> Dataset:
    """Sample ``n`` entry states and simulate every fragment's landing.

    Entry points are spread uniformly in node longitude and along-track
    angle of a circular orbit with ``cfg.orbital_inclination``, so origin
    latitude and azimuth are coupled the way they are for a real decaying
    spacecraft.

    Row ``i`` draws from its own generator seeded by ``(seed, i)``; a row
    where any fragment fails to land is redrawn from that same generator,
    so each row depends only on ``(seed, i)``.
    """
    if n < 10:
        raise DataError(f"need at least 10 rows, got {n}")
    cfg = cfg or BallisticConfig()
    fragments = fragments or default_fragment_set()
    rngs = [np.random.default_rng([seed, i]) for i in range(n)]
    X = np.array([_draw_row(r, cfg.orbital_inclination) for r in rngs])
    Y = np.empty((n, len(fragments), 3))
    pending = np.arange(n)
    for _ in range(max_redraws):
        labels, landed = _simulate_batch(X[pending], fragments, cfg)
        ok = landed.all(axis=1)
        Y[pending[ok]] = labels[ok]
        pending = pending[~ok]
        if pending.size == 0:
            break
        for i in pending:
            X[i] = _draw_row(rngs[i], cfg.orbital_inclination)
    else:
        raise NoImpact(f"{pending.size} rows never produced a full set of landings")
    return Dataset(X, Y, split_seed=seed)
