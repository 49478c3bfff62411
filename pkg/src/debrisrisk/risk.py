"""Ground risk of landed fragments: geo lookup, kinetic energy, risk level."""
from __future__ import annotations

import csv
import enum
import json
import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (DataError, DomainError, FragmentSpec, LabelVector, RangeError, fmt_float,
                   normalize_lon)

log = logging.getLogger(__name__)

EARTH_RADIUS_KM = 6371.0
HUMAN_AREA_M2 = 0.36


class EmptyGrid(DataError):
    pass


class MissingGdp(DataError):
    def __init__(self, admin_id: str):
        self.admin_id = admin_id
        super().__init__(f"no GDP record for admin region {admin_id!r}")


class DegenerateRange(ValueError):
    pass


class DangerLevel(enum.IntEnum):
    Negligible = 0
    Low = 1
    Medium = 2
    High = 3
    VeryHigh = 4

    @property
    def color(self) -> str:
        return LEVEL_COLORS[self]


LEVEL_COLORS = {
    DangerLevel.Negligible: "green",
    DangerLevel.Low: "blue",
    DangerLevel.Medium: "yellow",
    DangerLevel.High: "orange",
    DangerLevel.VeryHigh: "red",
}
# lower edges of Low..VeryHigh; each interval is [edge, next edge)
LEVEL_EDGES = (0.04, 0.16, 0.36, 0.64)


@dataclass(frozen=True)
class GeoCell:
    admin_id: str
    centroid_lon: float
    centroid_lat: float
    population_density: float

    def __post_init__(self):
        if not self.population_density >= 0:
            raise RangeError("population_density", self.population_density)


@dataclass(frozen=True)
class GdpRecord:
    admin_id: str
    gdp: float

    def __post_init__(self):
        if not self.gdp >= 0:
            raise RangeError("gdp", self.gdp)


class PopulationGrid:
    """Admin-region centroids held as arrays for vectorized lookup."""

    def __init__(self, cells: Sequence[GeoCell]):
        self.cells = list(cells)
        if not self.cells:
            raise EmptyGrid("population grid is empty")
        self.lon = np.radians([c.centroid_lon for c in self.cells])
        self.lat = np.radians([c.centroid_lat for c in self.cells])
        self.cos_lat = np.cos(self.lat)
        self.ids = np.array([c.admin_id for c in self.cells])

    def __len__(self) -> int:
        return len(self.cells)

    def distances_km(self, lon: float, lat: float) -> np.ndarray:
        lam, phi = math.radians(lon), math.radians(lat)
        return haversine_km(phi, lam, self.lat, self.lon, math.cos(phi), self.cos_lat)

    def nearest(self, lon: float, lat: float) -> GeoCell:
        d = self.distances_km(lon, lat)
        ties = np.flatnonzero(d == d.min())
        if ties.size == 1:
            return self.cells[int(ties[0])]
        return self.cells[int(ties[np.argmin(self.ids[ties])])]


def haversine_km(phi1, lam1, phi2, lam2, cos1=None, cos2=None):
    """Great-circle distance in km between points given in radians."""
    cos1 = np.cos(phi1) if cos1 is None else cos1
    cos2 = np.cos(phi2) if cos2 is None else cos2
    a = np.sin((phi2 - phi1) / 2.0) ** 2 + cos1 * cos2 * np.sin((lam2 - lam1) / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(a, 0.0, 1.0)))


def nearest_cell(lon: float, lat: float, grid) -> GeoCell:
    """Cell whose centroid is closest by great-circle distance; exact ties
    go to the lexicographically smallest ``admin_id``."""
    if not isinstance(grid, PopulationGrid):
        if not grid:
            raise EmptyGrid("population grid is empty")
        grid = PopulationGrid(grid)
    return grid.nearest(lon, lat)


def kinetic_energy(mass: float, v: float) -> float:
    if not mass > 0:
        raise DomainError(f"mass must be positive, got {mass}")
    if v < 0:
        raise DomainError(f"speed must be non-negative, got {v}")
    return 0.5 * mass * v * v


def casualty_area(areas, a_h: float = HUMAN_AREA_M2) -> float:
    """Summed casualty area ``sum (sqrt(a_h) + sqrt(A_i))^2`` in m^2."""
    areas = np.atleast_1d(np.asarray(areas, dtype=float))
    if np.any(areas < 0):
        raise DomainError("fragment areas must be non-negative")
    return float(np.sum((math.sqrt(a_h) + np.sqrt(areas)) ** 2))


def reentry_risk(a: float, rho: float, u: float, ke: float) -> float:
    """Fragment risk: area x population density x economy x kinetic energy."""
    if min(a, rho, u, ke) < 0:
        raise DomainError("risk factors must be non-negative")
    return a * rho * u * ke


def normalize_risks(raw) -> np.ndarray:
    """Min-max scale to [0, 1]. Raises DegenerateRange if there is no spread."""
    raw = np.asarray(raw, dtype=float)
    if raw.size < 2:
        raise DegenerateRange("need at least two risk values to normalize")
    lo, hi = float(raw.min()), float(raw.max())
    if not hi > lo:
        raise DegenerateRange("all risk values are equal")
    # dividing (rather than multiplying by 1/span) sends the max to exactly 1
    return np.clip((raw - lo) / (hi - lo), 0.0, 1.0)


def danger_level(w: float) -> DangerLevel:
    if not 0.0 <= w <= 1.0:
        raise RangeError("normalized_risk", w)
    for level, edge in zip(DangerLevel, LEVEL_EDGES):
        if w < edge:
            return level
    return DangerLevel.VeryHigh


@dataclass(frozen=True)
class RiskReport:
    fragment_id: int
    landing: LabelVector
    admin_id: str
    ke: float
    rho: float
    u: float
    area: float
    raw_risk: float
    normalized_risk: float
    level: DangerLevel
    casualty_area_term: float
    scenario: int = 0


RISK_COLUMNS = ("scenario", "fragment_id", "landing_lon", "landing_lat", "landing_velocity",
                "admin_id", "ke_j", "rho_per_km2", "u", "area_m2", "raw_risk",
                "normalized_risk", "level", "casualty_area_m2")


def assess(fragments: Sequence[FragmentSpec], landings: Sequence[LabelVector], grid,
           gdp, scenario: int = 0) -> list[RiskReport]:
    """Score each fragment's landing and bin the normalized risks.

    ``gdp`` maps admin_id to GdpRecord (or is a sequence of them). When all
    raw risks coincide, including the single-fragment case, every fragment
    is given normalized risk 0 with a logged warning.
    """
    if len(fragments) != len(landings):
        raise DataError(f"{len(fragments)} fragments but {len(landings)} landings")
    if not isinstance(grid, PopulationGrid):
        grid = PopulationGrid(grid)
    gdp_map = gdp if isinstance(gdp, dict) else {g.admin_id: g for g in gdp}
    if not gdp_map:
        raise DataError("GDP table is empty")
    partial = []
    for frag, land in zip(fragments, landings):
        cell = grid.nearest(land.landing_lon, land.landing_lat)
        rec = gdp_map.get(cell.admin_id)
        if rec is None:
            raise MissingGdp(cell.admin_id)
        ke = kinetic_energy(frag.mass, land.landing_velocity)
        e = reentry_risk(frag.cross_section_area, cell.population_density, rec.gdp, ke)
        partial.append((frag, land, cell, rec, ke, e))
    raw = np.array([p[5] for p in partial])
    try:
        w = normalize_risks(raw)
    except DegenerateRange as exc:
        log.warning("risk normalization degenerate (%s); using 0 for all fragments", exc)
        w = np.zeros(len(raw))
    return [
        RiskReport(frag.id, land, cell.admin_id, ke, cell.population_density, rec.gdp,
                   frag.cross_section_area, e, float(wi), danger_level(float(wi)),
                   casualty_area([frag.cross_section_area]), scenario)
        for (frag, land, cell, rec, ke, e), wi in zip(partial, w)
    ]


# ------------------------------------------------------------------ file I/O

GRID_COLUMNS = ("admin_id", "centroid_lon", "centroid_lat", "pop_density_per_km2")
GDP_COLUMNS = ("admin_id", "gdp")


def _read_csv(path, columns):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(c.strip() for c in reader.fieldnames) != columns:
            raise DataError(f"{path}: expected columns {','.join(columns)}")
        return list(enumerate(reader, start=2))


def read_grid(path) -> PopulationGrid:
    cells = []
    for lineno, row in _read_csv(path, GRID_COLUMNS):
        try:
            cells.append(GeoCell(row["admin_id"], float(row["centroid_lon"]),
                                 float(row["centroid_lat"]), float(row["pop_density_per_km2"])))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    if not cells:
        raise EmptyGrid(f"{path}: no grid cells")
    return PopulationGrid(cells)


def read_gdp(path) -> dict[str, GdpRecord]:
    out = {}
    for lineno, row in _read_csv(path, GDP_COLUMNS):
        try:
            out[row["admin_id"]] = GdpRecord(row["admin_id"], float(row["gdp"]))
        except ValueError as exc:
            raise DataError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_grid(cells, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_COLUMNS)
        for c in cells:
            w.writerow([c.admin_id, fmt_float(c.centroid_lon), fmt_float(c.centroid_lat),
                        fmt_float(c.population_density)])


def write_gdp(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GDP_COLUMNS)
        for r in records:
            w.writerow([r.admin_id, fmt_float(r.gdp)])


def write_risk_csv(reports, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RISK_COLUMNS)
        for r in reports:
            w.writerow([r.scenario, r.fragment_id, fmt_float(r.landing.landing_lon),
                        fmt_float(r.landing.landing_lat), fmt_float(r.landing.landing_velocity),
                        r.admin_id, fmt_float(r.ke), fmt_float(r.rho), fmt_float(r.u),
                        fmt_float(r.area), fmt_float(r.raw_risk), fmt_float(r.normalized_risk),
                        r.level.name, fmt_float(r.casualty_area_term)])


def synthetic_grid(n_cells: int, seed: int = 0):
    """Random admin regions and GDP table for demos and tests.

    Densities are log-normal (persons/km^2); GDP is uniform on [1e9, 1e12].
    """
    rng = np.random.default_rng(seed)
    lon = rng.uniform(-180.0, 180.0, n_cells)
    lat = np.degrees(np.arcsin(rng.uniform(-1.0, 1.0, n_cells)))
    dens = rng.lognormal(mean=3.0, sigma=1.5, size=n_cells)
    gdp = rng.uniform(1e9, 1e12, n_cells)
    width = len(str(n_cells - 1))
    cells = [GeoCell(f"R{i:0{width}d}", float(lon[i]), float(lat[i]), float(dens[i]))
             for i in range(n_cells)]
    records = [GdpRecord(c.admin_id, float(g)) for c, g in zip(cells, gdp)]
    return cells, records


# ------------------------------------------------------------------- GeoJSON

CIRCLE_STEP_KM = 10.0
CIRCLE_VERTICES = 64


def circle_radius_km(level: DangerLevel) -> float:
    return CIRCLE_STEP_KM * (int(level) + 1)


def circle_ring(lon: float, lat: float, radius_km: float, n: int = CIRCLE_VERTICES):
    """Closed ring of ``n`` points at constant great-circle distance from a centre."""
    phi1, lam1 = math.radians(lat), math.radians(lon)
    d = radius_km / EARTH_RADIUS_KM
    brg = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    sp, cp, sd, cd = math.sin(phi1), math.cos(phi1), math.sin(d), math.cos(d)
    phi2 = np.arcsin(np.clip(sp * cd + cp * sd * np.cos(brg), -1.0, 1.0))
    lam2 = lam1 + np.arctan2(np.sin(brg) * sd * cp, cd - sp * np.sin(phi2))
    pts = [[float(normalize_lon(math.degrees(a))), float(math.degrees(b))]
           for a, b in zip(lam2, phi2)]
    pts.append(pts[0])
    return pts


def risk_geojson(reports) -> dict:
    """FeatureCollection with a point per fragment plus five concentric circles.

    Circle ``k`` has radius ``10 km * (k + 1)`` and the colour of level ``k``;
    circles up to the fragment's own level carry ``active: true``.
    """
    features = []
    for r in reports:
        lon, lat = r.landing.landing_lon, r.landing.landing_lat
        base = {"scenario": r.scenario, "fragment_id": r.fragment_id}
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [lon, lat]},
            "properties": {**base, "kind": "landing", "admin_id": r.admin_id,
                           "level": r.level.name, "color": r.level.color,
                           "normalized_risk": r.normalized_risk, "raw_risk": r.raw_risk},
        })
        for lvl in reversed(DangerLevel):
            features.append({
                "type": "Feature",
                "geometry": {"type": "Polygon",
                             "coordinates": [circle_ring(lon, lat, circle_radius_km(lvl))]},
                "properties": {**base, "kind": "circle", "level": lvl.name,
                               "color": lvl.color, "radius_km": circle_radius_km(lvl),
                               "active": lvl <= r.level},
            })
    return {"type": "FeatureCollection", "features": features}


def write_geojson(reports, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(risk_geojson(reports), fh, sort_keys=True, indent=1)
        fh.write("\n")
