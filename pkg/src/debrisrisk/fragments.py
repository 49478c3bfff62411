"""Fragment grouping: the power-law mass/count model and the 7-fragment set."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core import DataError, DomainError, FragmentSpec, GeometryClass, fmt_float

ALUMINIUM_DENSITY = 2700.0  # kg/m^3

# Volume and projected area per unit scale ``a``:
#   ball: radius a; cuboid: cube of edge a; flake: a x a x a/10 plate;
#   rods: a x a section with length 5a or 10a, area taken side-on (l * a).
_VOLUME_FACTOR = {
    GeometryClass.BallBlock: 4.0 / 3.0 * math.pi,
    GeometryClass.CuboidBlock: 1.0,
    GeometryClass.Flake: 0.1,
    GeometryClass.Rhabditiform5: 5.0,
    GeometryClass.Rhabditiform10: 10.0,
}
_AREA_FACTOR = {
    GeometryClass.BallBlock: math.pi,
    GeometryClass.CuboidBlock: 1.0,
    GeometryClass.Flake: 1.0,
    GeometryClass.Rhabditiform5: 5.0,
    GeometryClass.Rhabditiform10: 10.0,
}

# (mass kg, geometry) of the seven surviving fragments.
DEFAULT_FRAGMENTS = (
    (16.0, GeometryClass.BallBlock),
    (72.7, GeometryClass.CuboidBlock),
    (65.0, GeometryClass.Flake),
    (225.5, GeometryClass.CuboidBlock),
    (8.0, GeometryClass.Rhabditiform5),
    (20.7, GeometryClass.Rhabditiform10),
    (108.5, GeometryClass.BallBlock),
)


def cross_section_area(geometry: GeometryClass, scale: float) -> float:
    return _AREA_FACTOR[geometry] * scale * scale


def unit_mass(geometry: GeometryClass, scale: float, density: float = ALUMINIUM_DENSITY) -> float:
    """Mass of a single piece of the given shape and scale."""
    return density * _VOLUME_FACTOR[geometry] * scale ** 3


def scale_for_mass(geometry: GeometryClass, mass: float, density: float = ALUMINIUM_DENSITY) -> float:
    return (mass / (density * _VOLUME_FACTOR[geometry])) ** (1.0 / 3.0)


def make_fragment(id: int, geometry: GeometryClass, mass: float,
                  density: float = ALUMINIUM_DENSITY) -> FragmentSpec:
    scale = scale_for_mass(geometry, mass, density)
    return FragmentSpec(id, geometry, scale, mass, cross_section_area(geometry, scale))


@dataclass(frozen=True)
class MassDistribution:
    """Power law ``n = C * m**-k`` linking single-piece mass to piece count.

    ``C`` is fixed by requiring that the groups (one per scale) carry the
    whole ``total_mass``: sum over scales of ``n(m_s) * m_s == total_mass``.
    """

    total_mass: float
    k_exponent: float = 0.553
    scales: tuple[float, ...] = (0.1, 0.01, 0.001)
    geometry: GeometryClass = GeometryClass.CuboidBlock
    density: float = ALUMINIUM_DENSITY

    def __post_init__(self):
        if not self.total_mass > 0:
            raise DomainError(f"total_mass must be positive, got {self.total_mass}")
        if not self.k_exponent > 0:
            raise DomainError(f"k_exponent must be positive, got {self.k_exponent}")
        if not self.scales or any(s <= 0 for s in self.scales):
            raise DomainError(f"scales must be positive, got {self.scales}")
        object.__setattr__(self, "scales", tuple(float(s) for s in self.scales))

    @property
    def unit_masses(self) -> np.ndarray:
        return np.array([unit_mass(self.geometry, s, self.density) for s in self.scales])

    @property
    def c_coefficient(self) -> float:
        m = self.unit_masses
        return self.total_mass / float(np.sum(m ** (1.0 - self.k_exponent)))

    def counts(self) -> np.ndarray:
        """Fractional piece counts per scale."""
        return fragment_count(self.unit_masses, self)

    def group_masses(self) -> np.ndarray:
        return self.counts() * self.unit_masses

    def groups(self) -> list[tuple[float, float, int]]:
        """Materialized ``(scale, unit_mass, count)`` groups; counts rounded, at least 1."""
        return [(s, float(m), max(1, int(round(n))))
                for s, m, n in zip(self.scales, self.unit_masses, self.counts())]


def fragment_count(m, dist: MassDistribution | None = None, *, c: float | None = None,
                   k: float | None = None):
    """Piece count ``C * m**-k`` for single-piece mass ``m`` (scalar or array).

    Either pass a MassDistribution or explicit ``c`` and ``k``.
    """
    if dist is not None:
        c = dist.c_coefficient if c is None else c
        k = dist.k_exponent if k is None else k
    if c is None or k is None:
        raise TypeError("fragment_count needs a MassDistribution or both c and k")
    m_arr = np.asarray(m, dtype=float)
    if np.any(~(m_arr > 0)):
        raise DomainError(f"mass must be positive, got {m!r}")
    n = c * m_arr ** (-k)
    return float(n) if n.ndim == 0 else n


def default_fragment_set(density: float = ALUMINIUM_DENSITY) -> list[FragmentSpec]:
    """The seven fragments the vehicle breaks into, ids 1..7."""
    return [make_fragment(i, geom, mass, density)
            for i, (mass, geom) in enumerate(DEFAULT_FRAGMENTS, start=1)]


FRAGMENT_COLUMNS = ("id", "geometry_class", "scale_m", "mass_kg", "area_m2")


def write_fragments(fragments, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FRAGMENT_COLUMNS)
        for f in fragments:
            w.writerow([f.id, f.geometry_class.name, fmt_float(f.scale),
                        fmt_float(f.mass), fmt_float(f.cross_section_area)])


def read_fragments(path) -> list[FragmentSpec]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != FRAGMENT_COLUMNS:
            raise DataError(f"{path}: expected columns {','.join(FRAGMENT_COLUMNS)}")
        out = []
        for lineno, row in enumerate(reader, start=2):
            try:
                out.append(FragmentSpec(int(row["id"]), GeometryClass[row["geometry_class"]],
                                        float(row["scale_m"]), float(row["mass_kg"]),
                                        float(row["area_m2"])))
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    ids = [f.id for f in out]
    if ids != list(range(1, len(out) + 1)):
        raise DataError(f"{path}: fragment ids must be 1..n in order, got {ids}")
    return out
