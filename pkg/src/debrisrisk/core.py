"""Domain types shared across the package, plus the dataset CSV format.

A dataset row holds the six entry-state features and, for each of the
seven fragments, a (longitude, latitude, velocity) landing triple.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

FEATURE_NAMES = (
    "origin_lon",
    "origin_lat",
    "azimuth",
    "initial_altitude",
    "initial_velocity",
    "initial_trajectory_inclination",
)
TARGET_NAMES = ("landing_lon", "landing_lat", "landing_velocity")
TARGET_SHORT = ("lon", "lat", "vel")
N_FRAGMENTS = 7


class DataError(ValueError):
    """Input data is malformed or violates a domain invariant."""


class RangeError(DataError):
    def __init__(self, field_name: str, value=None):
        self.field = field_name
        self.value = value
        super().__init__(f"{field_name} out of range: {value!r}")


class DomainError(DataError):
    pass


def normalize_lon(lon):
    """Wrap longitude(s) into [-180, 180)."""
    wrapped = np.mod(np.asarray(lon, dtype=float) + 180.0, 360.0) - 180.0
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def _finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise RangeError(name, value)
    return value


@dataclass(frozen=True)
class FeatureVector:
    origin_lon: float
    origin_lat: float
    azimuth: float
    initial_altitude: float
    initial_velocity: float
    initial_trajectory_inclination: float

    def validate(self) -> "FeatureVector":
        for f in fields(self):
            _finite(f.name, getattr(self, f.name))
        if not -180.0 <= self.origin_lon <= 180.0:
            raise RangeError("origin_lon", self.origin_lon)
        if not -90.0 <= self.origin_lat <= 90.0:
            raise RangeError("origin_lat", self.origin_lat)
        if not 0.0 <= self.azimuth < 360.0:
            raise RangeError("azimuth", self.azimuth)
        if self.initial_altitude <= 0:
            raise RangeError("initial_altitude", self.initial_altitude)
        # zero speed is allowed for drop tests; negative is not
        if self.initial_velocity < 0:
            raise RangeError("initial_velocity", self.initial_velocity)
        return self

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in FEATURE_NAMES], dtype=float)

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise DataError(f"expected {len(FEATURE_NAMES)} features, got {len(values)}")
        kw = {n: float(v) for n, v in zip(FEATURE_NAMES, values)}
        kw["origin_lon"] = normalize_lon(kw["origin_lon"])
        return cls(**kw)


@dataclass(frozen=True)
class LabelVector:
    landing_lon: float
    landing_lat: float
    landing_velocity: float

    def validate(self) -> "LabelVector":
        for f in fields(self):
            _finite(f.name, getattr(self, f.name))
        if not -180.0 <= self.landing_lon <= 180.0:
            raise RangeError("landing_lon", self.landing_lon)
        if not -90.0 <= self.landing_lat <= 90.0:
            raise RangeError("landing_lat", self.landing_lat)
        if self.landing_velocity < 0:
            raise RangeError("landing_velocity", self.landing_velocity)
        return self

    def as_array(self) -> np.ndarray:
        return np.array([self.landing_lon, self.landing_lat, self.landing_velocity])

    @classmethod
    def from_array(cls, values: Sequence[float]) -> "LabelVector":
        lon, lat, vel = (float(v) for v in values)
        return cls(normalize_lon(lon), lat, vel)


@dataclass(frozen=True)
class Sample:
    """One feature row with the landing labels of every fragment.

    ``y[i]`` is the label of fragment id ``i + 1``.
    """

    x: FeatureVector
    y: tuple[LabelVector, ...]

    def label(self, fragment_id: int) -> LabelVector:
        if not 1 <= fragment_id <= len(self.y):
            raise RangeError("fragment_id", fragment_id)
        return self.y[fragment_id - 1]


def validate_sample(s: Sample) -> Sample:
    """Return ``s`` unchanged if every invariant holds, else raise RangeError."""
    s.x.validate()
    if not 1 <= len(s.y) <= N_FRAGMENTS:
        raise RangeError("fragment_id", len(s.y))
    for label in s.y:
        label.validate()
    return s


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (n, 6) and label tensor ``Y`` (n, n_fragments, 3)."""

    X: np.ndarray
    Y: np.ndarray
    split_seed: int = 0
    train_fraction: float = 0.7

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        Y = np.ascontiguousarray(self.Y, dtype=float)
        if X.ndim != 2 or X.shape[1] != len(FEATURE_NAMES):
            raise DataError(f"feature matrix must be (n, 6), got {X.shape}")
        if Y.ndim != 3 or Y.shape[0] != X.shape[0] or Y.shape[2] != 3:
            raise DataError(f"label tensor must be (n, n_fragments, 3), got {Y.shape}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise DataError("dataset contains NaN or Inf")
        if not 0.0 < self.train_fraction < 1.0:
            raise RangeError("train_fraction", self.train_fraction)
        X.setflags(write=False)
        Y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    def __len__(self) -> int:
        return self.X.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.split_seed == other.split_seed
            and self.train_fraction == other.train_fraction
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.Y, other.Y)
        )

    @property
    def n_fragments(self) -> int:
        return self.Y.shape[1]

    @property
    def samples(self) -> list[Sample]:
        return [
            Sample(
                FeatureVector.from_array(self.X[i]),
                tuple(LabelVector.from_array(row) for row in self.Y[i]),
            )
            for i in range(len(self))
        ]

    def target(self, fragment_id: int, target: int | str) -> np.ndarray:
        """Column of one target (0/'lon', 1/'lat', 2/'vel') for one fragment."""
        t = TARGET_SHORT.index(target) if isinstance(target, str) else int(target)
        return self.Y[:, fragment_id - 1, t]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.Y[idx], self.split_seed, self.train_fraction)

    @classmethod
    def from_samples(cls, samples: Iterable[Sample], split_seed: int = 0,
                     train_fraction: float = 0.7) -> "Dataset":
        samples = [validate_sample(s) for s in samples]
        X = np.array([s.x.as_array() for s in samples]).reshape(-1, len(FEATURE_NAMES))
        Y = np.array([[lab.as_array() for lab in s.y] for s in samples])
        return cls(X, Y.reshape(len(samples), -1, 3), split_seed, train_fraction)


class GeometryClass(enum.Enum):
    BallBlock = "A"
    CuboidBlock = "B"
    Flake = "C"
    Rhabditiform5 = "D"
    Rhabditiform10 = "E"


@dataclass(frozen=True)
class FragmentSpec:
    id: int
    geometry_class: GeometryClass
    scale: float
    mass: float
    cross_section_area: float

    def __post_init__(self):
        if not isinstance(self.geometry_class, GeometryClass):
            object.__setattr__(self, "geometry_class", GeometryClass[self.geometry_class])
        if not (self.mass > 0):
            raise RangeError("mass", self.mass)
        if not (self.cross_section_area > 0):
            raise RangeError("cross_section_area", self.cross_section_area)
        if not (self.scale > 0):
            raise RangeError("scale", self.scale)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["geometry_class"] = self.geometry_class.name
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "FragmentSpec":
        return cls(int(d["id"]), GeometryClass[d["geometry_class"]], float(d["scale"]),
                   float(d["mass"]), float(d["cross_section_area"]))


@dataclass(frozen=True)
class ModelHyperparams:
    """Learner settings. ``svr_sigma=None`` selects the median-distance
    heuristic; ``dtr_max_depth=None`` grows the tree until leaves are pure.

    ``mlp_alpha`` is the L2 penalty; the momentum factor is kept separately
    in ``mlp_momentum``.
    """

    svr_c: float = 6.13
    svr_epsilon: float = 5.0
    svr_sigma: float | None = None
    svr_tol: float = 1e-4
    dtr_max_depth: int | None = 5
    dtr_prune: bool = True
    mlp_hidden_sizes: tuple[int, ...] = (64,)
    mlp_alpha: float = 1e-5
    mlp_max_iter: int = 500
    mlp_learning_rate: float = 1e-3
    mlp_momentum: float = 0.9
    mlp_optimizer: str = "momentum"

    def __post_init__(self):
        object.__setattr__(self, "mlp_hidden_sizes", tuple(int(h) for h in self.mlp_hidden_sizes))
        if not self.svr_c > 0:
            raise RangeError("svr_c", self.svr_c)
        if not self.svr_epsilon > 0:
            raise RangeError("svr_epsilon", self.svr_epsilon)
        if self.svr_sigma is not None and not self.svr_sigma > 0:
            raise RangeError("svr_sigma", self.svr_sigma)
        if self.dtr_max_depth is not None and self.dtr_max_depth < 0:
            raise RangeError("dtr_max_depth", self.dtr_max_depth)
        if self.mlp_alpha < 0:
            raise RangeError("mlp_alpha", self.mlp_alpha)
        if self.mlp_max_iter < 0:
            raise RangeError("mlp_max_iter", self.mlp_max_iter)
        if any(h <= 0 for h in self.mlp_hidden_sizes):
            raise RangeError("mlp_hidden_sizes", self.mlp_hidden_sizes)
        if self.mlp_optimizer not in ("momentum", "adam"):
            raise RangeError("mlp_optimizer", self.mlp_optimizer)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mlp_hidden_sizes"] = list(self.mlp_hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelHyperparams":
        return cls(**d)

    def replace(self, **changes) -> "ModelHyperparams":
        d = self.to_dict()
        d.update(changes)
        return ModelHyperparams(**d)


# ---------------------------------------------------------------- dataset CSV

def dataset_header(n_fragments: int = N_FRAGMENTS) -> list[str]:
    cols = list(FEATURE_NAMES)
    for i in range(1, n_fragments + 1):
        cols += [f"lon_{i}", f"lat_{i}", f"vel_{i}"]
    return cols


def fmt_float(x: float) -> str:
    """Shortest round-trip representation."""
    return repr(float(x))


def write_dataset(dataset: Dataset, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(dataset_header(dataset.n_fragments))
        flat = dataset.Y.reshape(len(dataset), -1)
        for xrow, yrow in zip(dataset.X, flat):
            w.writerow([fmt_float(v) for v in xrow] + [fmt_float(v) for v in yrow])


def read_dataset(path, split_seed: int = 0, train_fraction: float = 0.7) -> Dataset:
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        n_label_cols = len(header) - len(FEATURE_NAMES)
        if n_label_cols <= 0 or n_label_cols % 3:
            raise DataError(f"{path}: bad header, expected 6 features then lon/lat/vel triples")
        n_frag = n_label_cols // 3
        if [h.strip() for h in header] != dataset_header(n_frag):
            raise DataError(f"{path}: unexpected column names {header}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    arr = np.array(rows)
    X = arr[:, : len(FEATURE_NAMES)].copy()
    Y = arr[:, len(FEATURE_NAMES):].reshape(len(rows), n_frag, 3).copy()
    X[:, 0] = normalize_lon(X[:, 0])
    Y[:, :, 0] = normalize_lon(Y[:, :, 0])
    for i in range(len(rows)):
        try:
            validate_sample(Sample(FeatureVector.from_array(X[i]),
                                   tuple(LabelVector.from_array(r) for r in Y[i])))
        except RangeError as exc:
            raise DataError(f"{path}:{i + 2}: {exc}") from exc
    return Dataset(X, Y, split_seed, train_fraction)


# ------------------------------------------------------------- key=value files

def parse_kv(text: str) -> dict[str, str]:
    """Parse a flat ``key=value`` file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def coerce(value: str, like):
    """Convert a config string to the type of the default ``like``."""
    if isinstance(like, bool):
        low = value.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    if isinstance(like, (tuple, list)):
        if not value:
            return ()
        parts = [p.strip() for p in value.split(",")]
        kind = type(like[0]) if like else float
        return tuple(kind(p) for p in parts)
    return value


def format_value(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return fmt_float(v)
    if isinstance(v, (tuple, list)):
        return ",".join(format_value(x) for x in v)
    return str(v)


__all__ = [
    "FEATURE_NAMES", "TARGET_NAMES", "TARGET_SHORT", "N_FRAGMENTS",
    "DataError", "RangeError", "DomainError",
    "FeatureVector", "LabelVector", "Sample", "Dataset", "GeometryClass",
    "FragmentSpec", "ModelHyperparams", "validate_sample", "normalize_lon",
    "read_dataset", "write_dataset", "dataset_header", "parse_kv", "coerce",
    "format_value", "fmt_float",
]
