"""Spherical-Earth coordinates and satellite view geometry.

Angles are degrees at every public boundary; lengths are kilometres.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

EARTH_RADIUS_KM = 6371.0


def _normalize_lon(lon: float) -> float:
    lon = math.fmod(lon + 180.0, 360.0)
    if lon < 0.0:
        lon += 360.0
    lon -= 180.0
    return 180.0 if lon == -180.0 else lon


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude on the sphere, zero elevation.

    Longitude is normalized into (-180, 180] on construction.
    """

    lat: float
    lon: float

    def __post_init__(self) -> None:
        lat = float(self.lat)
        lon = float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError(f"non-finite coordinate ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", _normalize_lon(lon))


@dataclass(frozen=True)
class EcefVector:
    x: float
    y: float
    z: float

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)


@dataclass(frozen=True)
class SatellitePose:
    """Satellite sub-point and altitude above the spherical surface (km)."""

    position: GeoPoint
    altitude: float

    def __post_init__(self) -> None:
        if not self.altitude > 0:
            raise ValueError(f"altitude must be positive, got {self.altitude}")

    def ecef(self, radius: float = EARTH_RADIUS_KM) -> EcefVector:
        return geo_to_ecef(self.position, radius + self.altitude)


def geo_to_ecef(p: GeoPoint, radius: float = EARTH_RADIUS_KM) -> EcefVector:
    """Map a geographic point onto the sphere of the given radius."""
    if not radius > 0:
        raise ValueError(f"radius must be positive, got {radius}")
    lat = math.radians(p.lat)
    lon = math.radians(p.lon)
    c = math.cos(lat)
    return EcefVector(radius * c * math.cos(lon), radius * c * math.sin(lon), radius * math.sin(lat))


def ecef_to_geo(v: EcefVector) -> GeoPoint:
    """Project a Cartesian vector back to latitude/longitude.

    The latitude is ``arcsin(z / |v|)``, evaluated as ``atan2(z, hypot(x, y))``
    for accuracy near the poles. Longitude uses the quadrant-correct ``atan2``
    and is 0 by convention when the vector lies on the polar axis.
    """
    horizontal = math.hypot(v.x, v.y)
    if horizontal == 0.0 and v.z == 0.0:
        raise ValueError("cannot project the zero vector")
    lat = math.degrees(math.atan2(v.z, horizontal))
    lon = 0.0 if horizontal == 0.0 else math.degrees(math.atan2(v.y, v.x))
    return GeoPoint(lat, lon)


def great_circle_distance(a: GeoPoint, b: GeoPoint, radius: float = EARTH_RADIUS_KM) -> float:
    """Spherical law of cosines distance in km."""
    pa = math.radians(a.lat)
    pb = math.radians(b.lat)
    dlon = math.radians(a.lon - b.lon)
    cos_angle = math.sin(pa) * math.sin(pb) + math.cos(pa) * math.cos(pb) * math.cos(dlon)
    return radius * math.acos(min(1.0, max(-1.0, cos_angle)))


def _angle_between(u: np.ndarray, v: np.ndarray) -> float:
    # atan2 form of arccos(u.v / |u||v|); stays accurate for tiny angles.
    cross = np.linalg.norm(np.cross(u, v))
    return math.degrees(math.atan2(float(cross), float(np.dot(u, v))))


def view_angle(sat: SatellitePose, a: GeoPoint, b: GeoPoint, radius: float = EARTH_RADIUS_KM) -> float:
    """Angle in degrees between two ground points as seen from the satellite."""
    s = sat.ecef(radius).as_array()
    u = geo_to_ecef(a, radius).as_array() - s
    v = geo_to_ecef(b, radius).as_array() - s
    return _angle_between(u, v)


def slant_range(sat: SatellitePose, u: GeoPoint, radius: float = EARTH_RADIUS_KM) -> float:
    """Line-of-sight distance in km; no horizon masking is applied."""
    s = sat.ecef(radius).as_array()
    return float(np.linalg.norm(geo_to_ecef(u, radius).as_array() - s))


# Vectorized helpers used by the graph builder and the evaluators.

def ecef_array(points: Sequence[GeoPoint], radius: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Stack the ECEF images of ``points`` into a (K, 3) array."""
    lat = np.radians([p.lat for p in points])
    lon = np.radians([p.lon for p in points])
    c = np.cos(lat)
    return radius * np.column_stack([c * np.cos(lon), c * np.sin(lon), np.sin(lat)])


def view_angle_matrix(sat: SatellitePose, points: Sequence[GeoPoint], radius: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Symmetric (K, K) matrix of pairwise view angles in degrees."""
    rel = ecef_array(points, radius) - sat.ecef(radius).as_array()
    cross = np.linalg.norm(np.cross(rel[:, None, :], rel[None, :, :]), axis=2)
    angles = np.degrees(np.arctan2(cross, rel @ rel.T))
    angles = 0.5 * (angles + angles.T)
    np.fill_diagonal(angles, 0.0)
    return angles


def spherical_centroid(points: Sequence[GeoPoint], radius: float = EARTH_RADIUS_KM) -> GeoPoint:
    """Mean of the ECEF images, renormalized to the sphere and reprojected."""
    if not points:
        raise ValueError("centroid of an empty point set")
    mean = ecef_array(points, radius).mean(axis=0)
    return ecef_to_geo(EcefVector(*mean))
