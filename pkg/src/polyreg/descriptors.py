"""Per-vertex shape features: convexity sign and interior angle.

Sign convention (fixed once, used identically for both streams): polygons are
traversed clockwise as displayed (x right, y down), and a vertex is convex
iff the z component of the cross product of its incoming and outgoing edge
vectors is strictly positive. Collinear vertices (z == 0) count as concave;
they carry no shape information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .core import Point2

if TYPE_CHECKING:  # pragma: no cover
    from .contours import PolygonShape


@dataclass(frozen=True)
class VertexDescriptor:
    """Feature descriptor of one polygon vertex."""

    position: Point2
    convex: bool
    theta: float  # interior angle, degrees
    polygon_id: int
    vertex_index: int


def _cross_z(p1, p2, p3) -> float:
    return (p2[0] - p1[0]) * (p3[1] - p2[1]) - (p2[1] - p1[1]) * (p3[0] - p2[0])


def convexity_z(p1: Point2, p2: Point2, p3: Point2) -> float:
    """z component of the cross product of edge vectors p1->p2 and p2->p3.

    The points are treated as (x, y, 0); only the z coordinate of the cross
    product survives.
    """
    if tuple(p1) == tuple(p2) or tuple(p2) == tuple(p3) or tuple(p1) == tuple(p3):
        raise ValueError("convexity requires three pairwise distinct points")
    return _cross_z(p1, p2, p3)


def is_convex(p1: Point2, p2: Point2, p3: Point2) -> bool:
    """True iff the turn at p2 is convex for a clockwise (y-down) traversal."""
    return convexity_z(p1, p2, p3) > 0.0


def interior_angle(p1: Point2, p2: Point2, p3: Point2) -> float:
    """Angle at p2 between the arms towards p1 and p3, in degrees.

    Computed by the law of cosines; the arccos argument is clamped to
    [-1, 1] so collinear configurations return exactly 0 or 180 degrees.
    """
    a2 = (p1[0] - p2[0]) ** 2 + (p1[1] - p2[1]) ** 2
    b2 = (p3[0] - p2[0]) ** 2 + (p3[1] - p2[1]) ** 2
    if a2 == 0.0 or b2 == 0.0:
        raise ValueError("interior angle requires non-zero arm lengths")
    c2 = (p3[0] - p1[0]) ** 2 + (p3[1] - p1[1]) ** 2
    cos_t = (a2 + b2 - c2) / (2.0 * math.sqrt(a2) * math.sqrt(b2))
    cos_t = max(-1.0, min(1.0, cos_t))
    return math.degrees(math.acos(cos_t))


def describe_polygon(poly: "PolygonShape", polygon_id: int | None = None) -> list[VertexDescriptor]:
    """One descriptor per vertex, using the cyclic predecessor and successor.

    Degenerate local configurations (collinear or folded-back) are marked
    concave rather than rejected, so they are simply never matched.
    """
    verts = poly.vertices
    n = len(verts)
    pid = poly.source_blob_id if polygon_id is None else polygon_id
    out: list[VertexDescriptor] = []
    for i in range(n):
        p1 = verts[(i - 1) % n]
        p2 = verts[i]
        p3 = verts[(i + 1) % n]
        z = _cross_z(p1, p2, p3)
        theta = interior_angle(p1, p2, p3)
        out.append(
            VertexDescriptor(
                position=Point2(float(p2[0]), float(p2[1])),
                convex=z > 0.0,
                theta=theta,
                polygon_id=pid,
                vertex_index=i,
            )
        )
    return out
