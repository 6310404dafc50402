"""Target figure geometry.

Targets are modeled as planar figures (laminae) perpendicular to the
world z axis: a sphere contributes its equatorial disk, a cuboid its
front face, a sea-animal model its outline polygon.  A lamina at the
target's center depth makes stereo and acoustic observations mutually
consistent: every silhouette point sits at one depth, so five-key-point
stereo depth, perpendicular acoustic echoes and ground truth all agree
exactly in a noise-free run.

Projection into a rectified view is exact for polygon outlines (the
perspective image of a straight edge cannot bulge past its endpoints)
and for disks seen fronto-parallel; tilted disks fall back to a dense
boundary sample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .masks import BoundingBox

_DISK_SAMPLES = 512


@dataclass(frozen=True)
class Figure:
    """Planar figure centered at a target position (world frame).

    kind: "disk" (radius) or "poly" (local 2-D vertices, closed implicitly).
    ``scale`` uniformly scales the figure about its center.
    """

    kind: str
    center: np.ndarray
    radius: float = 0.0
    vertices: np.ndarray | None = None
    scale: float = 1.0
    _rect_half: tuple[float, float] | None = None  # set for axis-aligned rectangles

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))
        if self.kind == "disk":
            if self.radius <= 0:
                raise ValidationError("radius must be positive", field="radius")
        elif self.kind == "poly":
            v = np.asarray(self.vertices, dtype=float)
            if v.ndim != 2 or v.shape[0] < 3 or v.shape[1] != 2:
                raise ValidationError("need >= 3 local 2-D vertices", field="vertices")
            object.__setattr__(self, "vertices", v)
            if self._rect_half is None:
                object.__setattr__(self, "_rect_half", _axis_rect_half(v))
        else:
            raise ValidationError(f"unknown figure kind {self.kind!r}", field="kind")
        if self.scale <= 0:
            raise ValidationError("scale must be positive", field="scale")

    def scaled(self, factor: float) -> "Figure":
        return Figure(self.kind, self.center, self.radius, self.vertices,
                      self.scale * factor)

    def local_points3(self) -> np.ndarray:
        """Outline points in the figure plane, centered at the origin."""
        if self.kind == "poly":
            local = self.vertices * self.scale
        else:
            theta = np.linspace(0.0, 2.0 * math.pi, _DISK_SAMPLES, endpoint=False)
            local = (self.radius * self.scale) * np.stack(
                [np.cos(theta), np.sin(theta)], axis=1
            )
        pts = np.zeros((local.shape[0], 3))
        pts[:, :2] = local
        return pts

    def world_points(self) -> np.ndarray:
        """Outline points in world coordinates (poly: vertices, disk: sampled)."""
        return self.local_points3() + self.center

    def lateral_gap(self, x: float, y: float) -> float:
        """Distance in the figure plane from (x, y) to the figure, 0 inside."""
        dx = x - self.center[0]
        dy = y - self.center[1]
        if self.kind == "disk":
            return max(0.0, math.hypot(dx, dy) - self.radius * self.scale)
        if self._rect_half is not None:
            gx = abs(dx) - self._rect_half[0] * self.scale
            gy = abs(dy) - self._rect_half[1] * self.scale
            if gx <= 0.0 and gy <= 0.0:
                return 0.0
            return math.hypot(max(gx, 0.0), max(gy, 0.0))
        return _point_polygon_gap(dx, dy, self.vertices * self.scale)

    def surface_distance(self, point) -> float:
        """Euclidean distance from a 3-D point to the nearest figure point."""
        gap = self.lateral_gap(float(point[0]), float(point[1]))
        return math.hypot(gap, float(self.center[2]) - float(point[2]))

    def contains_lateral(self, x: float, y: float) -> bool:
        return self.lateral_gap(x, y) == 0.0

    def area(self) -> float:
        if self.kind == "disk":
            return math.pi * (self.radius * self.scale) ** 2
        v = self.vertices * self.scale
        x, y = v[:, 0], v[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _axis_rect_half(v: np.ndarray) -> tuple[float, float] | None:
    """Half extents when the polygon is an origin-centered axis rectangle."""
    if v.shape[0] != 4:
        return None
    xs = sorted(set(float(x) for x in v[:, 0]))
    ys = sorted(set(float(y) for y in v[:, 1]))
    if len(xs) != 2 or len(ys) != 2:
        return None
    if xs[0] != -xs[1] or ys[0] != -ys[1]:
        return None
    corner_set = {(float(x), float(y)) for x, y in v}
    expect = {(x, y) for x in xs for y in ys}
    return (xs[1], ys[1]) if corner_set == expect else None


def _point_polygon_gap(px: float, py: float, verts) -> float:
    """Even-odd point-in-polygon test plus distance to the closest edge."""
    pts = [(float(x), float(y)) for x, y in verts]
    n = len(pts)
    inside = False
    best = math.inf
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            x_cross = x1 + (py - y1) / (y2 - y1) * (x2 - x1)
            if px < x_cross:
                inside = not inside
        ex, ey = x2 - x1, y2 - y1
        L2 = ex * ex + ey * ey
        t = 0.0 if L2 == 0 else max(0.0, min(1.0, ((px - x1) * ex + (py - y1) * ey) / L2))
        dx, dy = px - (x1 + t * ex), py - (y1 + t * ey)
        best = min(best, math.hypot(dx, dy))
    return 0.0 if inside else best


def _point_in_polygon(px: float, py: float, verts) -> bool:
    """Even-odd crossing test without the distance bookkeeping."""
    inside = False
    n = len(verts)
    x1, y1 = verts[-1]
    for i in range(n):
        x2, y2 = verts[i]
        if (y1 > py) != (y2 > py):
            if px < x1 + (py - y1) / (y2 - y1) * (x2 - x1):
                inside = not inside
        x1, y1 = x2, y2
    return inside


@dataclass(frozen=True)
class ViewSilhouette:
    """Exact projection of a figure into one rectified view.

    ``outline_uv`` is the projected boundary (sub-pixel); ``box`` its
    tight axis-aligned bounds.  ``circle`` is set to (uc, vc, r) when the
    projection is an exact pixel-space circle.
    """

    box: BoundingBox
    outline_uv: np.ndarray | None = None
    circle: tuple[float, float, float] | None = None

    def contains(self, u: float, v: float) -> bool:
        box = self.box
        if not (box.u_min <= u <= box.u_max and box.v_min <= v <= box.v_max):
            return False
        if self.circle is not None:
            uc, vc, r = self.circle
            return (u - uc) ** 2 + (v - vc) ** 2 <= r * r
        return _point_in_polygon(u, v, self.outline_uv.tolist())

    def rasterize(self, width: int, height: int) -> np.ndarray:
        """Foreground = pixel centers inside the silhouette."""
        bits = np.zeros((height, width), dtype=bool)
        u0 = max(0, int(math.floor(self.box.u_min)))
        u1 = min(width - 1, int(math.ceil(self.box.u_max)))
        v0 = max(0, int(math.floor(self.box.v_min)))
        v1 = min(height - 1, int(math.ceil(self.box.v_max)))
        if u1 < u0 or v1 < v0:
            return bits
        us = np.arange(u0, u1 + 1, dtype=float)
        vs = np.arange(v0, v1 + 1, dtype=float)
        uu, vv = np.meshgrid(us, vs)
        if self.circle is not None:
            uc, vc, r = self.circle
            window = (uu - uc) ** 2 + (vv - vc) ** 2 <= r * r
        else:
            if self.outline_uv is None:
                raise ValidationError("silhouette without outline", field="outline")
            window = _points_in_polygon(uu, vv, self.outline_uv)
        bits[v0 : v1 + 1, u0 : u1 + 1] = window
        return bits


def _points_in_polygon(uu: np.ndarray, vv: np.ndarray, verts: np.ndarray) -> np.ndarray:
    inside = np.zeros(uu.shape, dtype=bool)
    n = verts.shape[0]
    for i in range(n):
        x1, y1 = verts[i]
        x2, y2 = verts[(i + 1) % n]
        cond = (y1 > vv) != (y2 > vv)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (vv - y1) / (y2 - y1) * (x2 - x1)
        inside ^= cond & (uu < x_cross)
    return inside


def is_fronto_parallel(rot: np.ndarray) -> bool:
    """Does ``rot`` keep world-z laminae parallel to the image plane?"""
    return abs(rot[0, 2]) < 1e-14 and abs(rot[1, 2]) < 1e-14


def project_outline(
    pts_world: np.ndarray,
    rot: np.ndarray,
    cam_offset,
    f: float,
    cx: float,
    cy: float,
) -> ViewSilhouette:
    """Project outline points into one rectified view (exact for polygons).

    ``pts_world`` may be an (n, 3) array or a plain list of [x, y, z]
    triples; callers projecting the same points into both views pass the
    list form to pay the conversion once.
    """
    as_list = isinstance(pts_world, list)
    n = len(pts_world) if as_list else pts_world.shape[0]
    if n <= 16:
        # plain floats beat numpy dispatch for the small polygons that
        # dominate simulation scenes
        r00, r01, r02 = rot[0]
        r10, r11, r12 = rot[1]
        r20, r21, r22 = rot[2]
        ox, oy, oz = float(cam_offset[0]), float(cam_offset[1]), float(cam_offset[2])
        u_min = v_min = math.inf
        u_max = v_max = -math.inf
        outline = []
        for wx, wy, wz in (pts_world if as_list else pts_world.tolist()):
            dx, dy, dz = wx - ox, wy - oy, wz - oz
            z = r20 * dx + r21 * dy + r22 * dz
            if z <= 0:
                raise ValidationError("figure behind camera", field="figure")
            u = f * (r00 * dx + r01 * dy + r02 * dz) / z + cx
            v = f * (r10 * dx + r11 * dy + r12 * dz) / z + cy
            outline.append((u, v))
            u_min = min(u_min, u); u_max = max(u_max, u)
            v_min = min(v_min, v); v_max = max(v_max, v)
        return ViewSilhouette(BoundingBox(u_min, v_min, u_max, v_max), np.asarray(outline))
    pts = (np.asarray(pts_world, dtype=float) - np.asarray(cam_offset, dtype=float)) @ rot.T
    z = pts[:, 2]
    if np.any(z <= 0):
        raise ValidationError("figure behind camera", field="figure")
    us = f * pts[:, 0] / z + cx
    vs = f * pts[:, 1] / z + cy
    box = BoundingBox(float(us.min()), float(vs.min()), float(us.max()), float(vs.max()))
    return ViewSilhouette(box, np.stack([us, vs], axis=1))


def project_disk_fronto(
    center,
    radius: float,
    rot: np.ndarray,
    cam_offset,
    f: float,
    cx: float,
    cy: float,
) -> ViewSilhouette:
    """Exact circular projection of a fronto-parallel disk."""
    d = np.asarray(center, dtype=float) - np.asarray(cam_offset, dtype=float)
    xv = float(rot[0] @ d)
    yv = float(rot[1] @ d)
    z = float(rot[2] @ d)
    if z <= 0:
        raise ValidationError("figure behind camera", field="figure")
    uc = f * xv / z + cx
    vc = f * yv / z + cy
    r_px = f * radius / z
    box = BoundingBox(uc - r_px, vc - r_px, uc + r_px, vc + r_px)
    return ViewSilhouette(box, None, circle=(uc, vc, r_px))


def project_figure(
    figure: Figure,
    rot: np.ndarray,
    cam_offset,
    fx: float,
    fy: float,
    cx: float,
    cy: float,
) -> ViewSilhouette:
    """Project a lamina into one rectified view.

    ``rot`` rotates world coordinates into the view frame; ``cam_offset``
    is the view camera center in world coordinates.  When the lamina is
    fronto-parallel in the view frame, a disk projects to an exact
    circle (rectified views have fx == fy) and a polygon to an exact
    polygon with a corner-exact box; tilted disks fall back to the
    sampled outline.
    """
    if figure.kind == "disk" and is_fronto_parallel(rot):
        return project_disk_fronto(
            figure.center, figure.radius * figure.scale, rot, cam_offset, fx, cx, cy
        )
    return project_outline(figure.world_points(), rot, cam_offset, fx, cx, cy)


def figure_for_shape(shape: dict, center) -> Figure:
    """Build the lamina for a scene target shape description."""
    kind = shape.get("type")
    if kind == "sphere":
        return Figure("disk", center, radius=float(shape["radius"]))
    if kind == "cuboid":
        w, h = float(shape["w"]), float(shape["h"])
        if w <= 0 or h <= 0:
            raise ValidationError("cuboid w/h must be positive", field="shape")
        verts = np.array(
            [[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]]
        )
        return Figure("poly", center, vertices=verts)
    if kind == "polygon":
        return Figure("poly", center, vertices=np.asarray(shape["vertices"], dtype=float))
    raise ValidationError(f"unknown shape type {kind!r}", field="shape.type")
