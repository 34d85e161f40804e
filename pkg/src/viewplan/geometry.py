"""Hemispherical view geometry: poses, view spaces, and candidate grids.

Conventions used throughout:

- The view space is the spherical cap z >= 0 around a table-top center,
  with every camera at distance ``radius`` from the center and oriented
  to look at it.
- Camera frame: local +z is the viewing direction (forward), local +y is
  up, local +x is right.  The up vector is world +z projected orthogonal
  to forward; at the zenith, where that projection vanishes, up is world
  +x by convention.
- Quaternions are stored as (w, x, y, z) with unit norm and a canonical
  sign (first nonzero component positive) so equal rotations serialize
  identically.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidArgumentError
from . import jsonio

GOLDEN_ANGLE = np.pi * (3.0 - np.sqrt(5.0))

KIND_TAMMES = "tammes"
KIND_UNIFORM_GRID = "uniform_grid"
KIND_CUSTOM = "custom"
VIEW_SPACE_KINDS = (KIND_TAMMES, KIND_UNIFORM_GRID, KIND_CUSTOM)

#: Unit directions of the named views on the hemisphere.  Front faces +x,
#: left is +y (right-handed frame viewed from the front), top is the zenith.
NAMED_VIEW_DIRECTIONS = {
    "top": np.array([0.0, 0.0, 1.0]),
    "left": np.array([0.0, 1.0, 0.0]),
    "right": np.array([0.0, -1.0, 0.0]),
    "front": np.array([1.0, 0.0, 0.0]),
    "back": np.array([-1.0, 0.0, 0.0]),
}

DEFAULT_INITIAL_VIEWS = ("left", "front", "top")


def central_angle(u: np.ndarray, v: np.ndarray) -> float:
    """Angle in radians between two direction vectors."""
    un = np.asarray(u, dtype=float)
    vn = np.asarray(v, dtype=float)
    un = un / np.linalg.norm(un)
    vn = vn / np.linalg.norm(vn)
    return float(np.arccos(np.clip(np.dot(un, vn), -1.0, 1.0)))


def pairwise_angles(units: np.ndarray) -> np.ndarray:
    """Condensed upper-triangle central angles of an (n, 3) unit-vector array."""
    dots = np.clip(units @ units.T, -1.0, 1.0)
    iu = np.triu_indices(len(units), k=1)
    return np.arccos(dots[iu])


def rotation_to_quaternion(rot: np.ndarray) -> np.ndarray:
    """Convert a 3x3 rotation matrix to a canonical unit quaternion (w, x, y, z)."""
    m = np.asarray(rot, dtype=float)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array([
            0.25 * s,
            (m[2, 1] - m[1, 2]) / s,
            (m[0, 2] - m[2, 0]) / s,
            (m[1, 0] - m[0, 1]) / s,
        ])
    else:
        i = int(np.argmax(np.diag(m)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(max(m[i, i] - m[j, j] - m[k, k] + 1.0, 0.0)) * 2.0
        q = np.empty(4)
        q[0] = (m[k, j] - m[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (m[j, i] + m[i, j]) / s
        q[1 + k] = (m[k, i] + m[i, k]) / s
    q = q / np.linalg.norm(q)
    for comp in q:
        if comp != 0.0:
            if comp < 0.0:
                q = -q
            break
    return q


def quaternion_to_rotation(q: np.ndarray) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


@dataclass(frozen=True, eq=False)
class ViewPose:
    """A camera position with a look-at orientation.

    ``quaternion`` rotates camera-local axes into world axes; the camera's
    forward axis (local +z) points at the view-space center.
    """

    position: np.ndarray
    quaternion: np.ndarray

    def forward(self) -> np.ndarray:
        return quaternion_to_rotation(self.quaternion)[:, 2]

    def up(self) -> np.ndarray:
        return quaternion_to_rotation(self.quaternion)[:, 1]

    def to_dict(self) -> dict:
        return {
            "position": [float(c) for c in self.position],
            "quaternion": [float(c) for c in self.quaternion],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViewPose":
        try:
            pos = np.asarray(d["position"], dtype=float)
            quat = np.asarray(d["quaternion"], dtype=float)
        except (KeyError, TypeError) as exc:
            raise FormatError(f"pose entry missing field: {exc}") from exc
        if pos.shape != (3,) or quat.shape != (4,):
            raise FormatError("pose entry has wrong position/quaternion shape")
        return cls(position=pos, quaternion=quat)


def look_at_pose(position, center) -> ViewPose:
    """Pose at ``position`` looking toward ``center``.

    Up is world +z projected orthogonal to the viewing direction; at the
    zenith (viewing straight down) up falls back to world +x.
    """
    position = np.asarray(position, dtype=float)
    center = np.asarray(center, dtype=float)
    offset = center - position
    dist = np.linalg.norm(offset)
    if dist == 0.0:
        raise InvalidArgumentError("look-at position coincides with center")
    fwd = offset / dist
    up = np.array([0.0, 0.0, 1.0])
    up = up - np.dot(up, fwd) * fwd
    nup = np.linalg.norm(up)
    if nup < 1e-9:
        up = np.array([1.0, 0.0, 0.0])
        up = up - np.dot(up, fwd) * fwd
        nup = np.linalg.norm(up)
    up = up / nup
    right = np.cross(up, fwd)
    rot = np.column_stack([right, up, fwd])
    return ViewPose(position=position, quaternion=rotation_to_quaternion(rot))


@dataclass(eq=False)
class ViewSpace:
    """An ordered set of poses on one hemispherical cap."""

    center: np.ndarray
    radius: float
    poses: list = field(default_factory=list)
    kind: str = KIND_CUSTOM

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=float)
        self.radius = float(self.radius)

    def __len__(self):
        return len(self.poses)

    def positions(self) -> np.ndarray:
        return np.array([p.position for p in self.poses]).reshape(len(self.poses), 3)

    def unit_directions(self) -> np.ndarray:
        rel = self.positions() - self.center
        norms = np.linalg.norm(rel, axis=1, keepdims=True)
        return rel / norms

    def validate(self, rtol=1e-9) -> None:
        if self.radius <= 0:
            raise InvalidArgumentError("view-space radius must be positive")
        if self.kind not in VIEW_SPACE_KINDS:
            raise InvalidArgumentError(f"unknown view-space kind: {self.kind!r}")
        if not self.poses:
            return
        rel = self.positions() - self.center
        dists = np.linalg.norm(rel, axis=1)
        if not np.allclose(dists, self.radius, rtol=rtol, atol=0.0):
            raise InvalidArgumentError("pose off the view sphere")
        # Allow float noise at the equator but nothing genuinely below it.
        if np.any(rel[:, 2] < -rtol * self.radius):
            raise InvalidArgumentError("pose below the hemisphere equator")
        if len(self.poses) >= 2 and min_pairwise_angle(self) <= 0.0:
            raise InvalidArgumentError("coincident poses in view space")

    def to_dict(self) -> dict:
        return {
            "center": [float(c) for c in self.center],
            "radius": float(self.radius),
            "kind": self.kind,
            "poses": [p.to_dict() for p in self.poses],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ViewSpace":
        for key in ("center", "radius", "kind", "poses"):
            if key not in d:
                raise FormatError(f"view-space object missing {key!r}")
        center = np.asarray(d["center"], dtype=float)
        if center.shape != (3,):
            raise FormatError("view-space center must be a 3-vector")
        poses = [ViewPose.from_dict(p) for p in d["poses"]]
        vs = cls(center=center, radius=float(d["radius"]), poses=poses, kind=str(d["kind"]))
        vs.validate()
        return vs


def save_view_space(vs: ViewSpace, path) -> None:
    jsonio.dump_file(vs.to_dict(), path)


def load_view_space(path) -> ViewSpace:
    data = jsonio.load_file(path)
    if not isinstance(data, dict):
        raise FormatError(f"{path}: expected a view-space object")
    return ViewSpace.from_dict(data)


def min_pairwise_angle(vs: ViewSpace) -> float:
    """Smallest central angle over all pose pairs, in radians."""
    if len(vs.poses) < 2:
        raise InvalidArgumentError("min pairwise angle needs at least two poses")
    return float(pairwise_angles(vs.unit_directions()).min())


def units_to_view_space(units, radius, center, kind) -> ViewSpace:
    center = np.asarray(center, dtype=float)
    poses = [look_at_pose(center + radius * u, center) for u in np.asarray(units, dtype=float)]
    return ViewSpace(center=center, radius=radius, poses=poses, kind=kind)


def candidate_grid(n: int, radius: float = 0.3, center=(0.0, 0.0, 0.0)) -> ViewSpace:
    """Quasi-uniform hemisphere covering of ``n`` views (golden-angle spiral).

    Used as the dense candidate pool that baseline planners select from.
    Deterministic; n=1 degenerates to the zenith view.
    """
    if n < 1:
        raise InvalidArgumentError("candidate grid needs n >= 1")
    if radius <= 0:
        raise InvalidArgumentError("candidate grid needs radius > 0")
    if n == 1:
        units = np.array([[0.0, 0.0, 1.0]])
    else:
        i = np.arange(n)
        z = 1.0 - (i + 0.5) / n
        rho = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = i * GOLDEN_ANGLE
        units = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    return units_to_view_space(units, radius, center, KIND_UNIFORM_GRID)


def initial_views(center, radius: float, selection=DEFAULT_INITIAL_VIEWS) -> list:
    """Named bootstrap poses, ordered so the robot ends at the top view.

    ``selection`` draws from top/left/right/front/back; relative order of the
    non-top names is preserved and ``top``, when present, is moved last.
    """
    names = [str(s).lower() for s in selection]
    if not names:
        raise InvalidArgumentError("initial view selection is empty")
    if len(set(names)) != len(names):
        raise InvalidArgumentError(f"duplicate initial view names: {names}")
    unknown = [n for n in names if n not in NAMED_VIEW_DIRECTIONS]
    if unknown:
        raise InvalidArgumentError(f"unknown initial view names: {unknown}")
    if "top" in names:
        names = [n for n in names if n != "top"] + ["top"]
    center = np.asarray(center, dtype=float)
    return [look_at_pose(center + radius * NAMED_VIEW_DIRECTIONS[n], center) for n in names]


def top_view(center, radius: float) -> ViewPose:
    """The zenith pose, where the robot parks before executing a plan."""
    center = np.asarray(center, dtype=float)
    return look_at_pose(center + radius * NAMED_VIEW_DIRECTIONS["top"], center)
