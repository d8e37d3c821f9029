"""Conforming triangulations of axis-aligned rectangles with oriented face topology.

Meshes are plain struct-of-array containers: vertex coordinates, triangle
connectivity (counterclockwise), subdomain ids, and a full face table with a
fixed minus/plus side per face.  All arrays are read-only after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BOUNDARY = -1  # K_plus sentinel for boundary faces


class AlignmentError(ValueError):
    """Subdomain layout boundaries do not lie on grid lines."""


@dataclass(frozen=True)
class Rect:
    x0: float
    y0: float
    x1: float
    y1: float

    @property
    def width(self):
        return self.x1 - self.x0

    @property
    def height(self):
        return self.y1 - self.y0

    @property
    def area(self):
        return self.width * self.height

    def contains(self, x, y, tol=0.0):
        return (
            (x >= self.x0 - tol) & (x <= self.x1 + tol)
            & (y >= self.y0 - tol) & (y <= self.y1 + tol)
        )


UNIT_SQUARE = Rect(0.0, 0.0, 1.0, 1.0)


@dataclass(frozen=True)
class Layout:
    """Partition of a rectangle into axis-aligned boxes, one subdomain id each."""

    domain: Rect
    boxes: tuple          # ((Rect, subdomain_id), ...) disjoint, covering domain
    n_subdomains: int

    def subdomain_at(self, x, y):
        """Subdomain id at the given points (vectorized; boxes win in order)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.full(np.broadcast(x, y).shape, -1, dtype=np.int64)
        for rect, sid in self.boxes:
            mask = (out == -1) & rect.contains(x, y)
            out[mask] = sid
        if np.any(out == -1):
            raise ValueError("point outside every layout box")
        return out

    def grid_coordinates(self):
        """Distinct box-edge coordinates along each axis (excluding domain edges)."""
        xs, ys = set(), set()
        for rect, _ in self.boxes:
            xs.update((rect.x0, rect.x1))
            ys.update((rect.y0, rect.y1))
        xs -= {self.domain.x0, self.domain.x1}
        ys -= {self.domain.y0, self.domain.y1}
        return sorted(xs), sorted(ys)

    def check_aligned(self, n):
        """Raise AlignmentError unless all box edges sit on n-by-n grid lines."""
        hx = self.domain.width / n
        hy = self.domain.height / n
        xs, ys = self.grid_coordinates()
        for c in xs:
            k = (c - self.domain.x0) / hx
            if abs(k - round(k)) > 1e-12 * n:
                raise AlignmentError(f"layout edge x={c} not on grid for n={n}")
        for c in ys:
            k = (c - self.domain.y0) / hy
            if abs(k - round(k)) > 1e-12 * n:
                raise AlignmentError(f"layout edge y={c} not on grid for n={n}")

    def interior_cross_points(self):
        """Interior points where four boxes meet (candidates for QMA violation)."""
        xs, ys = self.grid_coordinates()
        return [(x, y) for x in xs for y in ys]

    def interface_segments(self):
        """Shared edges between boxes with distinct subdomains, as (p0, p1) pairs."""
        segs = []
        eps = 1e-9 * max(self.domain.width, self.domain.height)
        for rect, sid in self.boxes:
            for other, oid in self.boxes:
                if oid == sid:
                    continue
                # right edge of `rect` touching left edge of `other`
                if abs(rect.x1 - other.x0) < eps:
                    lo = max(rect.y0, other.y0)
                    hi = min(rect.y1, other.y1)
                    if hi - lo > eps:
                        segs.append(((rect.x1, lo), (rect.x1, hi)))
                if abs(rect.y1 - other.y0) < eps:
                    lo = max(rect.x0, other.x0)
                    hi = min(rect.x1, other.x1)
                    if hi - lo > eps:
                        segs.append(((lo, rect.y1), (hi, rect.y1)))
        return segs


def layout_single(domain=UNIT_SQUARE):
    return Layout(domain, ((domain, 0),), 1)


def layout_stripes(domain=UNIT_SQUARE, split=0.5):
    """Two vertical subdomains separated at x = x0 + split * width."""
    xm = domain.x0 + split * domain.width
    boxes = (
        (Rect(domain.x0, domain.y0, xm, domain.y1), 0),
        (Rect(xm, domain.y0, domain.x1, domain.y1), 1),
    )
    return Layout(domain, boxes, 2)


def layout_checkerboard(domain=UNIT_SQUARE, nx=2, ny=2):
    """nx-by-ny grid of boxes, one subdomain per box, numbered row-major."""
    hx = domain.width / nx
    hy = domain.height / ny
    boxes = []
    for j in range(ny):
        for i in range(nx):
            r = Rect(domain.x0 + i * hx, domain.y0 + j * hy,
                     domain.x0 + (i + 1) * hx, domain.y0 + (j + 1) * hy)
            boxes.append((r, j * nx + i))
    return Layout(domain, tuple(boxes), nx * ny)


def checkerboard_values(nx, ny, low, high):
    """Alternating per-subdomain values for layout_checkerboard numbering."""
    vals = np.empty(nx * ny)
    for j in range(ny):
        for i in range(nx):
            vals[j * nx + i] = high if (i + j) % 2 == 0 else low
    return vals


NAMED_LAYOUTS = {
    "single": lambda domain: layout_single(domain),
    "stripes": lambda domain: layout_stripes(domain),
    "checkerboard4": lambda domain: layout_checkerboard(domain, 2, 2),
    "checkerboard8": lambda domain: layout_checkerboard(domain, 4, 2),
}


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray      # (n_v, 2) float
    triangles: np.ndarray     # (n_t, 3) int, counterclockwise
    subdomain: np.ndarray     # (n_t,) int
    subdomain_count: int
    faces: np.ndarray         # (n_f, 2) int, sorted vertex pairs, lexicographic order
    face_kminus: np.ndarray   # (n_f,) int
    face_kplus: np.ndarray    # (n_f,) int, BOUNDARY for boundary faces
    face_normal: np.ndarray   # (n_f, 2) unit, outward from K_minus
    face_h: np.ndarray        # (n_f,) face length
    tri_faces: np.ndarray     # (n_t, 3) face id opposite local vertex i
    tri_h: np.ndarray         # (n_t,) longest edge
    tri_area: np.ndarray      # (n_t,)
    # (Rect, n, cell_tri) for meshes tiling a regular n-by-n criss-cross grid;
    # cell_tri[2*(iy*n+ix)+s] is the triangle covering cell (ix,iy), s=0 below
    # the diagonal, s=1 above.
    structured: tuple | None = None

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def h_max(self):
        return float(self.tri_h.max())

    def interior_faces(self):
        return np.flatnonzero(self.face_kplus != BOUNDARY)

    def boundary_faces(self):
        return np.flatnonzero(self.face_kplus == BOUNDARY)

    def boundary_vertices(self):
        return np.unique(self.faces[self.boundary_faces()])

    def centroids(self):
        return self.vertices[self.triangles].mean(axis=1)

    def face_midpoints(self):
        return self.vertices[self.faces].mean(axis=1)

    def locate(self, x, y):
        """Map physical points to (triangle id, barycentric coords).

        Requires structured metadata; points must lie inside the domain.
        """
        if self.structured is None:
            raise ValueError("point location requires a structured mesh")
        rect, n, cell_tri = self.structured
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        u = (x - rect.x0) / rect.width * n
        v = (y - rect.y0) / rect.height * n
        ix = np.clip(np.floor(u).astype(np.int64), 0, n - 1)
        iy = np.clip(np.floor(v).astype(np.int64), 0, n - 1)
        fu = u - ix
        fv = v - iy
        lower = fv <= fu  # below the cell diagonal
        tri = cell_tri[2 * (iy * n + ix) + np.where(lower, 0, 1)]
        pts = self.vertices[self.triangles[tri]]   # (..., 3, 2)
        b = _barycentric(pts, np.stack([x, y], axis=-1))
        return tri, b


def _barycentric(tri_pts, p):
    """Barycentric coordinates of points p w.r.t. triangles (..., 3, 2)."""
    a, b, c = tri_pts[..., 0, :], tri_pts[..., 1, :], tri_pts[..., 2, :]
    det = (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) \
        - (c[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1])
    l1 = ((p[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
          - (c[..., 0] - a[..., 0]) * (p[..., 1] - a[..., 1])) / det
    l2 = ((b[..., 0] - a[..., 0]) * (p[..., 1] - a[..., 1])
          - (p[..., 0] - a[..., 0]) * (b[..., 1] - a[..., 1])) / det
    return np.stack([1.0 - l1 - l2, l1, l2], axis=-1)


def _freeze(mesh):
    for arr in (mesh.vertices, mesh.triangles, mesh.subdomain, mesh.faces,
                mesh.face_kminus, mesh.face_kplus, mesh.face_normal,
                mesh.face_h, mesh.tri_faces, mesh.tri_h, mesh.tri_area):
        arr.setflags(write=False)
    return mesh


def _build_topology(vertices, triangles, subdomain, subdomain_count, structured):
    """Derive the face table and per-triangle geometry from connectivity."""
    triangles = np.ascontiguousarray(triangles, dtype=np.int64)
    n_t = len(triangles)

    # edge i is opposite local vertex i
    e0 = triangles[:, [1, 2]]
    e1 = triangles[:, [2, 0]]
    e2 = triangles[:, [0, 1]]
    edges = np.sort(np.concatenate([e0, e1, e2]), axis=1)
    faces, inv, counts = np.unique(edges, axis=0, return_inverse=True,
                                   return_counts=True)
    if counts.max() > 2:
        raise ValueError("non-conforming connectivity: face shared by >2 triangles")
    tri_faces = inv.reshape(3, n_t).T.copy()

    owner = np.stack([np.arange(n_t)] * 3).ravel()  # triangle of each edge slot
    order = np.argsort(inv, kind="stable")
    inv_sorted = inv[order]
    starts = np.searchsorted(inv_sorted, np.arange(len(faces)))
    first = owner[order[starts]]
    second = np.full(len(faces), BOUNDARY, dtype=np.int64)
    two = counts == 2
    second[two] = owner[order[starts[two] + 1]]
    # K_minus is the smaller triangle id
    kminus = np.where(two & (second < first), second, first)
    kplus = np.where(two, np.where(second < first, first, second),
                     BOUNDARY).astype(np.int64)

    pts = vertices[triangles]
    d01 = pts[:, 1] - pts[:, 0]
    d02 = pts[:, 2] - pts[:, 0]
    signed = 0.5 * (d01[:, 0] * d02[:, 1] - d01[:, 1] * d02[:, 0])
    if np.any(signed <= 0):
        raise ValueError("triangle with non-positive signed area (not ccw)")
    edge_len = np.stack([
        np.linalg.norm(pts[:, 2] - pts[:, 1], axis=1),
        np.linalg.norm(pts[:, 0] - pts[:, 2], axis=1),
        np.linalg.norm(pts[:, 1] - pts[:, 0], axis=1),
    ], axis=1)
    tri_h = edge_len.max(axis=1)

    tang = vertices[faces[:, 1]] - vertices[faces[:, 0]]
    face_h = np.linalg.norm(tang, axis=1)
    normal = np.stack([tang[:, 1], -tang[:, 0]], axis=1) / face_h[:, None]
    mid = vertices[faces].mean(axis=1)
    cent_minus = vertices[triangles[kminus]].mean(axis=1)
    flip = np.einsum("ij,ij->i", normal, mid - cent_minus) < 0
    normal[flip] *= -1.0

    return _freeze(Mesh(
        vertices=np.ascontiguousarray(vertices, dtype=float),
        triangles=triangles,
        subdomain=np.ascontiguousarray(subdomain, dtype=np.int64),
        subdomain_count=int(subdomain_count),
        faces=faces,
        face_kminus=kminus.astype(np.int64),
        face_kplus=kplus,
        face_normal=normal,
        face_h=face_h,
        tri_faces=tri_faces,
        tri_h=tri_h,
        tri_area=signed,
        structured=structured,
    ))


def build_structured_square(n, layout=None, domain=UNIT_SQUARE):
    """Criss-cross triangulation of a rectangle: n-by-n cells, 2 triangles each.

    Every cell is split along its lower-left to upper-right diagonal, which
    keeps the family nested under uniform refinement.  Subdomain ids come from
    the layout, whose box edges must sit on grid lines.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if layout is None:
        layout = layout_single(domain)
    if layout.domain != domain:
        raise ValueError("layout domain does not match mesh domain")
    layout.check_aligned(n)

    xs = np.linspace(domain.x0, domain.x1, n + 1)
    ys = np.linspace(domain.y0, domain.y1, n + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])

    vid = np.arange((n + 1) * (n + 1)).reshape(n + 1, n + 1)  # [row=j, col=i]
    a = vid[:-1, :-1].ravel()
    b = vid[:-1, 1:].ravel()
    c = vid[1:, 1:].ravel()
    d = vid[1:, :-1].ravel()
    lower = np.column_stack([a, b, c])
    upper = np.column_stack([a, c, d])
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = lower
    triangles[1::2] = upper

    cent = vertices[triangles].mean(axis=1)
    subdomain = layout.subdomain_at(cent[:, 0], cent[:, 1])
    cell_tri = np.arange(2 * n * n, dtype=np.int64)
    return _build_topology(vertices, triangles, subdomain,
                           layout.n_subdomains, (domain, n, cell_tri))


def refine_uniform(mesh):
    """Split every triangle into 4 congruent children via edge midpoints."""
    n_v = mesh.n_vertices
    mid = mesh.face_midpoints()
    vertices = np.vstack([mesh.vertices, mid])

    t = mesh.triangles
    m = mesh.tri_faces + n_v  # midpoint vertex of edge opposite local vertex i
    children = np.empty((4 * mesh.n_triangles, 3), dtype=np.int64)
    children[0::4] = np.column_stack([t[:, 0], m[:, 2], m[:, 1]])
    children[1::4] = np.column_stack([m[:, 2], t[:, 1], m[:, 0]])
    children[2::4] = np.column_stack([m[:, 1], m[:, 0], t[:, 2]])
    children[3::4] = np.column_stack([m[:, 2], m[:, 0], m[:, 1]])
    subdomain = np.repeat(mesh.subdomain, 4)

    structured = None
    if mesh.structured is not None:
        # children of a criss-cross grid tile the doubled grid exactly; index
        # them by cell via their centroids
        rect, n, _ = mesh.structured
        n2 = 2 * n
        cent = vertices[children].mean(axis=1)
        u = (cent[:, 0] - rect.x0) / rect.width * n2
        v = (cent[:, 1] - rect.y0) / rect.height * n2
        ix = np.floor(u).astype(np.int64)
        iy = np.floor(v).astype(np.int64)
        lower = (v - iy) <= (u - ix)
        cell_tri = np.empty(2 * n2 * n2, dtype=np.int64)
        cell_tri[2 * (iy * n2 + ix) + np.where(lower, 0, 1)] = \
            np.arange(len(children))
        structured = (rect, n2, cell_tri)
    return _build_topology(vertices, children, subdomain,
                           mesh.subdomain_count, structured)


def face_patch(mesh, k):
    """Triangle k plus all triangles sharing a face with it."""
    ids = {int(k)}
    for f in mesh.tri_faces[k]:
        for t in (mesh.face_kminus[f], mesh.face_kplus[f]):
            if t != BOUNDARY:
                ids.add(int(t))
    return ids


def write_mesh(mesh, stream):
    """Plain-text dump: `v x y`, `t v0 v1 v2 subdomain`, `f v0 v1 kminus kplus`."""
    close = False
    if isinstance(stream, str):
        stream = open(stream, "w")
        close = True
    try:
        for x, y in mesh.vertices:
            stream.write(f"v {float(x)!r} {float(y)!r}\n")
        for tri, s in zip(mesh.triangles, mesh.subdomain):
            stream.write(f"t {tri[0]} {tri[1]} {tri[2]} {s}\n")
        for face, km, kp in zip(mesh.faces, mesh.face_kminus, mesh.face_kplus):
            stream.write(f"f {face[0]} {face[1]} {km} {kp}\n")
    finally:
        if close:
            stream.close()


def read_mesh(stream):
    """Parse the write_mesh format back into a Mesh (topology rebuilt)."""
    close = False
    if isinstance(stream, str):
        stream = open(stream)
        close = True
    verts, tris, subs = [], [], []
    try:
        for line in stream:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "t":
                tris.append((int(parts[1]), int(parts[2]), int(parts[3])))
                subs.append(int(parts[4]))
    finally:
        if close:
            stream.close()
    verts = np.array(verts)
    tris = np.array(tris, dtype=np.int64)
    subs = np.array(subs, dtype=np.int64)
    count = int(subs.max()) + 1 if len(subs) else 1
    return _build_topology(verts, tris, subs, count, None)


def min_angle(mesh):
    """Smallest interior angle over all triangles (radians)."""
    pts = mesh.vertices[mesh.triangles]
    angles = []
    for i in range(3):
        u = pts[:, (i + 1) % 3] - pts[:, i]
        v = pts[:, (i + 2) % 3] - pts[:, i]
        cosang = np.einsum("ij,ij->i", u, v) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
        angles.append(np.arccos(np.clip(cosang, -1, 1)))
    return float(np.min(angles))
