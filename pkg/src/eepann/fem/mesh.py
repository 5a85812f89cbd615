"""Hexahedral meshes: structured box generator and line-oriented text I/O.

The mesh file format ("eemesh-v1") is plain UTF-8 text: an order line,
a nodes section (id x y z), an elements section (id + connectivity), and
optional named node sets and face sets. Face sets list (element id, local
face id) pairs; local faces follow elements.FACE_AXES.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ParseError
from .elements import element_for_order

__all__ = ["Mesh", "box_mesh", "write_mesh", "read_mesh"]


@dataclass
class Mesh:
    nodes: np.ndarray  # (n_nodes, 3) reference coordinates
    elements: np.ndarray  # (n_elements, nodes_per_element) connectivity
    order: int
    node_sets: dict = field(default_factory=dict)
    face_sets: dict = field(default_factory=dict)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_elements(self):
        return self.elements.shape[0]

    def check_jacobians(self):
        """Positive Jacobian determinant at every quadrature point."""
        el = element_for_order(self.order)
        for conn in self.elements:
            X = self.nodes[conn]
            for xi in el.quad_points:
                Jm = el.shape_grad(xi).T @ X
                if np.linalg.det(Jm) <= 0.0:
                    return False
        return True


def box_mesh(nx, ny, nz, lx=1.0, ly=1.0, lz=1.0, order=2):
    """Structured box of nx*ny*nz hexahedra with canonical side sets.

    Node sets: xmin, xmax, ymin, ymax, zmin, zmax (all nodes on a side) and
    'origin' (the corner node at 0,0,0). Face sets with the same side names
    hold the boundary faces of the elements on that side.
    """
    k = order  # nodes per element edge minus one
    npx, npy, npz = k * nx + 1, k * ny + 1, k * nz + 1
    xs = np.linspace(0.0, lx, npx)
    ys = np.linspace(0.0, ly, npy)
    zs = np.linspace(0.0, lz, npz)

    def nid(i, j, m):
        return i + npx * (j + npy * m)

    nodes = np.empty((npx * npy * npz, 3))
    for m in range(npz):
        for j in range(npy):
            for i in range(npx):
                nodes[nid(i, j, m)] = (xs[i], ys[j], zs[m])

    elements = []
    for em in range(nz):
        for ej in range(ny):
            for ei in range(nx):
                conn = []
                for dm in range(k + 1):
                    for dj in range(k + 1):
                        for di in range(k + 1):
                            conn.append(nid(k * ei + di, k * ej + dj, k * em + dm))
                elements.append(conn)
    elements = np.array(elements, dtype=int)

    tol = 1e-12
    node_sets = {
        "xmin": np.nonzero(np.abs(nodes[:, 0]) < tol)[0],
        "xmax": np.nonzero(np.abs(nodes[:, 0] - lx) < tol)[0],
        "ymin": np.nonzero(np.abs(nodes[:, 1]) < tol)[0],
        "ymax": np.nonzero(np.abs(nodes[:, 1] - ly) < tol)[0],
        "zmin": np.nonzero(np.abs(nodes[:, 2]) < tol)[0],
        "zmax": np.nonzero(np.abs(nodes[:, 2] - lz) < tol)[0],
        "origin": np.nonzero(np.all(np.abs(nodes) < tol, axis=1))[0],
    }

    def eidx(ei, ej, em):
        return ei + nx * (ej + ny * em)

    face_sets = {
        "xmin": [(eidx(0, ej, em), 0) for em in range(nz) for ej in range(ny)],
        "xmax": [(eidx(nx - 1, ej, em), 1) for em in range(nz) for ej in range(ny)],
        "ymin": [(eidx(ei, 0, em), 2) for em in range(nz) for ei in range(nx)],
        "ymax": [(eidx(ei, ny - 1, em), 3) for em in range(nz) for ei in range(nx)],
        "zmin": [(eidx(ei, ej, 0), 4) for ej in range(ny) for ei in range(nx)],
        "zmax": [(eidx(ei, ej, nz - 1), 5) for ej in range(ny) for ei in range(nx)],
    }
    return Mesh(nodes, elements, order, node_sets, face_sets)


def write_mesh(path, mesh):
    lines = ["# eemesh-v1", f"order {mesh.order}", f"nodes {mesh.n_nodes}"]
    for i, x in enumerate(mesh.nodes):
        lines.append(f"{i} " + " ".join(f"{v:.17g}" for v in x))
    lines.append(f"elements {mesh.n_elements} {mesh.elements.shape[1]}")
    for i, conn in enumerate(mesh.elements):
        lines.append(f"{i} " + " ".join(str(c) for c in conn))
    for name, ids in mesh.node_sets.items():
        lines.append(f"nodeset {name} {len(ids)}")
        lines.append(" ".join(str(i) for i in ids))
    for name, faces in mesh.face_sets.items():
        lines.append(f"faceset {name} {len(faces)}")
        for e, f in faces:
            lines.append(f"{e} {f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_mesh(path):
    with open(path, encoding="utf-8") as fh:
        raw = fh.read().splitlines()
    if not raw or raw[0].strip() != "# eemesh-v1":
        raise ParseError("expected '# eemesh-v1' header", line=1)
    order = None
    nodes = None
    elements = None
    node_sets = {}
    face_sets = {}
    i = 1
    try:
        while i < len(raw):
            line = raw[i].strip()
            if not line or line.startswith("#"):
                i += 1
                continue
            toks = line.split()
            if toks[0] == "order":
                order = int(toks[1])
            elif toks[0] == "nodes":
                count = int(toks[1])
                nodes = np.empty((count, 3))
                for r in range(count):
                    i += 1
                    t = raw[i].split()
                    nodes[int(t[0])] = [float(t[1]), float(t[2]), float(t[3])]
            elif toks[0] == "elements":
                count, npe = int(toks[1]), int(toks[2])
                elements = np.empty((count, npe), dtype=int)
                for r in range(count):
                    i += 1
                    t = raw[i].split()
                    elements[int(t[0])] = [int(c) for c in t[1:]]
            elif toks[0] == "nodeset":
                name, count = toks[1], int(toks[2])
                ids = []
                while len(ids) < count:
                    i += 1
                    ids.extend(int(t) for t in raw[i].split())
                node_sets[name] = np.array(ids, dtype=int)
            elif toks[0] == "faceset":
                name, count = toks[1], int(toks[2])
                faces = []
                for _ in range(count):
                    i += 1
                    t = raw[i].split()
                    faces.append((int(t[0]), int(t[1])))
                face_sets[name] = faces
            else:
                raise ParseError(f"unknown section {toks[0]!r}", line=i + 1)
            i += 1
    except (ValueError, IndexError) as exc:
        raise ParseError(str(exc), line=i + 1) from None
    if order is None or nodes is None or elements is None:
        raise ParseError("mesh file missing order, nodes, or elements section")
    return Mesh(nodes, elements, order, node_sets, face_sets)
