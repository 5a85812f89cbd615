"""Hexahedral Lagrange elements: tri-linear (8 nodes) and tri-quadratic (27).

Local node ordering is lexicographic over the tensor-product grid on
[-1, 1]^3 with the first parametric coordinate fastest: node index
l = i + k_order * (j + k_order * k) with k_order = order + 1. Quadrature is
the tensor-product Gauss rule with 2 (tri-linear) or 3 (tri-quadratic)
points per direction. Faces are numbered 0..5 as x-, x+, y-, y+, z-, z+.
"""

import numpy as np

__all__ = ["Element", "HEX8", "HEX27", "element_for_order", "FACE_AXES"]


def _lagrange_1d(order):
    """Values and derivatives of the 1D Lagrange basis at nodes -1(,0),1."""
    if order == 1:

        def shape(x):
            return np.array([0.5 * (1.0 - x), 0.5 * (1.0 + x)])

        def deriv(x):
            return np.array([-0.5, 0.5])

    elif order == 2:

        def shape(x):
            return np.array([0.5 * x * (x - 1.0), 1.0 - x * x, 0.5 * x * (x + 1.0)])

        def deriv(x):
            return np.array([x - 0.5, -2.0 * x, x + 0.5])

    else:
        raise ValueError(f"unsupported element order {order}")
    return shape, deriv


def _gauss_1d(n):
    if n == 2:
        p = 1.0 / np.sqrt(3.0)
        return np.array([-p, p]), np.array([1.0, 1.0])
    if n == 3:
        p = np.sqrt(3.0 / 5.0)
        return np.array([-p, 0.0, p]), np.array([5.0, 8.0, 5.0]) / 9.0
    raise ValueError(f"unsupported rule {n}")


# face -> (fixed axis, fixed coordinate, in-plane axes)
FACE_AXES = {
    0: (0, -1.0, (1, 2)),
    1: (0, +1.0, (1, 2)),
    2: (1, -1.0, (0, 2)),
    3: (1, +1.0, (0, 2)),
    4: (2, -1.0, (0, 1)),
    5: (2, +1.0, (0, 1)),
}


class Element:
    """Shape functions, gradients, and quadrature for one element order."""

    def __init__(self, order):
        self.order = order
        self.k = order + 1
        self.n_nodes = self.k**3
        self._shape1, self._deriv1 = _lagrange_1d(order)
        pts, wts = _gauss_1d(order + 1)
        quad_points = []
        quad_weights = []
        for ck, wk in zip(pts, wts):
            for cj, wj in zip(pts, wts):
                for ci, wi in zip(pts, wts):
                    quad_points.append((ci, cj, ck))
                    quad_weights.append(wi * wj * wk)
        self.quad_points = np.array(quad_points)
        self.quad_weights = np.array(quad_weights)
        # reference-node coordinates in the local lexicographic ordering
        coords1 = np.linspace(-1.0, 1.0, self.k)
        nodes = []
        for ck in coords1:
            for cj in coords1:
                for ci in coords1:
                    nodes.append((ci, cj, ck))
        self.ref_nodes = np.array(nodes)

    def shape(self, xi):
        sx = self._shape1(xi[0])
        sy = self._shape1(xi[1])
        sz = self._shape1(xi[2])
        return np.einsum("k,j,i->kji", sz, sy, sx).ravel()

    def shape_grad(self, xi):
        """Gradients w.r.t. the parametric coordinates, shape (n_nodes, 3)."""
        sx, sy, sz = self._shape1(xi[0]), self._shape1(xi[1]), self._shape1(xi[2])
        dx, dy, dz = self._deriv1(xi[0]), self._deriv1(xi[1]), self._deriv1(xi[2])
        gx = np.einsum("k,j,i->kji", sz, sy, dx).ravel()
        gy = np.einsum("k,j,i->kji", sz, dy, sx).ravel()
        gz = np.einsum("k,j,i->kji", dz, sy, sx).ravel()
        return np.stack([gx, gy, gz], axis=1)

    def face_nodes(self, face):
        """Local node indices lying on a face, in lexicographic order."""
        axis, value, _ = FACE_AXES[face]
        mask = np.isclose(self.ref_nodes[:, axis], value)
        return np.nonzero(mask)[0]

    def face_quadrature(self, face):
        """Parametric points and weights of the 2D Gauss rule on a face."""
        axis, value, plane = FACE_AXES[face]
        pts, wts = _gauss_1d(self.order + 1)
        points = []
        weights = []
        for cb, wb in zip(pts, wts):
            for ca, wa in zip(pts, wts):
                xi = np.zeros(3)
                xi[axis] = value
                xi[plane[0]] = ca
                xi[plane[1]] = cb
                points.append(xi)
                weights.append(wa * wb)
        return np.array(points), np.array(weights), plane


HEX8 = Element(1)
HEX27 = Element(2)


def element_for_order(order):
    if order == 1:
        return HEX8
    if order == 2:
        return HEX27
    raise ValueError(f"unsupported element order {order}")
