"""Exact set algebra for axis-aligned boxes and H-polytopes.

Boxes carry the disturbance set W and the invariant-set cross sections;
H-polytopes carry mixed state/control constraint sets. All operations are
pure and all set values are immutable after construction.
"""

import numpy as np

#: absolute tolerance for membership tests
TOL = 1e-9


def _as_vector(x, name):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        raise ValueError(f"{name} must be a 1-D vector, got shape {v.shape}")
    return v


class Box:
    """Axis-aligned box {x : lower <= x <= upper}.

    Empty boxes are represented by an explicit flag, never by crossed
    bounds; ``Box.empty(dim)`` constructs one.

    Parameters
    ----------
    lower, upper : array_like, shape (n,)
        Per-dimension bounds, lower[i] <= upper[i].
    """

    def __init__(self, lower, upper):
        lower = _as_vector(lower, "lower")
        upper = _as_vector(upper, "upper")
        if lower.shape != upper.shape:
            raise ValueError("lower and upper must have the same dimension")
        if np.any(lower > upper):
            raise ValueError("lower > upper; use Box.empty for empty sets")
        self._lower = lower
        self._upper = upper
        self._empty = False
        self._lower.setflags(write=False)
        self._upper.setflags(write=False)

    @classmethod
    def empty(cls, dim):
        """The empty set in `dim` ambient dimensions."""
        box = cls.__new__(cls)
        box._lower = np.zeros(dim)
        box._upper = np.zeros(dim)
        box._empty = True
        box._lower.setflags(write=False)
        box._upper.setflags(write=False)
        return box

    @classmethod
    def symmetric(cls, radius):
        """The box |x_i| <= radius_i (radii must be nonnegative)."""
        r = _as_vector(radius, "radius")
        if np.any(r < 0):
            raise ValueError("radii must be nonnegative")
        return cls(-r, r)

    @property
    def lower(self):
        return self._lower

    @property
    def upper(self):
        return self._upper

    @property
    def is_empty(self):
        return self._empty

    @property
    def dim(self):
        return self._lower.shape[0]

    @property
    def center(self):
        return 0.5 * (self._lower + self._upper)

    def __repr__(self):
        if self._empty:
            return f"Box.empty({self.dim})"
        return f"Box({self._lower.tolist()}, {self._upper.tolist()})"


class HPolytope:
    """Polytope in halfspace form {x : normals @ x <= offsets}.

    Parameters
    ----------
    normals : array_like, shape (m, n)
        Facet normal rows; no all-zero row is allowed.
    offsets : array_like, shape (m,)
        Facet offsets.
    """

    def __init__(self, normals, offsets):
        normals = np.asarray(normals, dtype=float)
        offsets = _as_vector(offsets, "offsets")
        if normals.ndim != 2:
            raise ValueError("normals must be a 2-D matrix")
        if normals.shape[0] != offsets.shape[0]:
            raise ValueError("row count of normals must equal length of offsets")
        if normals.shape[0] and np.any(np.all(normals == 0.0, axis=1)):
            raise ValueError("all-zero normal row")
        self._normals = normals
        self._offsets = offsets
        self._normals.setflags(write=False)
        self._offsets.setflags(write=False)

    @property
    def normals(self):
        return self._normals

    @property
    def offsets(self):
        return self._offsets

    @property
    def dim(self):
        return self._normals.shape[1]

    @property
    def n_facets(self):
        return self._normals.shape[0]

    def __repr__(self):
        return f"HPolytope({self.n_facets} facets, dim {self.dim})"


def as_hpolytope(box):
    """Axis-aligned facet representation of a nonempty box."""
    if box.is_empty:
        raise ValueError("empty box has no facet representation")
    eye = np.eye(box.dim)
    normals = np.vstack([eye, -eye])
    offsets = np.concatenate([box.upper, -box.lower])
    return HPolytope(normals, offsets)


def _check_dims(a, b):
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")


def minkowski_sum(a, b):
    """Box Minkowski sum a (+) b = {x + y : x in a, y in b}."""
    _check_dims(a, b)
    if a.is_empty or b.is_empty:
        return Box.empty(a.dim)
    return Box(a.lower + b.lower, a.upper + b.upper)


def pontryagin_diff_box(x, omega):
    """Box Pontryagin difference x (-) omega = {p : p (+) omega subset of x}.

    Component-wise [x.lo - omega.lo, x.hi - omega.hi]; empty if any
    interval crosses.
    """
    _check_dims(x, omega)
    if omega.is_empty:
        raise ValueError("cannot subtract an empty set")
    if x.is_empty:
        return Box.empty(x.dim)
    lower = x.lower - omega.lower
    upper = x.upper - omega.upper
    if np.any(lower > upper):
        return Box.empty(x.dim)
    return Box(lower, upper)


def support(omega, direction):
    """Support function h(d) = max_{x in omega} d @ x of a nonempty box."""
    d = _as_vector(direction, "direction")
    if omega.is_empty:
        raise ValueError("support of an empty set is undefined")
    if d.shape[0] != omega.dim:
        raise ValueError(f"dimension mismatch: {d.shape[0]} vs {omega.dim}")
    return float(np.sum(np.maximum(d * omega.lower, d * omega.upper)))


def pontryagin_diff_hpoly(x, omega):
    """H-polytope minus box: each facet offset drops by the box support.

    offsets'[i] = offsets[i] - h_omega(normals[i]); exact for any
    convex omega given by its support function.
    """
    if x.dim != omega.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {omega.dim}")
    if omega.is_empty:
        raise ValueError("cannot subtract an empty set")
    shrunk = np.array([support(omega, row) for row in x.normals])
    return HPolytope(x.normals, x.offsets - shrunk)


def contains(omega, point):
    """Membership within absolute tolerance 1e-9 (closed sets)."""
    p = _as_vector(point, "point")
    if isinstance(omega, Box):
        if omega.is_empty:
            return False
        if p.shape[0] != omega.dim:
            raise ValueError(f"dimension mismatch: {p.shape[0]} vs {omega.dim}")
        return bool(np.all(p >= omega.lower - TOL) and np.all(p <= omega.upper + TOL))
    if p.shape[0] != omega.dim:
        raise ValueError(f"dimension mismatch: {p.shape[0]} vs {omega.dim}")
    return bool(np.all(omega.normals @ p <= omega.offsets + TOL))


def vertices(box):
    """All 2^n corner points of a nonempty box (small n only)."""
    if box.is_empty:
        raise ValueError("empty box has no vertices")
    n = box.dim
    if n > 12:
        raise ValueError("vertex enumeration limited to dimension <= 12")
    bounds = np.stack([box.lower, box.upper], axis=1)
    grid = np.indices((2,) * n).reshape(n, -1).T
    return bounds[np.arange(n), grid]
