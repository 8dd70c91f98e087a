"""
Interval sets: boxes, Minkowski sums, Pontryagin differences
============================================================

Constraint tightening runs entirely on axis-aligned boxes (plus one
H-polytope form for the invariant set). This script walks the set
algebra the controller synthesis is built on.
"""

import numpy as np

from linetemp import polytope

# a box is just elementwise lower/upper bounds
X = polytope.Box(lower=[-48.0, 0.0], upper=[48.0, 55.7])
W = polytope.Box.symmetric([0.1, 0.05])     # symmetric disturbance box
print("state box lower:", X.lower, "upper:", X.upper)
print("disturbance box:", W.lower, "to", W.upper)

# Minkowski sum: every point of X pushed around by every point of W
grown = polytope.minkowski_sum(X, W)
print("\nX (+) W:", grown.lower, "to", grown.upper)

# Pontryagin difference: the points that stay in X under any w in W.
# This is the tightening primitive: X (-) W shrinks each bound by the
# disturbance reach in that coordinate.
shrunk = polytope.pontryagin_diff_box(X, W)
print("X (-) W:", shrunk.lower, "to", shrunk.upper)

# the two operations are adjoint, not inverse: (X (-) W) (+) W <= X
back = polytope.minkowski_sum(shrunk, W)
print("(X (-) W) (+) W:", back.lower, "to", back.upper, "(equals X here)")

# subtracting something wider than the box empties it, and the empty
# flag is how synthesis detects an impossible tightening request
too_big = polytope.Box.symmetric([100.0, 1.0])
empty = polytope.pontryagin_diff_box(X, too_big)
print("\nX (-) huge box is empty:", empty.is_empty)

# support function: how far the set reaches along a direction
d = np.array([1.0, 1.0]) / np.sqrt(2.0)
print("\nsupport of X along (1,1)/sqrt(2):", polytope.support(X, d))

# membership and vertices round out the toolkit
print("contains (0, 20):", polytope.contains(X, [0.0, 20.0]))
print("vertices of W:\n", polytope.vertices(W))
