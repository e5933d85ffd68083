"""Quaternion algebra and the correntropy kernel, step by step.

Run with ``python demos/quaternion_basics.py``.
"""

import numpy as np

from quatrnn.losses import KernelConfig, mse_loss, quat_gauss_kernel
from quatrnn.quaternion import Quaternion, qmul, rotate

# A marker position (x, y, z) in mm becomes the pure quaternion 0 + xi + yj + zk.
i, j, k = Quaternion(0, 1, 0, 0), Quaternion(0, 0, 1, 0), Quaternion(0, 0, 0, 1)
print("i * j =", i * j, "   j * i =", j * i, "   (the product does not commute)")

p = Quaternion(1.0, 2.0, -0.5, 0.3)
q = Quaternion(-0.7, 0.1, 1.5, 2.0)
print("|p q| =", abs(p * q), "  |p| |q| =", abs(p) * abs(q))
print("p * p^-1 =", p * p.inverse())

# Rotating by a unit imaginary flips the sign of the other two imaginary parts.
print("p rotated by i:", p.rotate("i"))
print("rotation respects products:",
      np.allclose(rotate(qmul(p.array, q.array), "j"), qmul(rotate(p.array, "j"), rotate(q.array, "j"))))

# The squared error grows without bound while the Gaussian kernel saturates,
# so a single wild sample cannot dominate a correntropy-trained update.
cfg = KernelConfig(sigma=1.0)
print("\n|e|    squared error    kernel")
for size in (0.0, 0.5, 1.0, 2.0, 4.0, 8.0):
    e = np.array([0.0, size, 0.0, 0.0])
    print(f"{size:4.1f}   {mse_loss(e):12.3f}   {quat_gauss_kernel(e, np.zeros(4), cfg):10.6f}")
