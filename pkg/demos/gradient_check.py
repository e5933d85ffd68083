"""Compare the analytic weight updates of a small network with finite differences.

Run with ``python demos/gradient_check.py``.
"""

import math

from quatrnn.gradcheck import check_model_gradients

sigma = 0.8
for loss in ("mse", "mcc"):
    for window in (1, 3):
        report = check_model_gradients("qrnn", loss, (2, 3, 1), seeds=range(3), window=window, sigma=sigma)
        print(f"{loss}, window {window}: {report.summary()}")
        if loss == "mcc":
            # correntropy updates equal the loss gradient up to this constant factor
            print(f"    expected scale {2 / (window * math.sqrt(2 * math.pi) * sigma ** 3):.6g}")

# The worst components show where finite differences and the update rule agree least.
for entry in check_model_gradients("qrnn", "mcc", (2, 3, 1), window=3).worst(3):
    index = tuple(int(i) for i in entry.index)
    print(f"{entry.name}{index}: analytic {entry.analytic:+.12e}, numeric {entry.numeric:+.12e}, "
          f"relative error {entry.rel_error:.1e}")
