"""The tensor engine underneath: reverse-mode gradients on numpy arrays.

Everything in the package — convolutions, recurrences, attention, the
losses — bottoms out in this small autograd engine. This demo builds a
tiny computation, backpropagates, and checks one gradient against a
finite difference.
"""
import numpy as np

from winnow.autograd import functional as F
from winnow.autograd.tensor import Tensor, no_grad

# y = mean( tanh(x @ w) ) — a one-layer toy network
rng = np.random.default_rng(0)
x = Tensor(rng.standard_normal((4, 3)).astype(np.float64))
w = Tensor(rng.standard_normal((3, 2)).astype(np.float64), requires_grad=True)

y = F.mean(F.tanh(F.matmul(x, w)))
y.backward()
print(f"y = {float(y.data):+.6f}")
print(f"dy/dw =\n{w.grad}")

# check dy/dw[0, 0] against a centered finite difference
eps = 1e-6
with no_grad():
    w_hi = w.data.copy(); w_hi[0, 0] += eps
    w_lo = w.data.copy(); w_lo[0, 0] -= eps
    y_hi = F.mean(F.tanh(F.matmul(x, Tensor(w_hi))))
    y_lo = F.mean(F.tanh(F.matmul(x, Tensor(w_lo))))
fd = (float(y_hi.data) - float(y_lo.data)) / (2 * eps)
print(f"finite difference dy/dw[0,0] = {fd:+.8f}")
print(f"autograd          dy/dw[0,0] = {w.grad[0, 0]:+.8f}")
print(f"agreement: {abs(fd - w.grad[0, 0]) < 1e-8}")

# the packaged gradcheck runs this comparison over every primitive:
#   winnow gradcheck            (CLI)
#   run_suite(tolerance=1e-5)   (winnow.autograd.gradcheck)
