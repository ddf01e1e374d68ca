"""
Reverse-mode autodiff on numpy arrays
=====================================

Build a tiny conv -> batch norm -> relu -> pool graph, backpropagate a scalar
and compare one gradient entry against a finite difference.
"""

import numpy as np

from fractalflow.engine import Tensor, batchnorm2d, conv2d, maxpool2d, relu

rng = np.random.default_rng(0)

x = Tensor(rng.normal(size=(1, 2, 8, 8)))
w = Tensor(rng.normal(size=(4, 2, 3, 3)) * 0.3, requires_grad=True)
gamma = Tensor(np.ones(4), requires_grad=True)
beta = Tensor(np.zeros(4), requires_grad=True)


def forward():
    h = conv2d(x, w, padding=1)
    h = relu(batchnorm2d(h, gamma, beta))
    return maxpool2d(h).square().mean()


loss = forward()
loss.backward()
print("loss:", loss.item())
print("pooled feature map shape:", maxpool2d(conv2d(x, w, padding=1)).shape)

# central difference on a single weight
eps = 1e-5
w.data[0, 0, 1, 1] += eps
up = forward().item()
w.data[0, 0, 1, 1] -= 2 * eps
down = forward().item()
w.data[0, 0, 1, 1] += eps
print("autodiff     :", w.grad[0, 0, 1, 1])
print("finite diff  :", (up - down) / (2 * eps))

# gradients accumulate until cleared
forward().backward()
print("after a second backward the grad doubled:", w.grad[0, 0, 1, 1])
w.zero_grad()
