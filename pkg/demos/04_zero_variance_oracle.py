"""The zero-variance solution in one dimension, by quadrature.

phi*(x) = (1/pi(x)) int_A^x pi(t) (f(t) - E f) dt makes f - zeta_phi*
constant.  For f = x^2 under Exp(1) it is -x^2 - 2x; the quadrature version
reproduces that, and for f = cos x it gives a function with no closed form
whose Stein residual is still at the quadrature noise level.
"""

import numpy as np

from evmcv import distributions as dist
from evmcv.oracle import verify_zero_variance, zero_variance_phi_1d

expo = dist.exponential_unit()
x = np.array([0.5, 1.0, 2.0, 5.0])

phi = zero_variance_phi_1d(lambda t: t[:, 0] ** 2, expo)
print("E f =", phi.expectation)
print("phi*(x)      ", phi(x))
print("-x^2 - 2x    ", -x * x - 2 * x)

cos = lambda t: np.cos(t[:, 0])  # noqa: E731
phi_cos = zero_variance_phi_1d(cos, expo)
grid = np.linspace(0.01, 10, 200)
print("cos x: E f =", phi_cos.expectation, "(exact 0.5)")
print("max |f - zeta - E f| on (0, 10]:", verify_zero_variance(cos, expo, phi_cos, grid))
