"""Independent convex-program solution of the discretized KL bound problem.

Prints frozen reference values used by tests/test_oracles.cpp.
"""
import cvxpy as cp
import numpy as np
from scipy.stats import norm


def curve(u, offset, slope, shift, sat):
    return offset + slope * sat * np.tanh((u - shift) / sat)


def bound(pi, f, w, gamma, upper):
    r = cp.Variable(len(f), pos=True)
    sign = 1.0 if upper else -1.0
    cons = [w @ r == 1,
            cp.sum(cp.multiply(w, -cp.entr(r))) <= gamma,
            -(w @ cp.log(r)) <= gamma]
    prob = cp.Problem(cp.Maximize(sign * (w @ cp.multiply(r, f))), cons)
    prob.solve(solver=cp.CLARABEL)
    q0 = w @ f
    return pi * q0 + (1 - pi) * float(w @ (r.value * f))


def main():
    n = 2001
    u = np.linspace(-6, 6, n)
    w = norm.pdf(u)
    w[0] *= 0.5
    w[-1] *= 0.5
    w /= w.sum()
    f = curve(u, 0.2, 0.8, 0.3, 1.5)
    for g in (0.05, 0.1, 0.2, 0.5, 1.0):
        print(g, repr(bound(0.3, f, w, g, False)), repr(bound(0.3, f, w, g, True)))


if __name__ == "__main__":
    main()
