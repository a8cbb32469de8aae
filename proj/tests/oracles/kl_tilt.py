"""Penalized forward-KL optimum by quadrature.

max_nu (1 - pi) E_nu f - lam KL(nu || phi) is attained by the tilt
nu ∝ phi exp(+-(1 - pi) f / lam). Prints the shift theta - Q0 used by
tests/test_frontier.cpp; F_KL >= forward KL, so it bounds the sweep's shift.
"""
import numpy as np
from scipy import integrate
from scipy.stats import norm

OFFSET, SLOPE, SHIFT, SAT = 0.2, 0.8, 0.3, 1.5
PI = 0.3


def f(u):
    return OFFSET + SLOPE * SAT * np.tanh((u - SHIFT) / SAT)


def quad(g):
    return integrate.quad(g, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-13, limit=400)[0]


q0 = quad(lambda u: f(u) * norm.pdf(u))
for lam in (2.0, 1.0):
    for sign in (1, -1):
        w = lambda u: norm.pdf(u) * np.exp(sign * (1 - PI) * f(u) / lam)
        z = quad(w)
        mean = quad(lambda u: f(u) * w(u)) / z
        print(f"lam={lam} sign={sign:+d} shift={repr((1 - PI) * (mean - q0))}")
