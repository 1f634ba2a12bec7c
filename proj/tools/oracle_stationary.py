#!/usr/bin/env python3
"""Independent reference values for the network-module tests.

Computes stationary measures by brute-force SVD null spaces (a different
algorithm than the library's augmented least-squares path) plus Richardson
extrapolation of w(eps) toward eps = 0.  Run from the repo root:

    python3 tools/oracle_stationary.py

Frozen values are printed as FROZEN lines and copied into tests/.
"""
import numpy as np

np.set_printoptions(precision=17, floatmode="maxprec")


def generator(num_states, edges):
    """edges: list of (src, dst, rate) with 0-based indices; returns column-generator A."""
    A = np.zeros((num_states, num_states))
    for src, dst, rate in edges:
        A[dst, src] += rate
    A -= np.diag(A.sum(axis=0))
    return A


# Fixture definitions (0-based state indices). Slow and fast parts are kept
# separate; assemble(eps) = slow + fast/eps.
CHAIN4_SLOW = [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]
CHAIN4_FAST = [(1, 2, 1.0), (2, 1, 1.0)]

CHAIN4_RATES_SLOW = [(0, 1, 1.3), (1, 0, 0.7), (2, 3, 2.0), (3, 2, 0.5)]
CHAIN4_RATES_FAST = [(1, 2, 1.1), (2, 1, 0.4)]

# shared slow+fast edge 2<->3 => eps-dependent stationary measure
CHAIN4_MIXED_SLOW = [(0, 1, 2.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 2.0),
                     (2, 3, 1.0), (3, 2, 3.0)]
CHAIN4_MIXED_FAST = [(1, 2, 3.0), (2, 1, 1.0)]

CYCLE3_ONEWAY = [(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]

VANISHING_MIDDLE_SLOW = [(0, 1, 2.0), (2, 1, 2.0)]
VANISHING_MIDDLE_FAST = [(1, 0, 2.0), (1, 2, 2.0)]

TWOSTATE_SLOW = [(0, 1, 1.0), (1, 0, 3.0)]


def nullspace_measure(A):
    """Stationary probability vector via SVD null space."""
    _, s, vt = np.linalg.svd(A)
    assert s[-1] < 1e-12 and s[-2] > 1e-10, f"kernel not 1-dim: {s}"
    w = vt[-1]
    w = w / w.sum()
    return w


def assemble(slow_edges, fast_edges, n, eps):
    return generator(n, slow_edges) + generator(n, fast_edges) / eps


def main():
    # chain4, unit rates, eps = 1: expect the uniform measure
    A = assemble(CHAIN4_SLOW, CHAIN4_FAST, 4, 1.0)
    w = nullspace_measure(A)
    print("FROZEN chain4 eps=1 w =", w)

    # assembled entry (row 2, col 3 in 1-based labels) at eps = 0.1
    A01 = assemble(CHAIN4_SLOW, CHAIN4_FAST, 4, 0.1)
    print("FROZEN chain4 eps=0.1 A[1,2] =", A01[1, 2])

    # chain4_rates: eps-independent measure (disjoint slow/fast edges)
    for eps in (1.0, 1e-3):
        w = nullspace_measure(assemble(CHAIN4_RATES_SLOW, CHAIN4_RATES_FAST, 4, eps))
        print(f"FROZEN chain4_rates eps={eps} w =", w)

    # chain4_mixed: w(eps) varies; extrapolate and compare with the exact
    # limit system {A_fast w = 0, M A_slow w = 0, sum w = 1}
    eps_list = [1e-2, 1e-3, 1e-4]
    ws = {}
    for eps in eps_list:
        ws[eps] = nullspace_measure(assemble(CHAIN4_MIXED_SLOW, CHAIN4_MIXED_FAST, 4, eps))
        print(f"chain4_mixed w({eps}) =", ws[eps])
    e1, e2 = eps_list[-2], eps_list[-1]
    richardson = ws[e2] + (ws[e2] - ws[e1]) * e2 / (e1 - e2)
    print("chain4_mixed Richardson w0 ~", richardson)

    Af = generator(4, CHAIN4_MIXED_FAST)
    As = generator(4, CHAIN4_MIXED_SLOW)
    M = np.array([[1, 0, 0, 0], [0, 1, 1, 0], [0, 0, 0, 1]], dtype=float)
    sys = np.vstack([Af, M @ As, np.ones((1, 4))])
    rhs = np.zeros(sys.shape[0])
    rhs[-1] = 1.0
    w0, *_ = np.linalg.lstsq(sys, rhs, rcond=None)
    print("FROZEN chain4_mixed w0 exact =", w0)
    print("  closed form (1,2,6,2)/11   =", np.array([1, 2, 6, 2]) / 11.0)
    print("  |extrapolation - exact|    =", np.abs(richardson - w0).max())

    # one-directional 3-cycle: uniform stationary measure, DBC residual 1/3
    A = generator(3, CYCLE3_ONEWAY)
    w = nullspace_measure(A)
    res = max(abs(A[i, k] * w[k] - A[k, i] * w[i]) for i in range(3) for k in range(3))
    print("FROZEN cycle3_oneway w =", w, " dbc residual =", res)

    # vanishing middle state: w(eps) = (1, eps, 1)/(2 + eps)
    for eps in (1e-1, 1e-2):
        w = nullspace_measure(assemble(VANISHING_MIDDLE_SLOW, VANISHING_MIDDLE_FAST, 3, eps))
        expect = np.array([1.0, eps, 1.0]) / (2.0 + eps)
        print(f"vanishing_middle w({eps}) =", w, " max err vs formula:", np.abs(w - expect).max())
    # three-point Richardson toward eps=0 (the library's check_assumptions path)
    e = 1e-2
    wa = nullspace_measure(assemble(VANISHING_MIDDLE_SLOW, VANISHING_MIDDLE_FAST, 3, e))
    wb = nullspace_measure(assemble(VANISHING_MIDDLE_SLOW, VANISHING_MIDDLE_FAST, 3, e / 2))
    wc = nullspace_measure(assemble(VANISHING_MIDDLE_SLOW, VANISHING_MIDDLE_FAST, 3, e / 4))
    r1a = 2 * wb - wa
    r1b = 2 * wc - wb
    r2 = (4 * r1b - r1a) / 3
    print("FROZEN vanishing_middle Richardson-2 w0 ~", r2, " min entry:", r2.min())

    # two-state: w = (3/4, 1/4); kappa_12 = 3 sqrt(1/3) = sqrt(3)
    A = generator(2, TWOSTATE_SLOW)
    w = nullspace_measure(A)
    kappa12 = A[0, 1] * np.sqrt(w[1] / w[0])
    print("FROZEN twostate w =", w, " kappa12 =", kappa12, " sqrt3 =", np.sqrt(3.0))


if __name__ == "__main__":
    main()
