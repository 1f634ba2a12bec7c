#!/usr/bin/env python3
"""Independent reference values for the coarse-graining tests.

Builds M, N, P from their defining formulas and cross-checks the projection
P against a projector constructed from SVD kernel/range bases of the fast
generator (a construction the library never uses).  Also computes the coarse
generator two ways and the spectral gap used for default time horizons.
"""
import numpy as np

np.set_printoptions(precision=17, floatmode="maxprec")


def generator(n, edges):
    A = np.zeros((n, n))
    for src, dst, rate in edges:
        A[dst, src] += rate
    A -= np.diag(A.sum(axis=0))
    return A


CHAIN4_SLOW = [(0, 1, 1.0), (1, 0, 1.0), (2, 3, 1.0), (3, 2, 1.0)]
CHAIN4_FAST = [(1, 2, 1.0), (2, 1, 1.0)]
CHAIN4_RATES_SLOW = [(0, 1, 1.3), (1, 0, 0.7), (2, 3, 2.0), (3, 2, 0.5)]
CHAIN4_RATES_FAST = [(1, 2, 1.1), (2, 1, 0.4)]


def nullspace_measure(A):
    _, s, vt = np.linalg.svd(A)
    w = vt[-1]
    return w / w.sum()


def operators(classes, w0):
    I = len(w0)
    J = len(classes)
    M = np.zeros((J, I))
    for j, cls in enumerate(classes):
        for i in cls:
            M[j, i] = 1.0
    what = M @ w0
    N = np.diag(w0) @ M.T @ np.diag(1.0 / what)
    P = N @ M
    return M, N, P, what


def kernel_range_projector(Af):
    """Projector onto kernel(Af) along range(Af), built from SVD bases."""
    n = Af.shape[0]
    u, s, vt = np.linalg.svd(Af)
    rank = int((s > 1e-12).sum())
    ker = vt[rank:].T          # basis of kernel(Af)
    rng = u[:, :rank]          # basis of range(Af)
    B = np.hstack([ker, rng])  # X = kernel + range (direct sum)
    coeff = np.linalg.solve(B, np.eye(n))
    return B[:, : ker.shape[1]] @ coeff[: ker.shape[1], :]


def coarse_two_ways(As, classes, w0, M, N, what):
    Ahat = M @ As @ N
    J = len(classes)
    Ahat2 = np.zeros((J, J))
    for j1, c1 in enumerate(classes):
        for j2, c2 in enumerate(classes):
            Ahat2[j1, j2] = sum(As[i1, i2] * w0[i2] / what[j2] for i1 in c1 for i2 in c2)
    return Ahat, Ahat2


def report(name, slow, fast, n):
    As, Af = generator(n, slow), generator(n, fast)
    w0 = nullspace_measure(As + Af)  # eps-independent measure for disjoint edges
    classes = [[0], [1, 2], [3]]
    M, N, P, what = operators(classes, w0)
    print(f"--- {name}")
    print("w0   =", w0)
    print("what =", what)
    print("N[:,1] =", N[:, 1])
    print("P row1 =", P[1, :])
    Portho = kernel_range_projector(Af)
    print("max |P - kernel/range projector| =", np.abs(P - Portho).max())
    Ahat, Ahat2 = coarse_two_ways(As, classes, w0, M, N, what)
    print("Ahat =\n", Ahat)
    print("max |Ahat(product) - Ahat(average)| =", np.abs(Ahat - Ahat2).max())
    print("Ahat @ what =", Ahat @ what)
    ev = np.linalg.eigvals(Ahat)
    gap = min(-e.real for e in ev if abs(e) > 1e-12)
    print("spectral gap of Ahat =", gap, " default T = 5/gap =", 5.0 / gap)

    c = np.array([0.1, 0.6, 0.1, 0.2])
    print("P @ c      =", P @ c)
    print("(id-P) @ c =", c - P @ c)
    return gap


def main():
    report("chain4 (unit rates)", CHAIN4_SLOW, CHAIN4_FAST, 4)
    report("chain4_rates", CHAIN4_RATES_SLOW, CHAIN4_RATES_FAST, 4)


if __name__ == "__main__":
    main()
