#!/usr/bin/env python3
"""Feasibility check for the epsilon-convergence experiment design.

A uniform display grid cannot resolve the initial layer of the fast
direction, so time integrals of |(id-P)c_eps|^2 and |c_eps - c_0|^2 must be
evaluated in closed form from the spectral expansion of the two semigroups
(sum over eigenpairs of integrals of exp((lambda_k+lambda_l)t)).  This
script verifies, via scipy eigendecompositions, that with exact integrals
the fixture satisfies:
  * sup_t |M c_eps - M c_0| and the L2 error decrease strictly,
  * R(eps) = (1/eps) int |(id-P)c_eps|^2 dt stays within a 10x band,
  * the fast integral shrinks by a factor in [5, 20] per eps decade,
  * the limit trajectory matches propagation at eps = 1e-6.
"""
import numpy as np
from scipy.linalg import eigh, expm

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

def modes(A, w, c0):
    """Eigen-expansion c(t) = sum_k exp(lam_k t) g_k for a DBC generator."""
    d = np.sqrt(w)
    B = A * (d[None, :] / d[:, None])  # D^{-1/2} A D^{1/2}, symmetric
    lam, U = eigh((B + B.T) / 2)
    coef = U.T @ (c0 / d)
    G = d[:, None] * U * coef[None, :]  # columns g_k
    return lam, G

def exact_sq_integral(lams, G, T):
    """int_0^T |sum_k exp(lam_k t) g_k|^2 dt, columns of G are g_k."""
    gram = G.T @ G
    total = 0.0
    for k in range(len(lams)):
        for l in range(len(lams)):
            mu = lams[k] + lams[l]
            E = T if abs(mu) < 1e-14 else np.expm1(mu * T) / mu
            total += gram[k, l] * E
    return total

def run(name, slow_e, fast_e, c0, T, steps=200):
    As, Af = generator(4, slow_e), generator(4, fast_e)
    w0 = nullspace_measure(As + Af)
    classes = [[0], [1, 2], [3]]
    M = np.zeros((3, 4))
    for j, cls in enumerate(classes):
        for i in cls:
            M[j, i] = 1.0
    what = M @ w0
    N = np.diag(w0) @ M.T @ np.diag(1.0 / what)
    P = N @ M
    Ahat = M @ As @ N

    times = np.linspace(0.0, T, steps)
    lam0, H = modes(Ahat, what, M @ c0)
    NH = N @ H  # limit trajectory modes in the full space
    climit = np.array([NH @ np.exp(lam0 * t) for t in times])

    print(f"--- {name}: c0 = {c0}, T = {T}")
    prev_sup = prev_l2 = None
    fast_ints = {}
    for eps in (1e-1, 1e-2, 1e-3):
        w_eps = nullspace_measure(As + Af / eps)
        lam, G = modes(As + Af / eps, w_eps, c0)
        ceps = np.array([G @ np.exp(lam * t) for t in times])
        sup_err = np.abs((ceps - climit) @ M.T).max()
        # difference of the two expansions is one expansion with 4+3 modes
        alldiff_l = np.concatenate([lam, lam0])
        alldiff_G = np.hstack([G, -NH])
        l2_err = np.sqrt(exact_sq_integral(alldiff_l, alldiff_G, T))
        fast = exact_sq_integral(lam, (np.eye(4) - P) @ G, T)
        fast_ints[eps] = fast
        print(f"eps={eps:6}  sup_Mc={sup_err:.6e}  l2={l2_err:.6e}  "
              f"fast_int={fast:.6e}  R={fast/eps:.6e}")
        if prev_sup is not None:
            assert sup_err < prev_sup and l2_err < prev_l2, "errors not decreasing"
        prev_sup, prev_l2 = sup_err, l2_err
    Rs = [fast_ints[e] / e for e in fast_ints]
    print("R max/min =", max(Rs) / min(Rs))
    for ea, eb in ((1e-1, 1e-2), (1e-2, 1e-3)):
        f = fast_ints[ea] / fast_ints[eb]
        print(f"fast integral shrink {ea}->{eb}: {f:.3f}")
        assert 5.0 <= f <= 20.0, "shrink factor outside [5,20]"

    # small-eps cross-check of the limit solver needs a fast-equilibrated start
    c0p = P @ c0
    lam0p, Hp = modes(Ahat, what, M @ c0p)
    ceps = np.array([expm((As + Af / 1e-6) * t) @ c0p for t in times])
    climp = np.array([N @ (Hp @ np.exp(lam0p * t)) for t in times])
    print("sup |c_eps(1e-6) - c_limit| from P c0 =", np.abs(ceps - climp).max())

def main():
    c0 = np.array([0.1, 0.6, 0.1, 0.2])
    run("chain4 (unit rates)", CHAIN4_SLOW, CHAIN4_FAST, c0, 5.0)
    run("chain4_rates", CHAIN4_RATES_SLOW, CHAIN4_RATES_FAST, c0, 4.344001667669073)

    # two-state relaxation rate: eigenvalues of [[-1, 3], [1, -3]] are 0, -4
    A = np.array([[-1.0, 3.0], [1.0, -3.0]])
    c0 = np.array([0.2, 0.8])
    for t in (0.3, 1.0):
        c = expm(A * t) @ c0
        closed = 0.75 + (c0[0] - 0.75) * np.exp(-4.0 * t)
        print(f"twostate t={t}: c1={c[0]:.17g} closed-form={closed:.17g} diff={abs(c[0]-closed):.2e}")

if __name__ == "__main__":
    main()
