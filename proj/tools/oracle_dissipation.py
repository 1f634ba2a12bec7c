#!/usr/bin/env python3
"""Independent feasibility study for the dissipation-functional tests.

Implements the cosh-type dissipation machinery in numpy (Newton solves for
the primal potential, trapezoid quadrature) and reports:
  * energy-dissipation residuals on the four-state chain at eps in {1, 0.1}
    for 400 and 800 grid nodes, for equilibrated and non-equilibrated starts,
  * the limit-functional gap on a recovery curve for eps in {1e-1,1e-2,1e-3},
  * the two-state closed-form value of the primal potential,
  * agreement of the slope term's square-root form with direct evaluation.
"""
import numpy as np
from scipy.linalg import eigh

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

def kappa_of(A, w):
    K = A * np.sqrt(np.outer(1.0 / w, w))
    np.fill_diagonal(K, 0.0)
    return K

def cosh_star(z):
    return 4.0 * np.cosh(z / 2.0) - 4.0

def cosh_primal(v):
    return 2.0 * v * np.arcsinh(v / 2.0) - 2.0 * np.sqrt(4.0 + v * v) + 4.0

def lam_bz(r):
    r = np.asarray(r, dtype=float)
    out = np.ones_like(r)
    pos = r > 0
    out[pos] = r[pos] * np.log(r[pos]) - r[pos] + 1.0
    return out

def energy(c, w):
    return float(np.sum(w * lam_bz(c / w)))

def rstar(kap, c, xi):
    n = len(c)
    tot = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            if kap[i, k] != 0.0:
                tot += kap[i, k] * np.sqrt(c[i] * c[k]) * cosh_star(xi[i] - xi[k])
    return tot

def rstar_grad(kap, c, xi):
    g = np.zeros(len(c))
    n = len(c)
    for i in range(n):
        for k in range(i + 1, n):
            if kap[i, k] != 0.0:
                d = kap[i, k] * np.sqrt(c[i] * c[k]) * np.sinh((xi[i] - xi[k]) / 2.0) * 2.0
                g[i] += d
                g[k] -= d
    return g

def rstar_hess(kap, c, xi):
    n = len(c)
    H = np.zeros((n, n))
    for i in range(n):
        for k in range(i + 1, n):
            if kap[i, k] != 0.0:
                d = kap[i, k] * np.sqrt(c[i] * c[k]) * np.cosh((xi[i] - xi[k]) / 2.0)
                H[i, i] += d
                H[k, k] += d
                H[i, k] -= d
                H[k, i] -= d
    return H

def legendre(kap, c, v, tol=1e-12):
    """sup_xi <xi,v> - R*(c,xi) with xi_0 = 0, damped Newton."""
    n = len(c)
    xi = np.zeros(n)
    for _ in range(200):
        g = v - rstar_grad(kap, c, xi)
        gr = g[1:]
        if np.linalg.norm(gr, np.inf) < tol:
            break
        H = rstar_hess(kap, c, xi)[1:, 1:]
        step = np.linalg.solve(H, gr)
        t, obj0 = 1.0, xi @ v - rstar(kap, c, xi)
        while t > 1e-14:
            xin = xi.copy()
            xin[1:] += t * step
            if xin @ v - rstar(kap, c, xin) > obj0 + 1e-4 * t * (gr @ step):
                xi = xin
                break
            t /= 2.0
        else:
            break
    return xi @ v - rstar(kap, c, xi), xi

def slope_closed(kap, c, w):
    n = len(c)
    tot = 0.0
    for i in range(n):
        for k in range(i + 1, n):
            if kap[i, k] != 0.0:
                tot += 2.0 * kap[i, k] * np.sqrt(w[i] * w[k]) * (
                    np.sqrt(c[i] / w[i]) - np.sqrt(c[k] / w[k])) ** 2
    return tot

def modes(A, w, c0):
    d = np.sqrt(w)
    B = A * (d[None, :] / d[:, None])
    lam, U = eigh((B + B.T) / 2)
    coef = U.T @ (c0 / d)
    return lam, d[:, None] * U * coef[None, :]

def trapz(vals, times):
    return float(np.trapezoid(vals, times))

def edb_case(eps, c0, steps, label):
    As, Af = generator(4, CHAIN4_SLOW), generator(4, CHAIN4_FAST)
    A = As + Af / eps
    w = nullspace_measure(A)
    kap = kappa_of(As, w) + kappa_of(Af, w) / eps
    T = 5.0
    times = np.linspace(0.0, T, steps)
    lam, G = modes(A, w, c0)
    E0, ET = energy(c0, w), energy(G @ np.exp(lam * T), w)
    integ = []
    for t in times:
        c = G @ np.exp(lam * t)
        v = A @ c
        p, _ = legendre(kap, c, v)
        integ.append(p + slope_closed(kap, c, w))
    D = trapz(np.array(integ), times)
    res = abs(ET + D - E0) / abs(E0)
    print(f"EDB {label} eps={eps} steps={steps}: rel residual = {res:.3e}")
    return res

def recovery_study():
    As, Af = generator(4, CHAIN4_RATES_SLOW), generator(4, CHAIN4_RATES_FAST)
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
    kapS = kappa_of(As, w0)
    kapF = kappa_of(Af, w0)
    # coarse intensities for the J-space cross-check
    kap_hat = np.zeros((3, 3))
    for j1, c1 in enumerate(classes):
        for j2, c2 in enumerate(classes):
            if j1 != j2:
                kap_hat[j1, j2] = sum(
                    kapS[i1, i2] * np.sqrt(w0[i1] * w0[i2] / (what[j1] * what[j2]))
                    for i1 in c1 for i2 in c2)

    c0 = np.array([0.1, 0.6, 0.1, 0.2])
    c0p = P @ c0
    delta = 0.01
    T = 4.344001667669073
    steps = 240
    times = np.linspace(0.0, T, steps)
    lamh, H = modes(Ahat, what, M @ c0p)
    curve = np.array([delta * w0 + (1 - delta) * (N @ (H @ np.exp(lamh * t))) for t in times])
    vel = np.vstack([(curve[k + 1] - curve[k]) / (times[k + 1] - times[k])
                     for k in range(steps - 1)] + [np.zeros(4)])
    vel[-1] = vel[-2]  # forward differences, last node copies its neighbor

    # D_0: effective velocity part via the coarse dual, slope at w0
    integ0 = []
    integ_hat = []
    for k in range(steps):
        c, v = curve[k], vel[k]
        p0, _ = legendre_coarse(kapS, c, v, M)
        integ0.append(p0 + slope_closed(kapS, c, w0))
        ph, _ = legendre(kap_hat, M @ c, M @ v)
        integ_hat.append(ph + slope_closed(kap_hat, M @ c, what))
    D0 = trapz(np.array(integ0), times)
    Dhat = trapz(np.array(integ_hat), times)
    print(f"recovery: D0 = {D0:.10f}   Dhat = {Dhat:.10f}   rel diff = {abs(D0-Dhat)/(1+abs(D0)):.2e}")

    for eps in (1e-1, 1e-2, 1e-3):
        kap_eps = kapS + kapF / eps
        integ = []
        for k in range(steps):
            c, v = curve[k], vel[k]
            p, _ = legendre(kap_eps, c, v)
            integ.append(p + slope_closed(kapS, c, w0))  # fast slope is 0 on P-simplex
        D = trapz(np.array(integ), times)
        gap = abs(D - D0) / (1.0 + abs(D0))
        print(f"recovery eps={eps}: D_eps = {D:.10f}  rel gap = {gap:.3e}")

def legendre_coarse(kapS, c, v, M):
    """sup over xi = M^T xihat of <xi,v> - R*_S(c,xi), gauge xihat_0 = 0."""
    J = M.shape[0]
    xih = np.zeros(J)
    for _ in range(200):
        xi = M.T @ xih
        g = M @ (v - rstar_grad(kapS, c, xi))
        gr = g[1:]
        if np.linalg.norm(gr, np.inf) < 1e-12:
            break
        H = (M @ rstar_hess(kapS, c, xi) @ M.T)[1:, 1:]
        step = np.linalg.solve(H, gr)
        t = 1.0
        obj0 = xi @ v - rstar(kapS, c, xi)
        while t > 1e-14:
            xn = xih.copy()
            xn[1:] += t * step
            xin = M.T @ xn
            if xin @ v - rstar(kapS, c, xin) > obj0 + 1e-4 * t * (gr @ step):
                xih = xn
                break
            t /= 2.0
        else:
            break
    xi = M.T @ xih
    return xi @ v - rstar(kapS, c, xi), xih

def main():
    np.random.seed(7)
    # slope form agreement at random interior states
    As, Af = generator(4, CHAIN4_RATES_SLOW), generator(4, CHAIN4_RATES_FAST)
    w = nullspace_measure(As + Af)
    kap = kappa_of(As, w)
    worst = 0.0
    for _ in range(100):
        c = np.random.dirichlet(np.ones(4))
        xi = -np.log(c / w)
        worst = max(worst, abs(slope_closed(kap, c, w) - rstar(kap, c, xi)))
    print("slope closed-form vs direct, max abs diff over 100 draws:", worst)

    # two-state closed form
    w2 = np.array([0.75, 0.25])
    A2 = generator(2, [(0, 1, 1.0), (1, 0, 3.0)])
    kap2 = kappa_of(A2, w2)
    c = np.array([0.6, 0.4])
    delta = 0.15
    val, _ = legendre(kap2, c, np.array([delta, -delta]))
    a = kap2[0, 1] * np.sqrt(c[0] * c[1])
    print(f"two-state primal: newton = {val:.15f}  closed form = {a * cosh_primal(delta / a):.15f}")

    for c0, label in ((np.array([0.4, 0.3, 0.2, 0.1]), "plain"),):
        for eps in (1.0, 0.1):
            r400 = edb_case(eps, c0, 400, label)
            r800 = edb_case(eps, c0, 800, label)
            print(f"  -> shrink factor {label} eps={eps}: {r400 / r800:.2f}")
    # equilibrated start (no initial layer)
    w_unit = np.array([0.25, 0.25, 0.25, 0.25])
    Pc0 = np.array([0.4, 0.25, 0.25, 0.1])
    for eps in (1.0, 0.1):
        r400 = edb_case(eps, Pc0, 400, "equilibrated")
        r800 = edb_case(eps, Pc0, 800, "equilibrated")
        print(f"  -> shrink factor equilibrated eps={eps}: {r400 / r800:.2f}")

    recovery_study()

if __name__ == "__main__":
    main()
