#include "fastslow/edp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

// Dual potential acting on potential differences: z^2/2 for the quadratic
// and entropic kinds, 4 cosh(z/2) - 4 for the cosh kind.
struct Psi {
    bool is_cosh = false;
    double value(double z) const { return is_cosh ? cosh_star(z) : 0.5 * z * z; }
    double deriv(double z) const { return is_cosh ? cosh_star_prime(z) : z; }
    double second(double z) const {
        if (!is_cosh) return 1.0;
        double h = 0.5 * z;
        if (std::abs(h) > 700.0) return kPlusInfinity;
        return std::cosh(h);
    }
};

std::vector<std::vector<int>> positive_adjacency(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<std::vector<int>> adj(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (a(i, j) > 0.0) {
                adj[static_cast<size_t>(i)].push_back(j);
                adj[static_cast<size_t>(j)].push_back(i);
            }
    return adj;
}

// Newton solve of sup_xi { <xi, v> - sum_{i<n} a_in Psi(xi_i - xi_n) } with
// one gauge-pinned node per connected component of the positive-coefficient
// graph. allow_components = false restricts to the connected case (the
// public legendre_primal contract); with components allowed, v must be
// balanced on every component or the sup diverges.
LegendreSolve newton_solve(const Matrix& a, bool is_cosh, const Vector& v,
                           bool allow_components) {
    const int n = static_cast<int>(v.size());
    Psi psi{is_cosh};
    auto comps = detail::connected_components(positive_adjacency(a), n);
    if (!allow_components && comps.size() > 1)
        throw Error(ErrorKind::UnboundedOrDegenerate,
                    "positive-coefficient graph is disconnected (" +
                        std::to_string(comps.size()) + " components); the dual sup diverges");

    double vscale = 1.0 + v.lpNorm<1>();
    for (const auto& comp : comps) {
        double s = 0.0;
        for (int i : comp) s += v(i);
        if (std::abs(s) > 1e-9 * vscale)
            throw Error(ErrorKind::UnboundedOrDegenerate,
                        "velocity carries net mass " + format_g17(s) +
                            " on a component of the positive-coefficient graph");
    }

    // Gauge: pin the lowest-index node of each component.
    std::vector<int> pos(static_cast<size_t>(n), -1);
    std::vector<int> free_idx;
    for (const auto& comp : comps) {
        int pin = *std::min_element(comp.begin(), comp.end());
        for (int i : comp)
            if (i != pin) {
                pos[static_cast<size_t>(i)] = static_cast<int>(free_idx.size());
                free_idx.push_back(i);
            }
    }
    const int m = static_cast<int>(free_idx.size());

    auto objective = [&](const Vector& xi) {
        // phi(xi) = R*(xi) - <xi, v>, the function we minimize.
        double phi = -xi.dot(v);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (a(i, j) > 0.0) {
                    double p = psi.value(xi(i) - xi(j));
                    if (is_infinite_sentinel(p)) return kPlusInfinity;
                    phi += a(i, j) * p;
                }
        return phi;
    };
    auto gradient = [&](const Vector& xi) {
        Vector g = -v;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (a(i, j) > 0.0) {
                    double d = psi.deriv(xi(i) - xi(j));
                    g(i) += a(i, j) * d;
                    g(j) -= a(i, j) * d;
                }
        return g;
    };

    Vector xi = Vector::Zero(n);
    Vector g_full = gradient(xi);
    int iter = 0;
    for (; iter < 100 && m > 0; ++iter) {
        Vector g_free(m);
        for (int k = 0; k < m; ++k) g_free(k) = g_full(free_idx[static_cast<size_t>(k)]);
        if (g_free.lpNorm<Eigen::Infinity>() <= 1e-10) break;

        // Reduced Hessian: graph Laplacian with weights a_in Psi''(xi_i - xi_n),
        // rows and columns of the pinned nodes dropped.
        Matrix H = Matrix::Zero(m, m);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (a(i, j) > 0.0) {
                    double h = a(i, j) * psi.second(xi(i) - xi(j));
                    int pi = pos[static_cast<size_t>(i)], pj = pos[static_cast<size_t>(j)];
                    if (pi >= 0) H(pi, pi) += h;
                    if (pj >= 0) H(pj, pj) += h;
                    if (pi >= 0 && pj >= 0) {
                        H(pi, pj) -= h;
                        H(pj, pi) -= h;
                    }
                }
        Vector d = -Eigen::LDLT<Matrix>(H).solve(g_free);
        if (!d.allFinite() || d.dot(g_free) >= 0.0) d = -g_free;

        double phi0 = objective(xi);
        double slope = g_free.dot(d);

        // Close to the minimum the certifiable decrease ~ |g|^2 drops below
        // the round-off floor of the objective and backtracking can no
        // longer tell progress from noise; the undamped Newton step is safe
        // there and finishes the solve.
        double noise = 1e-14 * (1.0 + std::abs(phi0));
        if (-slope <= noise) {
            Vector xi_full = xi;
            for (int k = 0; k < m; ++k) xi_full(free_idx[static_cast<size_t>(k)]) += d(k);
            if (!is_infinite_sentinel(objective(xi_full))) {
                xi = xi_full;
                g_full = gradient(xi);
                continue;
            }
        }

        double t = 1.0;
        Vector xi_try = xi;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            xi_try = xi;
            for (int k = 0; k < m; ++k) xi_try(free_idx[static_cast<size_t>(k)]) += t * d(k);
            if (objective(xi_try) <= phi0 + 1e-4 * t * slope) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) break;  // at the numerical floor, nothing certifiable left
        xi = xi_try;
        g_full = gradient(xi);
    }

    double g_free_norm = 0.0;
    for (int k = 0; k < m; ++k)
        g_free_norm = std::max(g_free_norm, std::abs(g_full(free_idx[static_cast<size_t>(k)])));
    if (g_free_norm > 1e-8)
        throw Error(ErrorKind::NumericalFailure,
                    "Legendre solve stalled at gradient norm " + format_g17(g_free_norm));

    LegendreSolve out;
    out.value = std::max(0.0, -objective(xi));
    out.maximizer_xi = xi;
    out.iterations = iter;
    out.kkt_residual = g_full.lpNorm<Eigen::Infinity>();
    return out;
}

// Slope contribution of one intensity matrix in closed form. Boundary
// states are safe for the quadratic and cosh kinds; the entropic slope
// diverges when exactly one endpoint density vanishes (sentinel).
double slope_closed(Kind kind, const Matrix& kappa, const Vector& w, const Vector& c) {
    const int n = static_cast<int>(c.size());
    std::vector<double> terms;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
            double k = kappa(i, j);
            if (k <= 0.0) continue;
            double rho_i = c(i) / w(i), rho_j = c(j) / w(j);
            double root_w = std::sqrt(w(i) * w(j));
            switch (kind) {
                case Kind::Quadratic: {
                    double d = rho_i - rho_j;
                    terms.push_back(0.5 * k * root_w * d * d);
                    break;
                }
                case Kind::EntropicQuadratic: {
                    if (rho_i == 0.0 && rho_j == 0.0) break;
                    if (rho_i == 0.0 || rho_j == 0.0) return kPlusInfinity;
                    terms.push_back(0.5 * k * root_w * (rho_i - rho_j) *
                                    (std::log(rho_i) - std::log(rho_j)));
                    break;
                }
                case Kind::Cosh: {
                    double d = std::sqrt(rho_i) - std::sqrt(rho_j);
                    terms.push_back(2.0 * k * root_w * d * d);
                    break;
                }
            }
        }
    return pairwise_sum(terms);
}

// The family realized at one eps: equilibrium measure plus the per-part
// intensity matrices taken with respect to it. kappa_fast is unscaled; the
// family divides by eps where it enters.
struct FamilyMember {
    Kind kind;
    EquilibriumMeasure w;
    Matrix kappa_slow;
    Matrix kappa_fast;
};

Matrix part_kappa(const Matrix& part, const EquilibriumMeasure& w, const char* which) {
    Matrix k = kappa_representation(part, w).kappa;
    double scale = std::max(1.0, k.cwiseAbs().maxCoeff());
    double asym = (k - Matrix(k.transpose())).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * scale)
        throw Error(ErrorKind::RequiresDetailedBalance,
                    std::string(which) +
                        " part is not balanced by the family equilibrium (asymmetry " +
                        format_g17(asym) + ")");
    Matrix sym = 0.5 * (k + Matrix(k.transpose()));
    sym.diagonal().setZero();
    return sym;
}

FamilyMember realize(const EpsFamily& family, double eps) {
    if (eps < 0.0) throw Error(ErrorKind::InvalidParameter, "eps must be nonnegative");
    if (eps == 0.0) {
        EquilibriumMeasure w0 = limit_equilibrium(family.net);
        return {family.kind, w0, part_kappa(family.net.slow, w0, "slow"),
                part_kappa(family.net.fast, w0, "fast")};
    }
    Matrix A = assemble_generator(family.net, eps);
    EquilibriumMeasure w = stationary_measure(A);
    return {family.kind, w, part_kappa(family.net.slow, w, "slow"),
            part_kappa(family.net.fast, w, "fast")};
}

void require_curve(const Trajectory& traj) {
    if (traj.times.size() < 2)
        throw Error(ErrorKind::InvalidCurve, "trajectory needs at least two time nodes");
    if (!traj.has_velocities() || traj.states.size() != traj.times.size() ||
        traj.velocities.size() != traj.times.size())
        throw Error(ErrorKind::InvalidCurve,
                    "trajectory must carry states and velocities on every node");
}

// Weighted quadrature with sentinel poisoning: any sentinel node value
// makes the whole part the sentinel.
double quadrature(const std::vector<double>& values, const std::vector<double>& weights) {
    std::vector<double> terms(values.size());
    for (size_t k = 0; k < values.size(); ++k) {
        if (is_infinite_sentinel(values[k])) return kPlusInfinity;
        terms[k] = weights[k] * values[k];
    }
    return pairwise_sum(terms);
}

// Coarse intensity matrix inherited from a slow structure: the same
// weighted class sums as coarse_cosh_intensities, but taken directly from
// the structure's kappa.
Matrix inherited_coarse_kappa(const CoarseGraining& cg, const GradientStructure& gs_slow) {
    const int I = static_cast<int>(cg.w0.w.size());
    const int J = static_cast<int>(cg.what.w.size());
    std::vector<int> phi(static_cast<size_t>(I), -1);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i)
            if (cg.M(j, i) == 1) phi[static_cast<size_t>(i)] = j;
    Matrix khat = Matrix::Zero(J, J);
    for (int i = 0; i < I; ++i)
        for (int n = i + 1; n < I; ++n) {
            int j1 = phi[static_cast<size_t>(i)], j2 = phi[static_cast<size_t>(n)];
            if (j1 == j2 || gs_slow.kappa(i, n) == 0.0) continue;
            double weight = std::sqrt(cg.w0.w(i) * cg.w0.w(n) /
                                      (cg.what.w(j1) * cg.what.w(j2)));
            khat(j1, j2) += gs_slow.kappa(i, n) * weight;
            khat(j2, j1) += gs_slow.kappa(i, n) * weight;
        }
    return khat;
}

std::vector<int> class_of_state(const CoarseGraining& cg) {
    const int I = static_cast<int>(cg.w0.w.size());
    const int J = static_cast<int>(cg.what.w.size());
    std::vector<int> phi(static_cast<size_t>(I), -1);
    for (int j = 0; j < J; ++j)
        for (int i = 0; i < I; ++i)
            if (cg.M(j, i) == 1) phi[static_cast<size_t>(i)] = j;
    return phi;
}

}  // namespace

EpsFamily make_family(const ReactionNetwork& net, Kind kind) { return EpsFamily{kind, net}; }

std::pair<double, double> slope_term(const EpsFamily& family, const Vector& c, double eps) {
    FamilyMember m = realize(family, eps);
    double slow = slope_closed(m.kind, m.kappa_slow, m.w.w, c);
    double fast_raw = slope_closed(m.kind, m.kappa_fast, m.w.w, c);
    double fast;
    if (eps == 0.0)
        fast = (is_infinite_sentinel(fast_raw) || fast_raw > 1e-14) ? kPlusInfinity : 0.0;
    else
        fast = is_infinite_sentinel(fast_raw) ? kPlusInfinity : fast_raw / eps;
    return {slow, fast};
}

LegendreSolve legendre_primal(const GradientStructure& gs, const Vector& c, const Vector& v) {
    if (c.size() != v.size() || c.size() != gs.w.w.size())
        throw Error(ErrorKind::InvalidParameter, "state/velocity dimensions disagree");
    if (std::abs(v.sum()) > 1e-10 * (1.0 + v.lpNorm<1>()))
        throw Error(ErrorKind::InvalidVelocity,
                    "velocity components sum to " + format_g17(v.sum()) + ", not zero");
    Matrix a = coefficient_a(gs.kind, c, gs.w, gs.kappa);
    return newton_solve(a, gs.kind == Kind::Cosh, v, /*allow_components=*/false);
}

DissipationReport dissipation_functional(const EpsFamily& family, const Trajectory& traj,
                                         double eps) {
    require_curve(traj);
    FamilyMember m = realize(family, eps);
    auto weights = trapezoid_weights(traj.times);
    const size_t K = traj.times.size();

    if (eps == 0.0) {
        // Limit functional: the barrier first, then the effective velocity part.
        bool barrier = false;
        std::vector<double> slow_vals(K);
        for (size_t k = 0; k < K; ++k) {
            double fast_raw = slope_closed(m.kind, m.kappa_fast, m.w.w, traj.states[k]);
            if (is_infinite_sentinel(fast_raw) || fast_raw > 1e-14) barrier = true;
            slow_vals[k] = slope_closed(m.kind, m.kappa_slow, m.w.w, traj.states[k]);
        }
        if (barrier) {
            DissipationReport report;
            report.velocity_part = 0.0;
            report.slope_slow = quadrature(slow_vals, weights);
            report.slope_fast = kPlusInfinity;
            report.total = kPlusInfinity;
            report.edb_residual = kPlusInfinity;
            report.quadrature_points = static_cast<int>(K);
            return report;
        }
        CoarseGraining cg = build_operators(fast_classes(family.net), m.w);
        GradientStructure gs_slow(m.kind, m.w, m.kappa_slow);
        return limit_dissipation(cg, gs_slow, traj);
    }

    GradientStructure gs(m.kind, m.w, m.kappa_slow + m.kappa_fast / eps);
    std::vector<double> vel_vals(K), slow_vals(K), fast_vals(K);
    for (size_t k = 0; k < K; ++k) {
        vel_vals[k] = legendre_primal(gs, traj.states[k], traj.velocities[k]).value;
        slow_vals[k] = slope_closed(m.kind, m.kappa_slow, m.w.w, traj.states[k]);
        double fast_raw = slope_closed(m.kind, m.kappa_fast, m.w.w, traj.states[k]);
        fast_vals[k] = is_infinite_sentinel(fast_raw) ? kPlusInfinity : fast_raw / eps;
    }

    DissipationReport report;
    report.velocity_part = quadrature(vel_vals, weights);
    report.slope_slow = quadrature(slow_vals, weights);
    report.slope_fast = quadrature(fast_vals, weights);
    report.total = report.velocity_part + report.slope_slow + report.slope_fast;
    report.quadrature_points = static_cast<int>(K);
    if (is_infinite_sentinel(report.total)) {
        report.edb_residual = kPlusInfinity;
    } else {
        double e0 = energy_value(gs, traj.states.front());
        double eT = energy_value(gs, traj.states.back());
        report.edb_residual = std::abs(eT + report.total - e0);
    }
    return report;
}

double effective_dual(const CoarseGraining& cg, const GradientStructure& gs_slow,
                      const Vector& c, const Vector& xi) {
    // xi in range(M^T) iff it agrees with the broadcast of its class
    // averages weighted by w0 (the transpose projection P^T).
    Vector avg = cg.N.transpose() * xi;
    Vector back = cg.M_real().transpose() * avg;
    if ((xi - back).lpNorm<Eigen::Infinity>() > 1e-10) return kPlusInfinity;
    return dual_dissipation(gs_slow, c, xi).first;
}

double effective_primal(const CoarseGraining& cg, const GradientStructure& gs_slow,
                        const Vector& c, const Vector& v) {
    const int I = static_cast<int>(c.size());
    const int J = static_cast<int>(cg.what.w.size());
    if ((c - cg.apply_projection(c)).lpNorm<Eigen::Infinity>() > 1e-9)
        throw Error(ErrorKind::InvalidParameter,
                    "state must be fast-equilibrated (c = Pc) for the effective potential");
    if (std::abs(v.sum()) > 1e-10 * (1.0 + v.lpNorm<1>()))
        throw Error(ErrorKind::InvalidVelocity,
                    "velocity components sum to " + format_g17(v.sum()) + ", not zero");

    Matrix a_slow = coefficient_a(gs_slow.kind, c, gs_slow.w, gs_slow.kappa);
    const bool is_cosh = gs_slow.kind == Kind::Cosh;
    std::vector<int> phi = class_of_state(cg);

    // Dual side: potentials constant on classes reduce to a J-state problem
    // with class-summed coefficients.
    Matrix ahat = Matrix::Zero(J, J);
    for (int i = 0; i < I; ++i)
        for (int n = i + 1; n < I; ++n) {
            int j1 = phi[static_cast<size_t>(i)], j2 = phi[static_cast<size_t>(n)];
            if (j1 == j2 || a_slow(i, n) <= 0.0) continue;
            ahat(j1, j2) += a_slow(i, n);
            ahat(j2, j1) += a_slow(i, n);
        }
    Vector vhat = cg.M_real() * v;
    double dual;
    bool dual_infeasible = false;
    try {
        dual = newton_solve(ahat, is_cosh, vhat, /*allow_components=*/true).value;
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::UnboundedOrDegenerate) throw;
        dual = kPlusInfinity;
        dual_infeasible = true;
    }

    // Primal side: minimize R_S(c, v + B y) over the within-class difference
    // basis B, restricted to fluxes balanced on every component of the slow
    // positive-coefficient graph.
    auto comps = detail::connected_components(positive_adjacency(a_slow), I);
    auto balance = [&](Vector z) {
        for (const auto& comp : comps) {
            double s = 0.0;
            for (int i : comp) s += z(i);
            s /= static_cast<double>(comp.size());
            for (int i : comp) z(i) -= s;
        }
        return z;
    };
    auto component_residual = [&](const Vector& z) {
        double worst = 0.0;
        for (const auto& comp : comps) {
            double s = 0.0;
            for (int i : comp) s += z(i);
            worst = std::max(worst, std::abs(s));
        }
        return worst;
    };

    std::vector<Vector> basis;
    {
        std::vector<std::vector<int>> members(static_cast<size_t>(J));
        for (int i = 0; i < I; ++i) members[static_cast<size_t>(phi[static_cast<size_t>(i)])].push_back(i);
        for (const auto& cls : members)
            for (size_t k = 1; k < cls.size(); ++k) {
                Vector col = Vector::Zero(I);
                col(cls[0]) = -1.0;
                col(cls[k]) = 1.0;
                basis.push_back(col);
            }
    }
    Matrix B(I, static_cast<int>(basis.size()));
    for (size_t k = 0; k < basis.size(); ++k) B.col(static_cast<long>(k)) = basis[k];

    double vscale = 1.0 + v.lpNorm<1>();
    double primal = 0.0;
    bool primal_infeasible = false;
    auto inner_value = [&](const Vector& z, Vector* xi_out) {
        LegendreSolve solve = newton_solve(a_slow, is_cosh, z, /*allow_components=*/true);
        if (xi_out) *xi_out = solve.maximizer_xi;
        return solve.value;
    };

    if (B.cols() == 0) {
        // Trivial partition: the effective potential is R_S itself.
        if (component_residual(v) > 1e-9 * vscale)
            primal_infeasible = true;
        else
            primal = inner_value(balance(v), nullptr);
    } else {
        const auto n_comp = static_cast<int>(comps.size());
        Matrix C = Matrix::Zero(n_comp, I);
        for (int q = 0; q < n_comp; ++q)
            for (int i : comps[static_cast<size_t>(q)]) C(q, i) = 1.0;
        Matrix CB = C * B;
        Vector y0 = CB.completeOrthogonalDecomposition().solve(Vector(-C * v));
        Vector z0 = v + B * y0;
        if (component_residual(z0) > 1e-9 * vscale) {
            primal_infeasible = true;
        } else {
            z0 = balance(z0);
            Matrix Q = Eigen::FullPivLU<Matrix>(CB).kernel();
            if (CB.isZero(0.0)) Q = Matrix::Identity(B.cols(), B.cols());
            Matrix BQ = B * Q;
            if (Q.cols() == 0 || BQ.isZero(1e-14)) {
                primal = inner_value(z0, nullptr);
            } else {
                auto f_grad = [&](const Vector& u, Vector& grad) {
                    Vector z = balance(z0 + BQ * u);
                    Vector xi;
                    double value = inner_value(z, &xi);
                    grad = BQ.transpose() * xi;
                    return value;
                };
                BfgsOptions opts;
                opts.grad_tol = 1e-9;
                double f_final = 0.0;
                bfgs_minimize(f_grad, Vector::Zero(Q.cols()), opts, &f_final, nullptr);
                primal = std::max(0.0, f_final);
            }
        }
    }

    if (primal_infeasible && dual_infeasible) return kPlusInfinity;
    if (primal_infeasible != dual_infeasible)
        throw Error(ErrorKind::DualityGap,
                    "primal and dual feasibility disagree for the effective potential");
    if (std::abs(primal - dual) > 1e-8 * (1.0 + std::abs(primal)))
        throw Error(ErrorKind::DualityGap,
                    "effective potential primal " + format_g17(primal) + " and dual " +
                        format_g17(dual) + " disagree");
    return primal;
}

DissipationReport limit_dissipation(const CoarseGraining& cg, const GradientStructure& gs_slow,
                                    const Trajectory& traj) {
    require_curve(traj);
    const size_t K = traj.times.size();
    for (size_t k = 0; k < K; ++k)
        if ((traj.states[k] - cg.apply_projection(traj.states[k])).lpNorm<Eigen::Infinity>() >
            1e-9)
            throw Error(ErrorKind::InvalidCurve,
                        "curve leaves the projected simplex at node " + std::to_string(k));

    auto weights = trapezoid_weights(traj.times);
    std::vector<double> vel_vals(K), slope_vals(K);
    for (size_t k = 0; k < K; ++k) {
        vel_vals[k] = effective_primal(cg, gs_slow, traj.states[k], traj.velocities[k]);
        slope_vals[k] = slope_closed(gs_slow.kind, gs_slow.kappa, gs_slow.w.w, traj.states[k]);
    }

    DissipationReport report;
    report.velocity_part = quadrature(vel_vals, weights);
    report.slope_slow = quadrature(slope_vals, weights);
    report.slope_fast = 0.0;
    report.total = report.velocity_part + report.slope_slow;
    report.quadrature_points = static_cast<int>(K);
    if (is_infinite_sentinel(report.total)) {
        report.edb_residual = kPlusInfinity;
    } else {
        double e0 = energy_value(gs_slow, traj.states.front());
        double eT = energy_value(gs_slow, traj.states.back());
        report.edb_residual = std::abs(eT + report.total - e0);

        // Two-space consistency: the same dissipation evaluated on the
        // coarse image under the inherited J-state structure.
        Matrix khat = inherited_coarse_kappa(cg, gs_slow);
        GradientStructure coarse_gs(gs_slow.kind, cg.what, khat);
        Matrix Md = cg.M_real();
        std::vector<double> cvel(K), cslope(K);
        for (size_t k = 0; k < K; ++k) {
            Vector chat = Md * traj.states[k];
            Vector vhat = Md * traj.velocities[k];
            cvel[k] = legendre_primal(coarse_gs, chat, vhat).value;
            cslope[k] = slope_closed(coarse_gs.kind, khat, cg.what.w, chat);
        }
        double coarse_total = quadrature(cvel, weights) + quadrature(cslope, weights);
        if (std::abs(coarse_total - report.total) > 1e-8 * (1.0 + std::abs(report.total)))
            throw Error(ErrorKind::InternalConsistency,
                        "limit dissipation " + format_g17(report.total) +
                            " disagrees with its coarse evaluation " +
                            format_g17(coarse_total));
    }
    return report;
}

double rockafellar_bound(const EpsFamily& family, const Trajectory& traj, double eps,
                         const std::vector<std::vector<Vector>>& xi_candidates) {
    require_curve(traj);
    if (!(eps > 0.0))
        throw Error(ErrorKind::InvalidParameter, "the duality bound needs eps > 0");
    if (xi_candidates.empty())
        throw Error(ErrorKind::InvalidParameter, "no candidate potentials given");
    FamilyMember m = realize(family, eps);
    GradientStructure gs(m.kind, m.w, m.kappa_slow + m.kappa_fast / eps);
    auto weights = trapezoid_weights(traj.times);
    const size_t K = traj.times.size();

    double best = -kPlusInfinity;
    for (const auto& candidate : xi_candidates) {
        if (candidate.size() != K)
            throw Error(ErrorKind::InvalidParameter,
                        "candidate potential must give one vector per quadrature node");
        std::vector<double> terms(K);
        bool degenerate = false;
        for (size_t k = 0; k < K; ++k) {
            double dual = dual_dissipation(gs, traj.states[k], candidate[k]).first;
            if (is_infinite_sentinel(dual)) {
                degenerate = true;
                break;
            }
            terms[k] = weights[k] * (candidate[k].dot(traj.velocities[k]) - dual);
        }
        if (!degenerate) best = std::max(best, pairwise_sum(terms));
    }
    return best;
}

Trajectory recovery_sequence(const Trajectory& traj0, const ReactionNetwork& net, double eps) {
    if (!(eps > 0.0)) throw Error(ErrorKind::InvalidParameter, "recovery needs eps > 0");
    if (traj0.states.size() != traj0.times.size())
        throw Error(ErrorKind::InvalidParameter, "trajectory must carry one state per node");
    EquilibriumMeasure w0 = limit_equilibrium(net);
    EquilibriumMeasure weps = stationary_measure(assemble_generator(net, eps));
    Vector s = weps.w.cwiseQuotient(w0.w);

    Trajectory out;
    out.times = traj0.times;
    for (size_t k = 0; k < traj0.states.size(); ++k) {
        Vector u = s.cwiseProduct(traj0.states[k]);
        double z = u.sum();
        out.states.push_back(u / z);
        if (traj0.has_velocities()) {
            Vector su = s.cwiseProduct(traj0.velocities[k]);
            out.velocities.push_back(su / z - u * (su.sum() / (z * z)));
        }
    }
    return out;
}

Trajectory mollify_positivity(const Trajectory& traj, double delta, const Vector& w0) {
    if (!(delta > 0.0 && delta < 1.0))
        throw Error(ErrorKind::InvalidParameter, "delta must lie strictly between 0 and 1");
    if (traj.states.empty() || traj.states.front().size() != w0.size())
        throw Error(ErrorKind::InvalidParameter, "trajectory and measure dimensions disagree");

    Trajectory out;
    out.times = traj.times;
    for (const Vector& c : traj.states) out.states.push_back(delta * w0 + (1.0 - delta) * c);
    for (const Vector& vel : traj.velocities) out.velocities.push_back((1.0 - delta) * vel);
    return out;
}

}  // namespace fastslow
