#include "fastslow/gradstruct.hpp"

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

// Boltzmann entropy density lambda(r) = r log r - r + 1, lambda(0) = 1.
double lambda_bz(double rho) {
    if (rho == 0.0) return 1.0;
    return rho * std::log(rho) - rho + 1.0;
}

void require_state(const Vector& c, const char* where) {
    for (int i = 0; i < c.size(); ++i)
        if (c(i) < 0.0)
            throw Error(ErrorKind::InvalidParameter,
                        std::string(where) + ": state entry " + std::to_string(i + 1) +
                            " is negative");
    if (std::abs(c.sum() - 1.0) > 1e-7)
        throw Error(ErrorKind::InvalidParameter,
                    std::string(where) + ": state does not sum to 1 (sum = " +
                        format_g17(c.sum()) + ")");
}

}  // namespace

const char* kind_name(Kind kind) {
    switch (kind) {
        case Kind::Quadratic: return "quadratic";
        case Kind::EntropicQuadratic: return "entropic-quadratic";
        case Kind::Cosh: return "cosh";
    }
    return "?";
}

GradientStructure::GradientStructure(Kind kind_, EquilibriumMeasure w_, Matrix kappa_)
    : kind(kind_), w(std::move(w_)), kappa(std::move(kappa_)) {
    const int n = static_cast<int>(kappa.rows());
    if (kappa.cols() != n || w.w.size() != n)
        throw Error(ErrorKind::InvalidParameter, "GradientStructure: dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (!(w.w(i) > 0.0))
            throw Error(ErrorKind::InvalidMeasure, "equilibrium must be strictly positive");
    double scale = std::max(1.0, kappa.cwiseAbs().maxCoeff());
    double asym = (kappa - kappa.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
        throw Error(ErrorKind::RequiresDetailedBalance,
                    "intensity matrix is not symmetric (asymmetry " + format_g17(asym) + ")");
    kappa = 0.5 * (kappa + Matrix(kappa.transpose()));
    kappa.diagonal().setZero();
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (kappa(i, k) < 0.0)
                throw Error(ErrorKind::InvalidParameter, "intensities must be nonnegative");
}

double cosh_star(double zeta) {
    if (std::abs(zeta) > 1400.0) return kPlusInfinity;
    return 4.0 * std::cosh(0.5 * zeta) - 4.0;
}

double cosh_star_prime(double zeta) {
    if (std::abs(zeta) > 1400.0) return (zeta > 0.0 ? kPlusInfinity : -kPlusInfinity);
    return 2.0 * std::sinh(0.5 * zeta);
}

double cosh_primal(double v) {
    double av = std::abs(v);
    if (av < 1e-3) {
        // series around 0; the closed form loses the v^2/2 leading term to
        // cancellation against the constant 4
        double v2 = v * v;
        return v2 * (0.5 - v2 / 96.0 + v2 * v2 / 1280.0);
    }
    double root = (av > 1.0) ? av * std::sqrt(1.0 + 4.0 / (av * av)) : std::sqrt(4.0 + av * av);
    return 2.0 * av * std::asinh(0.5 * av) - 2.0 * root + 4.0;
}

double logarithmic_mean(double a, double b) {
    if (a < 0.0 || b < 0.0)
        throw Error(ErrorKind::InvalidParameter, "logarithmic mean needs nonnegative arguments");
    if (a == 0.0 || b == 0.0) return 0.0;
    double u = std::log(b / a);
    if (std::abs(u) < 1e-5) return a * (1.0 + u / 2.0 + u * u / 12.0);
    return (b - a) / u;
}

std::pair<double, Vector> energy(const GradientStructure& gs, const Vector& c) {
    require_state(c, "energy");
    const int n = static_cast<int>(c.size());
    Vector grad(n);
    if (gs.kind == Kind::Quadratic) {
        double val = 0.0;
        for (int i = 0; i < n; ++i) {
            double rho = c(i) / gs.w.w(i);
            val += 0.5 * c(i) * rho;
            grad(i) = rho;
        }
        return {val, std::move(grad)};
    }
    double val = 0.0;
    for (int i = 0; i < n; ++i) {
        double rho = c(i) / gs.w.w(i);
        val += gs.w.w(i) * lambda_bz(rho);
        if (rho == 0.0)
            throw Error(ErrorKind::BoundaryState,
                        "entropy gradient undefined at zero component " + std::to_string(i + 1));
        grad(i) = std::log(rho);
    }
    return {val, std::move(grad)};
}

double energy_value(const GradientStructure& gs, const Vector& c) {
    require_state(c, "energy_value");
    double val = 0.0;
    for (int i = 0; i < c.size(); ++i) {
        double rho = c(i) / gs.w.w(i);
        val += (gs.kind == Kind::Quadratic) ? 0.5 * c(i) * rho : gs.w.w(i) * lambda_bz(rho);
    }
    return val;
}

std::pair<double, Vector> dual_dissipation(const GradientStructure& gs, const Vector& c,
                                           const Vector& xi) {
    require_state(c, "dual_dissipation");
    const int n = static_cast<int>(c.size());
    if (xi.size() != n)
        throw Error(ErrorKind::InvalidParameter, "dual_dissipation: xi dimension mismatch");
    double value = 0.0;
    Vector grad = Vector::Zero(n);
    bool saturated = false;
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k < n; ++k) {
            if (gs.kappa(i, k) == 0.0) continue;
            double a;
            switch (gs.kind) {
                case Kind::Quadratic:
                    a = gs.kappa(i, k) * std::sqrt(gs.w.w(i) * gs.w.w(k));
                    break;
                case Kind::EntropicQuadratic:
                    a = gs.kappa(i, k) * std::sqrt(gs.w.w(i) * gs.w.w(k)) *
                        logarithmic_mean(c(i) / gs.w.w(i), c(k) / gs.w.w(k));
                    break;
                case Kind::Cosh:
                default:
                    a = gs.kappa(i, k) * std::sqrt(c(i) * c(k));
                    break;
            }
            double d = xi(i) - xi(k);
            double psi, dpsi;
            if (gs.kind == Kind::Cosh) {
                psi = cosh_star(d);
                dpsi = cosh_star_prime(d);
            } else {
                psi = 0.5 * d * d;
                dpsi = d;
            }
            if (is_infinite_sentinel(psi) && a > 0.0) saturated = true;
            value += a * psi;
            grad(i) += a * dpsi;
            grad(k) -= a * dpsi;
        }
    }
    if (saturated) value = kPlusInfinity;
    return {value, std::move(grad)};
}

Matrix coefficient_a(Kind kind, const Vector& c, const EquilibriumMeasure& w,
                     const Matrix& kappa) {
    require_state(c, "coefficient_a");
    const int n = static_cast<int>(c.size());
    if (w.w.size() != n || kappa.rows() != n || kappa.cols() != n)
        throw Error(ErrorKind::InvalidParameter, "coefficient_a: dimension mismatch");
    Matrix a = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        for (int k = i + 1; k < n; ++k) {
            if (kappa(i, k) == 0.0) continue;
            double rho_i = c(i) / w.w(i), rho_k = c(k) / w.w(k);
            double root_w = std::sqrt(w.w(i) * w.w(k));
            double closed;
            switch (kind) {
                case Kind::Quadratic: closed = kappa(i, k) * root_w; break;
                case Kind::EntropicQuadratic:
                    closed = kappa(i, k) * root_w * logarithmic_mean(rho_i, rho_k);
                    break;
                case Kind::Cosh:
                default: closed = kappa(i, k) * std::sqrt(c(i) * c(k)); break;
            }

            // General chain-rule formula, skipped on the simplex boundary
            // where the closed forms carry the continuous extension.
            if (rho_i > 1e-12 && rho_k > 1e-12) {
                double dphi;  // Phi'(rho_i) - Phi'(rho_k)
                switch (kind) {
                    case Kind::Quadratic: dphi = rho_i - rho_k; break;
                    default: dphi = std::log(rho_i) - std::log(rho_k); break;
                }
                double general;
                if (std::abs(dphi) < 1e-7) {
                    // removable singularity: a = kappa root_w / (Psi''(0) Phi''(rho));
                    // Psi''(0) = 1 for both potentials
                    double rho_bar = 0.5 * (rho_i + rho_k);
                    general =
                        (kind == Kind::Quadratic) ? kappa(i, k) * root_w
                                                  : kappa(i, k) * root_w * rho_bar;
                } else {
                    double dpsi = (kind == Kind::Cosh) ? cosh_star_prime(dphi) : dphi;
                    general = kappa(i, k) * root_w * (rho_i - rho_k) / dpsi;
                }
                if (std::abs(general - closed) > 1e-10 * (1.0 + std::abs(closed)))
                    throw Error(ErrorKind::InternalConsistency,
                                "coefficient formula mismatch on edge (" + std::to_string(i + 1) +
                                    "," + std::to_string(k + 1) + "): closed " +
                                    format_g17(closed) + " vs general " + format_g17(general));
            }
            a(i, k) = a(k, i) = closed;
        }
    }
    return a;
}

Vector vector_field(const GradientStructure& gs, const Vector& c) {
    auto [eval, egrad] = energy(gs, c);
    (void)eval;
    auto [rval, rgrad] = dual_dissipation(gs, c, Vector(-egrad));
    (void)rval;
    return rgrad;
}

EquilibriumMeasure tilt_measure(const EquilibriumMeasure& w, const Tilt& tilt) {
    const int n = static_cast<int>(w.w.size());
    if (tilt.eta.size() != n)
        throw Error(ErrorKind::InvalidParameter, "tilt_measure: dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (!std::isfinite(tilt.eta(i)))
            throw Error(ErrorKind::InvalidParameter, "tilt entries must be finite");
    // log-space shift for overflow safety: w^eta ~ exp(log w - eta)
    Vector s(n);
    for (int i = 0; i < n; ++i) s(i) = std::log(w.w(i)) - tilt.eta(i);
    double m = s.maxCoeff();
    Vector we(n);
    for (int i = 0; i < n; ++i) we(i) = std::exp(s(i) - m);
    we /= we.sum();
    return EquilibriumMeasure{std::move(we)};
}

Matrix tilt_generator(const Matrix& kappa, const EquilibriumMeasure& w, const Tilt& tilt) {
    EquilibriumMeasure we = tilt_measure(w, tilt);
    Matrix A = assemble_from_kappa(kappa, we);
    double residual = (A * we.w).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10)
        throw Error(ErrorKind::RequiresDetailedBalance,
                    "tilted generator does not annihilate the tilted measure (residual " +
                        format_g17(residual) + "); intensity matrix must be symmetric");
    return A;
}

double check_tilt_invariance(const GradientStructure& gs, const Tilt& tilt,
                             const std::vector<Vector>& sample_states) {
    EquilibriumMeasure we = tilt_measure(gs.w, tilt);
    Matrix Aeta = tilt_generator(gs.kappa, gs.w, tilt);
    double worst = 0.0;
    for (const Vector& c : sample_states) {
        for (int i = 0; i < c.size(); ++i)
            if (!(c(i) > 0.0))
                throw Error(ErrorKind::BoundaryState,
                            "tilt-invariance samples must be strictly positive");
        // Tilted energy gradient per kind; the dissipation potential keeps
        // its untilted coefficients (that is the point of the comparison).
        Vector xi(c.size());
        for (int i = 0; i < c.size(); ++i) {
            double rho_t = c(i) / we.w(i);
            xi(i) = (gs.kind == Kind::Quadratic) ? -rho_t : -std::log(rho_t);
        }
        auto [rv, field] = dual_dissipation(gs, c, xi);
        (void)rv;
        worst = std::max(worst, (Aeta * c - field).lpNorm<Eigen::Infinity>());
    }
    return worst;
}

Matrix coarse_cosh_intensities(const ReactionNetwork& net, const CoarseGraining& cg) {
    const int J = static_cast<int>(cg.M.rows());
    Matrix kappa_slow = kappa_representation(net.slow, cg.w0).kappa;
    Matrix kappa_hat = Matrix::Zero(J, J);
    for (int j1 = 0; j1 < J; ++j1)
        for (int j2 = j1 + 1; j2 < J; ++j2) {
            double sum = 0.0;
            for (int i1 = 0; i1 < net.num_states; ++i1) {
                if (cg.M(j1, i1) == 0) continue;
                for (int i2 = 0; i2 < net.num_states; ++i2)
                    if (cg.M(j2, i2) != 0)
                        sum += kappa_slow(i1, i2) *
                               std::sqrt(cg.w0.w(i1) * cg.w0.w(i2) /
                                         (cg.what.w(j1) * cg.what.w(j2)));
            }
            kappa_hat(j1, j2) = kappa_hat(j2, j1) = sum;
        }

    // Consistency: the coarse dual potential built from kappa_hat must agree
    // with the fine slow potential evaluated on reconstructed states and
    // lifted forces. Deterministic spot checks.
    GradientStructure fine(Kind::Cosh, cg.w0, kappa_slow);
    GradientStructure coarse(Kind::Cosh, cg.what, kappa_hat);
    Matrix Mt = cg.M_real().transpose();
    for (int trial = 0; trial < 4; ++trial) {
        Vector chat(J), xihat(J);
        for (int j = 0; j < J; ++j) {
            chat(j) = 1.0 + 0.37 * std::sin(1.7 * (trial + 1) * (j + 1));
            xihat(j) = 0.8 * std::cos(2.3 * (trial + 1) * (j + 1));
        }
        chat /= chat.sum();
        double coarse_val = dual_dissipation(coarse, chat, xihat).first;
        double fine_val = dual_dissipation(fine, Vector(cg.N * chat), Vector(Mt * xihat)).first;
        if (std::abs(coarse_val - fine_val) > 1e-10 * (1.0 + std::abs(fine_val)))
            throw Error(ErrorKind::InternalConsistency,
                        "coarse intensities disagree with lifted dual potential (" +
                            format_g17(coarse_val) + " vs " + format_g17(fine_val) + ")");
    }
    return kappa_hat;
}

}  // namespace fastslow
