#include "fastslow/numerics.hpp"

#include "fastslow/errors.hpp"

namespace fastslow {

const char* error_kind_name(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidParameter: return "invalid-parameter";
        case ErrorKind::InvalidMatrix: return "invalid-matrix";
        case ErrorKind::InvalidMeasure: return "invalid-measure";
        case ErrorKind::InvalidPartition: return "invalid-partition";
        case ErrorKind::InvalidInitialState: return "invalid-initial-state";
        case ErrorKind::InvalidVelocity: return "invalid-velocity";
        case ErrorKind::InvalidCurve: return "invalid-curve";
        case ErrorKind::NonUniqueEquilibrium: return "non-unique-equilibrium";
        case ErrorKind::NonUniqueLimit: return "non-unique-limit";
        case ErrorKind::RequiresDetailedBalance: return "requires-detailed-balance";
        case ErrorKind::BoundaryState: return "boundary-state";
        case ErrorKind::UnboundedOrDegenerate: return "unbounded-or-degenerate";
        case ErrorKind::DualityGap: return "duality-gap";
        case ErrorKind::InternalConsistency: return "internal-consistency";
        case ErrorKind::OutOfRange: return "out-of-range";
        case ErrorKind::ConfigError: return "config-error";
        case ErrorKind::NumericalFailure: return "numerical-failure";
    }
    return "unknown-error";
}

double pairwise_sum(const std::vector<double>& terms) {
    // Recursive halving with a small base case; the fixed association order
    // makes the result independent of evaluation environment.
    struct Impl {
        static double sum(const double* p, size_t n) {
            if (n <= 8) {
                double s = 0.0;
                for (size_t i = 0; i < n; ++i) s += p[i];
                return s;
            }
            size_t half = n / 2;
            return sum(p, half) + sum(p + half, n - half);
        }
    };
    return Impl::sum(terms.data(), terms.size());
}

std::string format_g17(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return std::string(buf);
}

std::vector<double> trapezoid_weights(const std::vector<double>& times) {
    size_t n = times.size();
    if (n < 2) throw Error(ErrorKind::InvalidParameter, "trapezoid rule needs at least 2 nodes");
    std::vector<double> wts(n, 0.0);
    for (size_t k = 0; k + 1 < n; ++k) {
        double h = times[k + 1] - times[k];
        if (h <= 0.0)
            throw Error(ErrorKind::InvalidParameter, "time grid must be strictly increasing");
        wts[k] += 0.5 * h;
        wts[k + 1] += 0.5 * h;
    }
    return wts;
}

Vector bfgs_minimize(const std::function<double(const Vector&, Vector&)>& f_grad,
                     const Vector& x0, const BfgsOptions& opts, double* f_out,
                     double* g_norm_out) {
    const int n = static_cast<int>(x0.size());
    Vector x = x0;
    Vector g(n);
    double f = f_grad(x, g);
    if (n == 0) {  // nothing to optimize over
        if (f_out) *f_out = f;
        if (g_norm_out) *g_norm_out = 0.0;
        return x;
    }
    Matrix Hinv = Matrix::Identity(n, n);  // inverse-Hessian approximation

    int iter = 0;
    for (; iter < opts.max_iters; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= opts.grad_tol) break;
        Vector d = -(Hinv * g);
        if (d.dot(g) >= 0.0) {  // safeguard: reset to steepest descent
            Hinv.setIdentity();
            d = -g;
        }
        // Armijo backtracking.  The sufficient-decrease test carries an
        // additive round-off allowance: near a minimizer the certifiable
        // decrease ~|g|^2 drops below the objective's floating-point noise,
        // and without the allowance the search would reject every step and
        // stall with |g| just above tolerance.
        double t = 1.0;
        double slope = g.dot(d);
        double noise = 1e-14 * (1.0 + std::abs(f));
        Vector x_new(n), g_new(n);
        double f_new = 0.0;
        bool ok = false;
        for (int ls = 0; ls < 60; ++ls) {
            x_new = x + t * d;
            f_new = f_grad(x_new, g_new);
            if (f_new <= f + 1e-4 * t * slope + noise) {
                ok = true;
                break;
            }
            t *= 0.5;
        }
        if (!ok) break;  // step underflow: gradient check below decides
        Vector s = x_new - x;
        Vector y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-14 * s.norm() * y.norm()) {
            // standard BFGS inverse update
            Matrix I = Matrix::Identity(n, n);
            Matrix V = I - (s * y.transpose()) / sy;
            Hinv = V * Hinv * V.transpose() + (s * s.transpose()) / sy;
        }
        x = x_new;
        f = f_new;
        g = g_new;
    }
    double gn = g.lpNorm<Eigen::Infinity>();
    if (gn > std::max(opts.grad_tol, 1e-9))
        throw Error(ErrorKind::NumericalFailure,
                    "BFGS did not reach gradient tolerance (|g| = " + format_g17(gn) + ")");
    if (f_out) *f_out = f;
    if (g_norm_out) *g_norm_out = gn;
    return x;
}

}  // namespace fastslow
