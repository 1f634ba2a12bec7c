#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fastslow {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Sentinel for values that are +infinity by convention (constraint
// violations, overflowing cosh arguments). Kept finite so CSV stays
// parseable and comparisons stay total-ordered; above any attainable
// finite value (the largest is 4*cosh(700) ~ 2e304 at the cosh_star
// overflow guard).
inline constexpr double kPlusInfinity = 1e306;

inline bool is_infinite_sentinel(double x) { return x >= kPlusInfinity; }

// Pairwise (cascade) summation: deterministic order, O(log n) error growth.
// Used for every quadrature accumulation so CLI output is bit-reproducible.
double pairwise_sum(const std::vector<double>& terms);

// Shortest round-trippable decimal representation at 17 significant digits.
std::string format_g17(double x);

// |a - b| <= tol * (1 + max(|a|, |b|))
inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

// Composite trapezoid weights for an arbitrary strictly increasing grid.
std::vector<double> trapezoid_weights(const std::vector<double>& times);

// Minimize a smooth convex function with BFGS + Armijo backtracking.
// Small dense problems only (dimension tens at most); gradient-based
// convergence test. Returns the minimizer; f_out/g_norm_out report the
// final value and gradient norm. Throws NumericalFailure if the gradient
// tolerance is not reached within max_iters.
struct BfgsOptions {
    double grad_tol = 1e-11;
    int max_iters = 500;
};

Vector bfgs_minimize(const std::function<double(const Vector&, Vector&)>& f_grad,
                     const Vector& x0, const BfgsOptions& opts, double* f_out = nullptr,
                     double* g_norm_out = nullptr);

}  // namespace fastslow
