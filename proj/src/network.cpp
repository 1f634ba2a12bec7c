#include "fastslow/network.hpp"

#include <deque>

#include "fastslow/errors.hpp"

namespace fastslow {

namespace {

// Zero out the diagonal, verify off-diagonal signs, and set each diagonal
// entry to minus its column's off-diagonal sum. Returns the largest
// |old - new| diagonal correction.
double normalize_generator_part(Matrix& A, const char* label) {
    const int n = static_cast<int>(A.rows());
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i == k) continue;
            if (A(i, k) < 0.0)
                throw Error(ErrorKind::InvalidMatrix,
                            std::string(label) + " part has negative off-diagonal entry at (" +
                                std::to_string(i) + "," + std::to_string(k) + ")");
            col += A(i, k);
        }
        worst = std::max(worst, std::abs(A(k, k) + col));
        A(k, k) = -col;
    }
    return worst;
}

bool is_generator(const Matrix& A, double tol) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n) return false;
    for (int k = 0; k < n; ++k) {
        double col = 0.0;
        for (int i = 0; i < n; ++i) {
            if (i != k && A(i, k) < -tol) return false;
            col += A(i, k);
        }
        if (std::abs(col) > tol * std::max(1.0, A.cwiseAbs().maxCoeff())) return false;
    }
    return true;
}

}  // namespace

ReactionNetwork::ReactionNetwork(int num_states_, Matrix slow_, Matrix fast_)
    : num_states(num_states_), slow(std::move(slow_)), fast(std::move(fast_)) {
    if (num_states <= 0)
        throw Error(ErrorKind::InvalidParameter, "num_states must be positive");
    if (slow.rows() != num_states || slow.cols() != num_states ||
        fast.rows() != num_states || fast.cols() != num_states)
        throw Error(ErrorKind::InvalidMatrix, "slow/fast matrices must be num_states square");
    double c1 = normalize_generator_part(slow, "slow");
    double c2 = normalize_generator_part(fast, "fast");
    diagonal_correction_ = std::max(c1, c2);
}

Matrix assemble_generator(const ReactionNetwork& net, double eps) {
    if (!(eps > 0.0))
        throw Error(ErrorKind::InvalidParameter,
                    "eps must be > 0, got " + format_g17(eps));
    return net.slow + (1.0 / eps) * net.fast;
}

EquilibriumMeasure stationary_measure(const Matrix& A) {
    const int n = static_cast<int>(A.rows());
    if (n == 0 || A.cols() != n)
        throw Error(ErrorKind::InvalidMatrix, "stationary_measure needs a square matrix");
    if (!is_generator(A, 1e-9))
        throw Error(ErrorKind::InvalidMatrix,
                    "input is not a generator (column sums or off-diagonal signs violated)");

    // Reducibility shows up as nullity >= 2 of A; detect it by a rank check
    // before trusting the least-squares solution.
    Eigen::ColPivHouseholderQR<Matrix> qr_a(A);
    qr_a.setThreshold(1e-10);
    if (qr_a.rank() < n - 1)
        throw Error(ErrorKind::NonUniqueEquilibrium,
                    "generator has multiple null directions (reducible reaction graph)");

    Matrix sys(n + 1, n);
    sys.topRows(n) = A;
    sys.bottomRows(1).setOnes();
    Vector rhs = Vector::Zero(n + 1);
    rhs(n) = 1.0;
    Vector w = sys.colPivHouseholderQr().solve(rhs);

    double scale = std::max(1.0, A.cwiseAbs().maxCoeff());
    double residual = (A * w).lpNorm<Eigen::Infinity>() / scale;
    if (residual > 1e-10)
        throw Error(ErrorKind::NumericalFailure,
                    "stationary solve residual " + format_g17(residual) + " exceeds 1e-10");
    for (int i = 0; i < n; ++i)
        if (!(w(i) > 0.0))
            throw Error(ErrorKind::NonUniqueEquilibrium,
                        "stationary weight of state " + std::to_string(i + 1) +
                            " is not positive (" + format_g17(w(i)) + ")");
    w /= w.sum();
    return EquilibriumMeasure{std::move(w)};
}

std::pair<bool, double> check_detailed_balance(const Matrix& A, const EquilibriumMeasure& w,
                                               double tol) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || w.w.size() != n)
        throw Error(ErrorKind::InvalidParameter, "check_detailed_balance: dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (!(w.w(i) > 0.0))
            throw Error(ErrorKind::InvalidParameter, "measure must be strictly positive");
    double residual = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (i != k)
                residual = std::max(residual, std::abs(A(i, k) * w.w(k) - A(k, i) * w.w(i)));
    return {residual <= tol, residual};
}

namespace detail {

std::vector<std::vector<int>> support_adjacency(const Matrix& B) {
    const int n = static_cast<int>(B.rows());
    std::vector<std::vector<int>> adj(n);
    for (int i = 0; i < n; ++i)
        for (int k = i + 1; k < n; ++k)
            if (B(i, k) > 0.0 || B(k, i) > 0.0) {
                adj[i].push_back(k);
                adj[k].push_back(i);
            }
    return adj;
}

std::vector<std::vector<int>> connected_components(const std::vector<std::vector<int>>& adjacency,
                                                   int n) {
    std::vector<int> seen(n, 0);
    std::vector<std::vector<int>> classes;
    for (int start = 0; start < n; ++start) {
        if (seen[start]) continue;
        std::vector<int> comp;
        std::deque<int> queue{start};
        seen[start] = 1;
        while (!queue.empty()) {
            int i = queue.front();
            queue.pop_front();
            comp.push_back(i);
            for (int k : adjacency[i])
                if (!seen[k]) {
                    seen[k] = 1;
                    queue.push_back(k);
                }
        }
        std::sort(comp.begin(), comp.end());
        classes.push_back(std::move(comp));
    }
    // BFS over increasing start indices already yields classes ordered by
    // smallest member; keep the sort explicit anyway for clarity.
    std::sort(classes.begin(), classes.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return classes;
}

}  // namespace detail

AssumptionReport check_assumptions(const ReactionNetwork& net,
                                   const std::vector<double>& eps_list) {
    if (eps_list.empty())
        throw Error(ErrorKind::InvalidParameter, "eps_list must be nonempty");
    AssumptionReport report;
    report.connected = true;
    report.reversible = true;
    double quotient = 1.0;
    bool quotient_ok = true;

    for (double eps : eps_list) {
        Matrix A = assemble_generator(net, eps);
        const int n = net.num_states;

        auto adj = detail::support_adjacency(A);
        if (detail::connected_components(adj, n).size() != 1) report.connected = false;

        for (int i = 0; i < n; ++i)
            for (int k = i + 1; k < n; ++k) {
                bool fwd = A(i, k) > 0.0, bwd = A(k, i) > 0.0;
                if (fwd != bwd) {
                    report.reversible = false;
                    quotient_ok = false;
                } else if (fwd && bwd) {
                    double q = A(i, k) / A(k, i);
                    quotient = std::max(quotient, std::max(q, 1.0 / q));
                }
            }

        try {
            EquilibriumMeasure w = stationary_measure(A);
            report.dbc_residual =
                std::max(report.dbc_residual, check_detailed_balance(A, w, 0.0).second);
        } catch (const Error&) {
            // No unique stationary measure at this eps: the connectivity /
            // reversibility flags above already explain why.
        }
    }
    if (quotient_ok && report.reversible) report.quotient_bound = quotient;

    // Positivity of the limiting measure, judged by Richardson extrapolation
    // of w^eps at three geometrically spaced eps values. Second-order
    // extrapolation because w^eps is a ratio of polynomials in eps.
    double e0 = std::min(1e-2, *std::min_element(eps_list.begin(), eps_list.end()));
    try {
        Vector we[3];
        for (int j = 0; j < 3; ++j)
            we[j] = stationary_measure(assemble_generator(net, e0 / (1 << j))).w;
        Vector r1a = 2.0 * we[1] - we[0];
        Vector r1b = 2.0 * we[2] - we[1];
        Vector r2 = (4.0 * r1b - r1a) / 3.0;
        report.limit_measure_positive = (r2.minCoeff() > 1e-6);
    } catch (const Error&) {
        report.limit_measure_positive = false;
    }
    return report;
}

KappaRepresentation kappa_representation(const Matrix& A, const EquilibriumMeasure& w) {
    const int n = static_cast<int>(A.rows());
    if (A.cols() != n || w.w.size() != n)
        throw Error(ErrorKind::InvalidParameter, "kappa_representation: dimension mismatch");
    for (int i = 0; i < n; ++i)
        if (!(w.w(i) > 0.0))
            throw Error(ErrorKind::InvalidMeasure,
                        "measure entry " + std::to_string(i + 1) + " must be positive");
    if (!is_generator(A, 1e-9))
        throw Error(ErrorKind::InvalidMatrix, "kappa_representation needs a generator matrix");

    KappaRepresentation rep;
    rep.kappa = Matrix::Zero(n, n);
    rep.b = Vector::Zero(n);
    for (int i = 0; i < n; ++i) {
        rep.b(i) = -A(i, i);
        for (int k = 0; k < n; ++k)
            if (i != k) rep.kappa(i, k) = A(i, k) * std::sqrt(w.w(k) / w.w(i));
    }
    return rep;
}

Matrix assemble_from_kappa(const Matrix& kappa, const EquilibriumMeasure& w) {
    const int n = static_cast<int>(kappa.rows());
    if (kappa.cols() != n || w.w.size() != n)
        throw Error(ErrorKind::InvalidParameter, "assemble_from_kappa: dimension mismatch");
    Matrix A = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            if (i != k) A(i, k) = kappa(i, k) * std::sqrt(w.w(i) / w.w(k));
    for (int k = 0; k < n; ++k) A(k, k) = -A.col(k).sum();  // diagonal still zero here
    return A;
}

EquilibriumMeasure limit_equilibrium(const ReactionNetwork& net) {
    const int n = net.num_states;
    auto classes = detail::connected_components(detail::support_adjacency(net.fast), n);
    const int J = static_cast<int>(classes.size());

    // Stacked exact system: fast-kernel rows, coarse-balance rows, and the
    // normalization row. Its solution is the limiting stationary measure.
    Matrix M = Matrix::Zero(J, n);
    for (int j = 0; j < J; ++j)
        for (int i : classes[static_cast<size_t>(j)]) M(j, i) = 1.0;
    Matrix sys(n + J + 1, n);
    sys.topRows(n) = net.fast;
    sys.middleRows(n, J) = M * net.slow;
    sys.bottomRows(1).setOnes();
    Vector rhs = Vector::Zero(n + J + 1);
    rhs(n + J) = 1.0;

    Eigen::ColPivHouseholderQR<Matrix> qr(sys);
    qr.setThreshold(1e-10);
    if (qr.rank() < n)
        throw Error(ErrorKind::NonUniqueLimit,
                    "limit system is rank-deficient beyond the expected one-dimensional kernel");
    Vector w0 = qr.solve(rhs);
    double residual = (sys * w0 - rhs).lpNorm<Eigen::Infinity>();
    if (residual > 1e-9)
        throw Error(ErrorKind::NonUniqueLimit,
                    "limit system inconsistent (residual " + format_g17(residual) + ")");
    for (int i = 0; i < n; ++i)
        if (!(w0(i) > 0.0))
            throw Error(ErrorKind::NonUniqueLimit,
                        "limit weight of state " + std::to_string(i + 1) + " is not positive");
    w0 /= w0.sum();

    // Cross-validation against the directly computed stationary measure at a
    // small eps; disagreement means the assumptions do not actually hold.
    EquilibriumMeasure w_small = stationary_measure(assemble_generator(net, 1e-6));
    double gap = (w_small.w - w0).lpNorm<Eigen::Infinity>();
    if (gap > 1e-4)
        throw Error(ErrorKind::InternalConsistency,
                    "limit measure differs from small-eps stationary measure by " +
                        format_g17(gap));
    return EquilibriumMeasure{std::move(w0)};
}

}  // namespace fastslow
