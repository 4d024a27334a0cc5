#include "shapespline/splines.hpp"

#include <algorithm>
#include <cmath>

namespace shapespline {

namespace {

void validate_grid(const std::vector<double>& v, const char* what) {
    if (v.size() < 2) throw std::invalid_argument(std::string(what) + ": need at least two points");
    if (v.front() != 0.0 || v.back() != 1.0)
        throw std::invalid_argument(std::string(what) + ": endpoints must be exactly 0 and 1");
    for (size_t i = 1; i < v.size(); ++i)
        if (!(v[i] > v[i - 1]))
            throw std::invalid_argument(std::string(what) + ": points must be strictly increasing");
}

constexpr double kMeshSlack = 1e-12;

} // namespace

KnotSequence::KnotSequence(std::vector<double> knots, double c_lower, double c_upper,
                           MeshPolicy policy)
    : knots_(std::move(knots)), c_lower_(c_lower), c_upper_(c_upper) {
    validate_grid(knots_, "knot sequence");
    if (!(c_lower_ > 0.0) || c_lower_ > 1.0)
        throw std::invalid_argument("knot sequence: c_lower must lie in (0, 1]");
    if (c_upper_ < 1.0)
        throw std::invalid_argument("knot sequence: c_upper must be >= 1");
    if (policy == MeshPolicy::Enforce && !in_mesh_class())
        throw std::invalid_argument("knot sequence: gaps violate [c_lower/K, c_upper/K]");
}

KnotSequence KnotSequence::uniform(int intervals, double c_lower, double c_upper) {
    if (intervals < 1) throw std::invalid_argument("knot sequence: need at least one interval");
    std::vector<double> k(static_cast<size_t>(intervals) + 1);
    for (int i = 0; i <= intervals; ++i) k[static_cast<size_t>(i)] = double(i) / intervals;
    return KnotSequence(std::move(k), c_lower, c_upper);
}

bool KnotSequence::in_mesh_class() const noexcept {
    const int K = intervals();
    const double lo = c_lower_ / K - kMeshSlack;
    const double hi = c_upper_ / K + kMeshSlack;
    for (int j = 1; j <= K; ++j) {
        const double gap = knots_[static_cast<size_t>(j)] - knots_[static_cast<size_t>(j - 1)];
        if (gap < lo || gap > hi) return false;
    }
    return true;
}

DesignPoints::DesignPoints(std::vector<double> points, double c_omega, MeshPolicy policy)
    : points_(std::move(points)), c_omega_(c_omega) {
    validate_grid(points_, "design points");
    if (c_omega_ < 1.0) throw std::invalid_argument("design points: c_omega must be >= 1");
    const int n = count() - 1;
    weights_.resize(n + 1);
    for (int i = 0; i < n; ++i) weights_(i) = points_[static_cast<size_t>(i + 1)] - points_[static_cast<size_t>(i)];
    weights_(n) = 0.0;  // x_{n+1} := 1 puts zero weight on the last point
    if (policy == MeshPolicy::Enforce && !in_mesh_class())
        throw std::invalid_argument("design points: a gap exceeds c_omega/n");
}

DesignPoints DesignPoints::uniform(int n, double c_omega) {
    if (n < 1) throw std::invalid_argument("design points: need n >= 1");
    std::vector<double> x(static_cast<size_t>(n) + 1);
    for (int i = 0; i <= n; ++i) x[static_cast<size_t>(i)] = double(i) / n;
    return DesignPoints(std::move(x), c_omega);
}

bool DesignPoints::in_mesh_class() const noexcept {
    const int n = count() - 1;
    const double hi = c_omega_ / n + kMeshSlack;
    for (int i = 1; i <= n; ++i)
        if (points_[static_cast<size_t>(i)] - points_[static_cast<size_t>(i - 1)] > hi) return false;
    return true;
}

Eigen::VectorXd eval_basis(SplineOrder p, const KnotSequence& knots, double x) {
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("basis evaluation point outside [0,1]");
    const int K = knots.intervals();
    const int m = p.value();

    // Order 1: indicator of the half-open interval containing x (the last
    // interval is closed, so x = 1 selects it).
    Eigen::VectorXd cur = Eigen::VectorXd::Zero(K);
    int cell;
    if (x == 1.0) {
        cell = K - 1;
    } else {
        const auto& raw = knots.raw();
        cell = static_cast<int>(std::upper_bound(raw.begin(), raw.end(), x) - raw.begin()) - 1;
    }
    cur(cell) = 1.0;

    for (int q = 2; q <= m; ++q) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(K + q - 1);
        for (int k = 1; k <= K + q - 1; ++k) {
            double acc = 0.0;
            const double d1 = knots.knot(k - 1) - knots.knot(k - q);
            if (k - 1 >= 1 && d1 > 0.0) acc += (x - knots.knot(k - q)) / d1 * cur(k - 2);
            const double d2 = knots.knot(k) - knots.knot(k - q + 1);
            if (k <= K + q - 2 && d2 > 0.0) acc += (knots.knot(k) - x) / d2 * cur(k - 1);
            next(k - 1) = acc;
        }
        cur.swap(next);
    }
    return cur;
}

Eigen::VectorXd eval_basis_derivative(SplineOrder p, const KnotSequence& knots, double x) {
    const int m = p.value();
    if (m < 2)
        throw std::invalid_argument("basis derivative needs order >= 2 (order 1 is piecewise constant)");
    const Eigen::VectorXd lower = eval_basis(SplineOrder(m - 1), knots, x);
    const int K = knots.intervals();
    Eigen::VectorXd out(K + m - 1);
    for (int k = 1; k <= K + m - 1; ++k) {
        double acc = 0.0;
        const double d1 = knots.knot(k - 1) - knots.knot(k - m);
        if (k - 1 >= 1 && d1 > 0.0) acc += (m - 1) / d1 * lower(k - 2);
        const double d2 = knots.knot(k) - knots.knot(k - m + 1);
        if (k <= K + m - 2 && d2 > 0.0) acc -= (m - 1) / d2 * lower(k - 1);
        out(k - 1) = acc;
    }
    return out;
}

double l1_norm(SplineOrder p, const KnotSequence& knots, int k) {
    const int K = knots.intervals();
    const int m = p.value();
    if (k < 1 || k > K + m - 1)
        throw std::invalid_argument("basis index outside 1..K+p-1");
    return (knots.knot(k) - knots.knot(k - m)) / m;
}

Eigen::VectorXd DesignSystem::weighted(const Eigen::VectorXd& y) const {
    if (y.size() != theta.size())
        throw std::invalid_argument("data vector length does not match the design");
    return knots.intervals() * (Xhat.transpose() * theta.cwiseProduct(y));
}

DesignSystem build_design_system(SplineOrder m, const KnotSequence& knots,
                                 const DesignPoints& design, const Eigen::VectorXd& y) {
    const int K = knots.intervals();
    const int T = K + m.value() - 1;
    const int rows = design.count();
    if (y.size() != rows)
        throw std::invalid_argument("data vector length does not match the design");

    Eigen::MatrixXd Xhat(rows, T);
    for (int i = 0; i < rows; ++i)
        Xhat.row(i) = eval_basis(m, knots, design.point(i)).transpose();

    const Eigen::VectorXd theta = design.weights();

    // Lambda = K * Xhat' Theta Xhat via a rank update of the scaled rows, so
    // the result is exactly symmetric and exactly banded (disjoint supports
    // contribute products with a zero factor).
    const Eigen::MatrixXd W = theta.cwiseSqrt().asDiagonal() * Xhat;
    Eigen::MatrixXd Lambda = Eigen::MatrixXd::Zero(T, T);
    Lambda.selfadjointView<Eigen::Lower>().rankUpdate(W.transpose(), double(K));
    Lambda = Lambda.selfadjointView<Eigen::Lower>();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Lambda, Eigen::EigenvaluesOnly);
    if (es.eigenvalues()(0) <= 1e-12 * Lambda.trace())
        throw ConditioningError(
            "normal matrix is numerically singular; use more design points per knot "
            "interval or fewer knots");

    Eigen::VectorXd ybar = K * (Xhat.transpose() * theta.cwiseProduct(y));
    return DesignSystem{m, knots, design, std::move(Xhat), theta, std::move(Lambda), std::move(ybar)};
}

} // namespace shapespline
