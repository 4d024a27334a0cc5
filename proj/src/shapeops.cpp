#include "shapespline/shapeops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "shapespline/quadrature.hpp"

namespace shapespline {

namespace {

// Column prefix sums of A with per-column input scaling:
//   out.col(c) = sum_{d <= c} g(d) * A.col(d).
// This is right-multiplication by diag(g) and then by the upper-triangular
// all-ones matrix.  Compensated accumulation keeps the rounding error
// independent of the column count, which the grid recursions need at grids
// in the 1e5 range (a plain running sum would eat most of the 1e-9
// cross-check budget in the worst case).
Eigen::MatrixXd scaled_column_prefix(const Eigen::MatrixXd& A, const Eigen::VectorXd& g) {
    Eigen::MatrixXd out(A.rows(), A.cols());
    Eigen::ArrayXd acc = Eigen::ArrayXd::Zero(A.rows());
    Eigen::ArrayXd comp = Eigen::ArrayXd::Zero(A.rows());
    for (Eigen::Index c = 0; c < A.cols(); ++c) {
        const Eigen::ArrayXd y = A.col(c).array() * g(c) - comp;
        const Eigen::ArrayXd t = acc + y;
        comp = (t - acc) - y;
        acc = t;
        out.col(c) = acc;
    }
    return out;
}

// Row-wise compensated prefix sums: out(r, c) = sum_{d <= c} A(r, d).
Eigen::MatrixXd row_prefix(const Eigen::MatrixXd& A) {
    Eigen::MatrixXd out(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
        double acc = 0.0, comp = 0.0;
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
            const double y = A(r, c) - comp;
            const double t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            out(r, c) = acc;
        }
    }
    return out;
}

// In-place left multiplication by the inverse of the upper-triangular
// all-ones matrix: bidiagonal, row i becomes row i minus row i+1.  The
// ascending order makes the update alias-safe.
void superdiagonal_difference(Eigen::MatrixXd& A) {
    for (Eigen::Index i = 0; i + 1 < A.rows(); ++i) A.row(i) -= A.row(i + 1);
}

// Diagonal of blkdiag(I_{m-p}, support_lengths(p)), the padded L1-norm
// scaling used by the order-raising recursions.
Eigen::VectorXd padded_support_lengths(int p, int m, const KnotSequence& knots) {
    const int T = knots.intervals() + m - 1;
    Eigen::VectorXd d(T);
    d.head(m - p).setOnes();
    d.tail(knots.intervals() + p - 1) = support_lengths(p, knots);
    return d;
}

void require_matching_intervals(const ActiveSet& alpha, const KnotSequence& knots) {
    if (alpha.intervals() != knots.intervals())
        throw std::invalid_argument("active set and knot sequence disagree on interval count");
}

} // namespace

ActiveSet::ActiveSet(SplineOrder m, int intervals, std::vector<int> active)
    : m_(m), intervals_(intervals), active_(std::move(active)) {
    if (intervals < 1) throw std::invalid_argument("interval count must be >= 1");
    std::sort(active_.begin(), active_.end());
    if (std::adjacent_find(active_.begin(), active_.end()) != active_.end())
        throw std::invalid_argument("active set has a repeated index");
    if (!active_.empty() && (active_.front() < 1 || active_.back() > intervals - 1))
        throw std::invalid_argument("active indices must lie in 1..K-1");
    inactive_.reserve(static_cast<size_t>(intervals - 1) - active_.size());
    auto it = active_.begin();
    for (int i = 1; i < intervals; ++i) {
        if (it != active_.end() && *it == i) {
            ++it;
        } else {
            inactive_.push_back(i);
        }
    }
}

ActiveSet ActiveSet::all(SplineOrder m, int intervals) {
    std::vector<int> a(static_cast<size_t>(std::max(0, intervals - 1)));
    std::iota(a.begin(), a.end(), 1);
    return {m, intervals, std::move(a)};
}

Eigen::MatrixXd first_difference(int rows) {
    if (rows < 0) throw std::invalid_argument("row count must be nonnegative");
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(rows, rows + 1);
    for (int i = 0; i < rows; ++i) {
        D(i, i) = -1.0;
        D(i, i + 1) = 1.0;
    }
    return D;
}

Eigen::VectorXd support_lengths(int p, const KnotSequence& knots) {
    if (p < 1) throw std::invalid_argument("support_lengths requires order >= 1");
    const int n = knots.intervals() + p - 1;
    Eigen::VectorXd d(n);
    for (int i = 1; i <= n; ++i) d(i - 1) = (knots.knot(i) - knots.knot(i - p)) / p;
    return d;
}

DifferenceOperator weighted_difference(SplineOrder m, const KnotSequence& knots) {
    const int K = knots.intervals();
    const int T = K + m.value() - 1;
    std::vector<Eigen::MatrixXd> stages;
    stages.push_back(Eigen::MatrixXd::Identity(T, T));
    for (int p = 1; p <= m.value(); ++p) {
        const int rows = K + m.value() - 1 - p;
        Eigen::MatrixXd stage = first_difference(rows) * stages.back();
        if (m.value() - p >= 1)
            stage.array().colwise() /= support_lengths(m.value() - p, knots).array();
        stages.push_back(std::move(stage));
    }
    return {m, knots, std::move(stages)};
}

bool is_shape_feasible(const DifferenceOperator& op, const Eigen::VectorXd& b, double tol) {
    if (b.size() != op.stages.front().cols())
        throw std::invalid_argument("coefficient vector has wrong length");
    if (op.full().rows() == 0) return true;  // single interval: no constraints
    return (op.full() * b).minCoeff() >= -tol;
}

bool is_shape_feasible(SplineOrder m, const KnotSequence& knots, const Eigen::VectorXd& b,
                       double tol) {
    return is_shape_feasible(weighted_difference(m, knots), b, tol);
}

Eigen::VectorXd derivative_coeffs(const DifferenceOperator& op, const Eigen::VectorXd& b, int j) {
    if (j < 0 || j > op.m.value()) throw std::invalid_argument("derivative order out of range");
    if (b.size() != op.stages.front().cols())
        throw std::invalid_argument("coefficient vector has wrong length");
    return op.stages[static_cast<size_t>(j)] * b;
}

TauKnots tau_knots(const ActiveSet& alpha, const KnotSequence& knots) {
    require_matching_intervals(alpha, knots);
    const int m = alpha.order().value();
    const auto& abar = alpha.inactive();
    const int r = static_cast<int>(abar.size());
    std::vector<double> vals;
    vals.reserve(static_cast<size_t>(r + 2 * m));
    for (int k = 1 - m; k <= r + m; ++k) {
        if (k <= 0)
            vals.push_back(0.0);
        else if (k <= r)
            vals.push_back(knots.knot(abar[static_cast<size_t>(k - 1)]));
        else
            vals.push_back(1.0);
    }
    return {std::move(vals), m};
}

KnotSequence face_knots(const ActiveSet& alpha, const KnotSequence& knots) {
    require_matching_intervals(alpha, knots);
    std::vector<double> v;
    v.reserve(alpha.inactive().size() + 2);
    v.push_back(0.0);
    for (int i : alpha.inactive()) v.push_back(knots.knot(i));
    v.push_back(1.0);
    return {std::move(v), knots.c_lower(), knots.c_upper(), MeshPolicy::Relaxed};
}

FaceBasis face_basis(const ActiveSet& alpha, const KnotSequence& knots) {
    require_matching_intervals(alpha, knots);
    const int m = alpha.order().value();
    const int K = knots.intervals();
    const int T = K + m - 1;
    const auto& abar = alpha.inactive();
    const int r = static_cast<int>(abar.size());
    const int q = r + m;
    const TauKnots tau = tau_knots(alpha, knots);

    // Order 1: identity block for the collapsed boundary functions, then
    // runs of ones merging the knot cells between surviving interior knots.
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(q, T);
    F.topLeftCorner(m - 1, m - 1).setIdentity();
    std::vector<int> edges;
    edges.reserve(static_cast<size_t>(r + 2));
    edges.push_back(0);
    edges.insert(edges.end(), abar.begin(), abar.end());
    edges.push_back(K);
    for (int row = 0; row <= r; ++row)
        F.block(m - 1 + row, m - 1 + edges[static_cast<size_t>(row)], 1,
                edges[static_cast<size_t>(row + 1)] - edges[static_cast<size_t>(row)])
            .setOnes();

    std::vector<Eigen::VectorXd> inv_l1;
    inv_l1.reserve(static_cast<size_t>(m));
    for (int p = 1; p <= m; ++p) {
        Eigen::VectorXd xi(q);
        xi.head(m - p).setOnes();
        for (int k = 1; k <= r + p; ++k) xi(m - p + k - 1) = p / (tau.at(k) - tau.at(k - p));
        inv_l1.push_back(std::move(xi));
    }

    std::vector<Eigen::MatrixXd> stages;
    stages.push_back(std::move(F));
    for (int p = 2; p <= m; ++p) {
        Eigen::MatrixXd next =
            scaled_column_prefix(stages.back(), padded_support_lengths(p - 1, m, knots));
        next.array().colwise() *= inv_l1[static_cast<size_t>(p - 2)].array();
        superdiagonal_difference(next);
        stages.push_back(std::move(next));
    }

    Eigen::MatrixXd factor =
        stages.back().unaryExpr([](double v) { return std::abs(v) < 1e-13 ? 0.0 : v; });
    return {alpha, std::move(factor), std::move(stages), std::move(inv_l1)};
}

GridSchedule property_h_grid(SplineOrder m, double c_lower, int intervals, int factor) {
    if (intervals < 1) throw std::invalid_argument("interval count must be >= 1");
    if (!(c_lower > 0.0 && c_lower <= 1.0))
        throw std::invalid_argument("c_lower must lie in (0, 1]");
    if (factor < 1) throw std::invalid_argument("grid factor must be >= 1");
    const double ratio = static_cast<double>(m.value()) * intervals / c_lower;
    // Nudge before ceil so that exact integer ratios computed with a one-ulp
    // excess do not round up to the next integer.
    const double up = std::ceil(ratio - 1e-9 * std::max(1.0, ratio));
    if (up > static_cast<double>(std::numeric_limits<int>::max()))
        throw std::overflow_error("grid resolution overflows the integer range");
    const int M = std::max(1, static_cast<int>(up));
    __int128 L = factor;
    for (int i = 0; i <= m.value(); ++i) {
        L *= M;
        if (L > static_cast<__int128>(std::numeric_limits<std::int64_t>::max()))
            throw std::overflow_error("grid size overflows the 64-bit range");
    }
    return {static_cast<std::int64_t>(L), M, factor};
}

namespace {

void require_fine_grid(const KnotSequence& knots, std::int64_t grid) {
    if (grid < 1) throw std::invalid_argument("grid size must be >= 1");
    if (static_cast<double>(grid) * knots.c_lower() <= static_cast<double>(knots.intervals()))
        throw std::invalid_argument(
            "grid too coarse: need grid > intervals / c_lower so every knot interval "
            "contains a grid point");
}

// Fills indicator columns: column l-1 marks the half-open cell of (l-1)/L
// in the given sorted cell boundaries, writing rows at the given offset.
void fill_cell_indicators(Eigen::MatrixXd& out, const std::vector<double>& bounds,
                          std::int64_t grid, int row_offset, int col_offset) {
    const int cells = static_cast<int>(bounds.size()) - 1;
    int cell = 0;
    for (std::int64_t l = 1; l <= grid; ++l) {
        const double g = static_cast<double>(l - 1) / static_cast<double>(grid);
        while (cell + 1 < cells && g >= bounds[static_cast<size_t>(cell + 1)]) ++cell;
        out(row_offset + cell, col_offset + l - 1) = 1.0;
    }
}

} // namespace

GridBasis grid_basis(SplineOrder m, const KnotSequence& knots, std::int64_t grid) {
    require_fine_grid(knots, grid);
    const int K = knots.intervals();
    const int T = K + m.value() - 1;
    const std::int64_t wide = grid + m.value() - 1;

    Eigen::MatrixXd X = Eigen::MatrixXd::Zero(T, wide);
    X.topLeftCorner(m.value() - 1, m.value() - 1).setIdentity();
    fill_cell_indicators(X, knots.raw(), grid, m.value() - 1, m.value() - 1);

    std::vector<Eigen::MatrixXd> stages;
    stages.push_back(std::move(X));
    for (int p = 2; p <= m.value(); ++p) {
        Eigen::VectorXd gamma(wide);
        gamma.head(m.value() - p + 1).setOnes();
        gamma.tail(grid + p - 2).setConstant(1.0 / static_cast<double>(grid));
        Eigen::MatrixXd next = scaled_column_prefix(stages.back(), gamma);
        next.array().colwise() /= padded_support_lengths(p - 1, m.value(), knots).array();
        superdiagonal_difference(next);
        stages.push_back(std::move(next));
    }
    return {std::move(stages)};
}

FaceGridBasis face_grid_basis(const ActiveSet& alpha, const KnotSequence& knots,
                              std::int64_t grid) {
    require_matching_intervals(alpha, knots);
    require_fine_grid(knots, grid);
    const int m = alpha.order().value();
    const int r = static_cast<int>(alpha.inactive().size());
    const KnotSequence V = face_knots(alpha, knots);
    const TauKnots tau = tau_knots(alpha, knots);

    Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(r + 1, grid);
    fill_cell_indicators(Z, V.raw(), grid, 0, 0);

    std::vector<Eigen::MatrixXd> stages;
    stages.push_back(std::move(Z));
    for (int p = 2; p <= m; ++p) {
        const Eigen::Index rows = r + p;
        const Eigen::Index cols = grid + p - 1;
        const Eigen::MatrixXd pref = row_prefix(stages.back());
        // Row coefficients of the summation recursion: lo(j) weights the
        // prefix of the previous row, hi(j) the prefix of the same row.
        Eigen::VectorXd lo(rows + 1), hi(rows + 1);
        for (int j = 1; j <= rows; ++j) {
            lo(j) = j >= 2 ? (p - 1) / (static_cast<double>(grid) * (tau.at(j - 1) - tau.at(j - p)))
                           : 0.0;
            hi(j) = j < rows
                        ? (p - 1) / (static_cast<double>(grid) * (tau.at(j) - tau.at(j - p + 1)))
                        : 0.0;
        }
        Eigen::MatrixXd next(rows, cols);
        next.col(0).setZero();
        next(0, 0) = 1.0;
        for (Eigen::Index k = 2; k <= cols; ++k) {
            next(0, k - 1) = 1.0 - hi(1) * pref(0, k - 2);
            for (Eigen::Index j = 2; j < rows; ++j)
                next(j - 1, k - 1) = lo(j) * pref(j - 2, k - 2) - hi(j) * pref(j - 1, k - 2);
            if (rows >= 2) next(rows - 1, k - 1) = lo(rows) * pref(rows - 2, k - 2);
        }
        stages.push_back(std::move(next));
    }

    const FaceBasis face = face_basis(alpha, knots);
    const GridBasis full = grid_basis(alpha.order(), knots, grid);
    const Eigen::MatrixXd alt = face.factor * full.stages.back();
    const double gap = (alt - stages.back()).cwiseAbs().maxCoeff();
    if (!(gap <= 1e-9))
        throw InternalInconsistencyError(
            "face grid recursion and basis-change product disagree beyond 1e-9");
    Eigen::MatrixXd trunc = stages.back().leftCols(grid);
    return {std::move(stages), std::move(trunc), gap};
}

namespace {

// Accumulates scale * K-fold <B_i, B_j> into the lower triangle by
// per-interval Gauss-Legendre quadrature, exact for the degree-(2m-2)
// integrand.
Eigen::MatrixXd basis_gramian(SplineOrder m, const KnotSequence& knots, double scale) {
    const int T = knots.intervals() + m.value() - 1;
    const QuadratureRule rule = gauss_legendre(m.value());
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(T, T);
    for (int j = 1; j <= knots.intervals(); ++j) {
        const double a = knots.knot(j - 1);
        const double b = knots.knot(j);
        for (Eigen::Index t = 0; t < rule.nodes.size(); ++t) {
            const double x = a + 0.5 * (b - a) * (rule.nodes(t) + 1.0);
            const double w = scale * 0.5 * (b - a) * rule.weights(t);
            const Eigen::VectorXd v = eval_basis(m, knots, x);
            G.selfadjointView<Eigen::Lower>().rankUpdate(v, w);
        }
    }
    return G.selfadjointView<Eigen::Lower>();
}

} // namespace

GramianReport gramian(const ActiveSet& alpha, const KnotSequence& knots) {
    const KnotSequence V = face_knots(alpha, knots);
    const SplineOrder m = alpha.order();
    const int q = alpha.reduced_size();
    Eigen::MatrixXd G = basis_gramian(m, V, 1.0);
    for (int i = 0; i < q; ++i) G.row(i) /= l1_norm(m, V, i + 1);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) throw ConditioningError("face Gramian is numerically singular");
    const Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(q, q));
    const double inv_inf = inv.cwiseAbs().rowwise().sum().maxCoeff();
    return {alpha, std::move(G), inv_inf};
}

LimitGramians limit_gramians(SplineOrder m, const KnotSequence& knots, std::int64_t grid) {
    const int K = knots.intervals();
    const int T = K + m.value() - 1;
    Eigen::MatrixXd quad = basis_gramian(m, knots, static_cast<double>(K));
    const GridBasis gb = grid_basis(m, knots, grid);
    const Eigen::MatrixXd trunc = gb.stages.back().leftCols(grid);
    Eigen::MatrixXd riemann = Eigen::MatrixXd::Zero(T, T);
    riemann.selfadjointView<Eigen::Lower>().rankUpdate(
        trunc, static_cast<double>(K) / static_cast<double>(grid));
    riemann = riemann.selfadjointView<Eigen::Lower>();
    return {std::move(quad), std::move(riemann)};
}

} // namespace shapespline
