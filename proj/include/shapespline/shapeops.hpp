#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "shapespline/splines.hpp"

// Constraint and analysis matrices for shape-constrained spline fitting:
// knot-weighted difference operators, the null-space factorization of an
// active constraint set, grid surrogates of the basis, and Gramians.

namespace shapespline {

// A set of active shape constraints: indices from {1,...,K-1} whose
// weighted m-th differences are pinned to zero.  The complement (the
// inactive indices i_1 < ... < i_r) determines which interior knots
// survive into the coarser face basis, which has q = r + m functions.
class ActiveSet {
public:
    ActiveSet(SplineOrder m, int intervals, std::vector<int> active);

    static ActiveSet none(SplineOrder m, int intervals) { return {m, intervals, {}}; }
    static ActiveSet all(SplineOrder m, int intervals);

    const std::vector<int>& active() const noexcept { return active_; }
    const std::vector<int>& inactive() const noexcept { return inactive_; }
    SplineOrder order() const noexcept { return m_; }
    int intervals() const noexcept { return intervals_; }
    int reduced_size() const noexcept { return static_cast<int>(inactive_.size()) + m_.value(); }

private:
    SplineOrder m_;
    int intervals_;
    std::vector<int> active_;
    std::vector<int> inactive_;
};

// First-difference matrix with the given number of rows: row i is
// (..., -1, +1, ...) starting in column i.
Eigen::MatrixXd first_difference(int rows);

// L1 norms of the order-p basis functions, (kappa_i - kappa_{i-p})/p for
// i = 1..K+p-1; these are the diagonal weights of the difference stages.
// Requires p >= 1 (p = 0 would be all ones).
Eigen::VectorXd support_lengths(int p, const KnotSequence& knots);

// Stages of the knot-weighted difference operator: stages[0] is the
// identity on the K+m-1 coefficients and
//   stages[p] = diag(support_lengths(m-p))^-1 * first_difference * stages[p-1],
// so stages[j] maps spline coefficients of order m to the coefficients of
// the j-th derivative in the order m-j basis, and stages[m] * b >= 0 is
// exactly the shape constraint (nondecreasing (m-1)-th derivative).
struct DifferenceOperator {
    SplineOrder m;
    KnotSequence knots;
    std::vector<Eigen::MatrixXd> stages;  // stages[p]: (K+m-1-p) x (K+m-1)

    const Eigen::MatrixXd& full() const noexcept { return stages.back(); }
};

DifferenceOperator weighted_difference(SplineOrder m, const KnotSequence& knots);

// Componentwise check of the shape constraint with an absolute tolerance.
bool is_shape_feasible(const DifferenceOperator& op, const Eigen::VectorXd& b, double tol = 1e-10);
bool is_shape_feasible(SplineOrder m, const KnotSequence& knots, const Eigen::VectorXd& b,
                       double tol = 1e-10);

// Coefficients of the j-th derivative (0 <= j <= m) in the order m-j basis.
Eigen::VectorXd derivative_coeffs(const DifferenceOperator& op, const Eigen::VectorXd& b, int j);

// Knots of the coarser basis kept by an active set, with collapsed
// boundary extension: tau(k) = 0 for k <= 0, the k-th surviving interior
// knot for 1 <= k <= r, and 1 past r.  Valid for k = 1-m .. q.
struct TauKnots {
    std::vector<double> values;  // tau(1-m) .. tau(q)
    int m;

    double at(int k) const { return values.at(static_cast<size_t>(k + m - 1)); }
};

TauKnots tau_knots(const ActiveSet& alpha, const KnotSequence& knots);

// The knot sequence {0, surviving interior knots, 1} of the face basis.
// Deliberately exempt from mesh-class validation: collapsing knots can
// create arbitrarily long intervals.
KnotSequence face_knots(const ActiveSet& alpha, const KnotSequence& knots);

// Null-space factorization of an active set.  The q x (K+m-1) matrix
// `factor` satisfies, simultaneously:
//   * its rows span { b : (stages[m] b)_i = 0 for all active i };
//   * row ell rewrites the basis: sum_j factor(ell,j) B_{m,j} = B_{m,ell}
//     on the face_knots sequence;
// so factor is entrywise nonnegative with unit column sums.  Entries below
// 1e-13 in magnitude are snapped to exact zeros.  `inv_l1[p-1]` holds the
// reciprocal L1 norms of the order-p face basis padded with m-p leading
// ones (the diagonal scaling used by the order-raising recursion), and
// `stages` keeps every intermediate order for diagnostics.
struct FaceBasis {
    ActiveSet alpha;
    Eigen::MatrixXd factor;
    std::vector<Eigen::MatrixXd> stages;   // stages[p-1]: the order-p factor, p = 1..m
    std::vector<Eigen::VectorXd> inv_l1;   // inv_l1[p-1]: length q, p = 1..m
};

FaceBasis face_basis(const ActiveSet& alpha, const KnotSequence& knots);

// Discretization schedule L = J * M^(m+1) with resolution M = ceil(m*K/c_lower),
// the growth rate at which grid surrogates approximate the basis uniformly.
// Throws when L overflows the practical range.
struct GridSchedule {
    std::int64_t grid;  // L
    int resolution;     // M
    int factor;         // J
};

GridSchedule property_h_grid(SplineOrder m, double c_lower, int intervals, int factor);

// Grid surrogate of the full basis: stages[p-1] is the (K+m-1) x (L+m-1)
// matrix X_p of the summation recursion; column k of stages[m-1]
// approximates the order-m basis evaluated at (k-1)/L, for k <= L.
// Requires L > K/c_lower so every knot interval contains a grid point.
struct GridBasis {
    std::vector<Eigen::MatrixXd> stages;
};

GridBasis grid_basis(SplineOrder m, const KnotSequence& knots, std::int64_t grid);

// Grid surrogate of the face basis.  stages[p-1] is the (r+p) x (L+p-1)
// matrix Z_p; `trunc` is the first L columns of the last stage (the matrix
// whose scaled outer product approximates the face Gramian).  The last
// stage is computed twice, by the direct prefix-sum recursion and as
// factor * X_m, and the two must agree to 1e-9 (`cross_check` records the
// observed gap); disagreement throws InternalInconsistencyError.
struct FaceGridBasis {
    std::vector<Eigen::MatrixXd> stages;
    Eigen::MatrixXd trunc;
    double cross_check;
};

FaceGridBasis face_grid_basis(const ActiveSet& alpha, const KnotSequence& knots, std::int64_t grid);

// L1-normalized Gramian of the face basis: G(i,j) = <B_i, B_j> / ||B_i||_L1
// on the face knots, by per-interval Gauss-Legendre quadrature that is
// exact for the piecewise-polynomial integrand.  inv_inf_norm solves
// against identity columns rather than forming an explicit inverse.
struct GramianReport {
    ActiveSet alpha;
    Eigen::MatrixXd gramian;
    double inv_inf_norm;
};

GramianReport gramian(const ActiveSet& alpha, const KnotSequence& knots);

// The two T x T limit Gramians of the full basis: `quadrature` is
// K * <B_i, B_j> computed exactly; `grid` is the Riemann surrogate
// (K/L) * X X' over the first L grid columns.
struct LimitGramians {
    Eigen::MatrixXd quadrature;
    Eigen::MatrixXd grid;
};

LimitGramians limit_gramians(SplineOrder m, const KnotSequence& knots, std::int64_t grid);

} // namespace shapespline
