#pragma once

#include <Eigen/Dense>

#include <vector>

#include "shapespline/errors.hpp"

// B-spline bases on [0,1] with clamped boundary knots, and the weighted
// least-squares design system built from them.
//
// Index convention, used throughout the library: formulas are written with
// 1-based mathematical indices (basis functions B_{p,k} carry k = 1..K+p-1,
// knots carry j with boundary clamping), and storage is 0-based, so the
// mathematical index k always lives at slot k-1.  KnotSequence::knot is the
// one place that accepts the mathematical knot index directly, including
// out-of-range values: j < 0 clamps to 0 and j > K clamps to 1, which is the
// usual "repeated boundary knots" representation of a clamped basis.

namespace shapespline {

// Spline order p: piecewise polynomial degree p-1.  Order 1 is piecewise
// constant, order 2 piecewise linear, and so on.
class SplineOrder {
public:
    explicit SplineOrder(int m) : m_(m) {
        if (m < 1) throw std::invalid_argument("spline order must be >= 1");
    }
    int value() const noexcept { return m_; }
    bool operator==(const SplineOrder&) const = default;

private:
    int m_;
};

// Whether constructors enforce membership in the quasi-uniform mesh class
// or merely record the constants.  Relaxed sequences still have to be
// strictly increasing with endpoints 0 and 1.
enum class MeshPolicy { Enforce, Relaxed };

// Knot sequence 0 = kappa_0 < kappa_1 < ... < kappa_K = 1 together with the
// quasi-uniformity constants (c_lower, c_upper).  Membership in the mesh
// class means every gap satisfies c_lower/K <= kappa_j - kappa_{j-1} <= c_upper/K.
class KnotSequence {
public:
    KnotSequence(std::vector<double> knots, double c_lower, double c_upper,
                 MeshPolicy policy = MeshPolicy::Enforce);

    // K+1 equally spaced knots; trivially in the mesh class for c_lower <= 1 <= c_upper.
    static KnotSequence uniform(int intervals, double c_lower = 1.0, double c_upper = 1.0);

    // Clamped extension: knot(j) = 0 for j < 0 and 1 for j > K.
    double knot(int j) const noexcept {
        if (j < 0) return 0.0;
        if (j >= static_cast<int>(knots_.size())) return 1.0;
        return knots_[static_cast<size_t>(j)];
    }

    int intervals() const noexcept { return static_cast<int>(knots_.size()) - 1; }
    const std::vector<double>& raw() const noexcept { return knots_; }
    double c_lower() const noexcept { return c_lower_; }
    double c_upper() const noexcept { return c_upper_; }

    // Gap check against [c_lower/K, c_upper/K], with a relative slack of a
    // few ulps so that sequences generated from the constants themselves
    // do not fail their own validation.
    bool in_mesh_class() const noexcept;

private:
    std::vector<double> knots_;
    double c_lower_;
    double c_upper_;
};

// Design points 0 = x_0 < x_1 < ... < x_n = 1.  The weight of x_i is the
// gap x_{i+1} - x_i with x_{n+1} := 1, so the last point always has weight
// zero and the weights sum to one.  Mesh membership means every gap is at
// most c_omega/n.
class DesignPoints {
public:
    DesignPoints(std::vector<double> points, double c_omega,
                 MeshPolicy policy = MeshPolicy::Enforce);

    static DesignPoints uniform(int n, double c_omega = 1.0);

    int count() const noexcept { return static_cast<int>(points_.size()); }  // n+1
    double point(int i) const { return points_.at(static_cast<size_t>(i)); }
    const std::vector<double>& raw() const noexcept { return points_; }
    const Eigen::VectorXd& weights() const noexcept { return weights_; }
    double c_omega() const noexcept { return c_omega_; }
    bool in_mesh_class() const noexcept;

private:
    std::vector<double> points_;
    Eigen::VectorXd weights_;
    double c_omega_;
};

// Values of all K+p-1 order-p basis functions at x in [0,1], by the
// triangular recursion with the 0/0 := 0 convention.  Intervals are
// half-open except the last, so evaluation at interior knots is
// right-continuous and at x = 1 the last basis function equals 1.
// Throws std::domain_error for x outside [0,1].
Eigen::VectorXd eval_basis(SplineOrder p, const KnotSequence& knots, double x);

// First derivatives of all order-p basis functions (p >= 2), via the
// order-lowering identity
//   B'_{p,k} = (p-1)/(kappa_{k-1}-kappa_{k-p}) B_{p-1,k-1}
//            - (p-1)/(kappa_k-kappa_{k-p+1})   B_{p-1,k},
// where a term is dropped when its basis index leaves 1..K+p-2.  At a knot
// this yields the right-hand derivative (left-hand at x = 1).
Eigen::VectorXd eval_basis_derivative(SplineOrder p, const KnotSequence& knots, double x);

// L1 norm of B_{p,k}: (kappa_k - kappa_{k-p}) / p, for k = 1..K+p-1.
double l1_norm(SplineOrder p, const KnotSequence& knots, int k);

// The weighted least-squares normal matrix and data functional of the
// regression problem: Lambda = K * Xhat' Theta Xhat, ybar = K * Xhat' Theta y,
// where Xhat stacks basis rows at the design points and Theta holds the
// design weights.  Lambda is symmetric positive definite (checked) and
// banded: (Lambda)_{ij} = 0 whenever |i-j| >= m, because the supports of
// B_{m,i} and B_{m,j} then share no interval.
struct DesignSystem {
    SplineOrder m;
    KnotSequence knots;
    DesignPoints design;
    Eigen::MatrixXd Xhat;    // (n+1) x (K+m-1) basis values at design points
    Eigen::VectorXd theta;   // n+1 design weights
    Eigen::MatrixXd Lambda;  // (K+m-1) x (K+m-1)
    Eigen::VectorXd ybar;    // weighted data functional of the y the system was built with

    // K * Xhat' Theta y for a new data vector of length n+1.
    Eigen::VectorXd weighted(const Eigen::VectorXd& y) const;
};

// Builds the design system.  Throws std::invalid_argument when y has the
// wrong length and ConditioningError when Lambda is numerically singular
// (smallest eigenvalue below 1e-12 times the trace), which happens when
// some basis function is never touched by a positively weighted design
// point; the fix is more design points per knot interval, or fewer knots.
DesignSystem build_design_system(SplineOrder m, const KnotSequence& knots,
                                 const DesignPoints& design, const Eigen::VectorXd& y);

} // namespace shapespline
